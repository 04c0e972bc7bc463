#pragma once

/** \file aggregation.hpp
 *  \brief Rank aggregation: turn preference probabilities restricted to a
 *  comparison set into per-document scores and a ranking.
 *
 * Static methods (additive, Bradley-Terry, greedy, PageRank) read p_ij only
 * for pairs (i, j) in the comparison set; a missing p_ij counts as 0.
 * KwikSort is dynamic and issues its own look-ups against the full matrix.
 *
 * Ties in the final score are broken by the smaller pointwise index.
 */

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "sparsepair/model.hpp"

namespace sparsepair {

enum class AggregatorKind { additive, bradley_terry, greedy, pagerank, kwiksort };

/// Which way PageRank mass moves along a compared pair.
enum class PageRankFlow {
    /// Mass flows from d_j to d_i in proportion to p_ij (d_i's win over d_j).
    to_winner,
    /// The recurrence read literally: mass flows from d_j to d_i in
    /// proportion to p_ji, normalized by d_j's sampled out-weight.
    as_written,
};

struct AggregatorSpec {
    AggregatorKind kind = AggregatorKind::greedy;

    double gamma = 0.15;              ///< PageRank teleport weight.
    double pr_tol = 1e-10;            ///< Max-norm change that ends iteration.
    std::size_t pr_max_iter = 1000;
    PageRankFlow pr_flow = PageRankFlow::to_winner;

    double bt_reg = 0.01;             ///< L2 weight on the latent scores.
    double bt_tol = 1e-8;             ///< Gradient 2-norm that ends Newton.
    std::size_t bt_max_iter = 500;
    double bt_initial = 0.0;          ///< Starting value of every latent score.

    std::uint64_t kwiksort_seed = 0;

    /// Throws ParameterError.
    void validate() const;
};

struct AggregationResult {
    Ranking ranking;
    bool converged = true;
    std::size_t iterations = 0;
    /// Preference look-ups consumed: |C| for static methods, the actual
    /// number of pivot comparisons for KwikSort.
    std::size_t comparisons = 0;
};

/// s_i = sum over sampled (i,j) of p_ij + sum over sampled (j,i) of (1 - p_ji).
Ranking aggregate_additive(const PreferenceMatrix& prefs, const ComparisonSet& sample);

/// Maximum-likelihood Bradley-Terry scores on the win directions of the
/// sampled pairs (d_i wins (i,j) iff p_ij >= 0.5) with an L2 penalty
/// bt_reg * |s|^2. Solved by damped Newton iteration; scores are centered
/// to sum to zero. `converged` is false if bt_max_iter was hit first.
AggregationResult aggregate_bradley_terry(const PreferenceMatrix& prefs, const ComparisonSet& sample,
                                          const AggregatorSpec& spec = {});

/// Greedy ordering by potentials t_i = sum_j p_ij - sum_j p_ji: repeatedly
/// take the document of highest potential, give it score |remaining|,
/// and cancel its terms from the others' potentials.
Ranking aggregate_greedy(const PreferenceMatrix& prefs, const ComparisonSet& sample);

/// Weighted PageRank on the comparison graph, iterated from the uniform
/// vector. Nodes without outgoing weight spread their mass uniformly.
/// Scores are non-negative and sum to one.
AggregationResult aggregate_pagerank(const PreferenceMatrix& prefs, const ComparisonSet& sample,
                                     const AggregatorSpec& spec = {});

/// Randomized quicksort on preferences. Every non-pivot document of the
/// current subset is compared once as (pivot, other) and goes below the
/// pivot iff p(pivot, other) >= 0.5. Score of rank n (1-based) is k - n + 1.
AggregationResult kwiksort(const PreferenceMatrix& prefs, std::uint64_t seed);

/// Runs the aggregator named by `spec.kind`. KwikSort ignores `sample`.
AggregationResult aggregate(const PreferenceMatrix& prefs, const ComparisonSet& sample,
                            const AggregatorSpec& spec);

std::string_view aggregator_name(AggregatorKind kind);
/// Accepts the names produced by aggregator_name plus "bt".
std::optional<AggregatorKind> parse_aggregator(std::string_view name);

}  // namespace sparsepair

#pragma once

/** \file evaluation.hpp
 *  \brief Retrieval effectiveness (nDCG) and significance testing over
 *  sweeps of sampled re-ranking runs.
 */

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sparsepair/model.hpp"

namespace sparsepair {

/// Graded relevance judgments, grade >= 0, one per (query, document).
class Qrels {
public:
    using Judgments = std::unordered_map<DocId, int>;

    /// Sets (or replaces) a grade. Throws ValidationError for grade < 0.
    void set(const std::string& query_id, const DocId& doc, int grade);

    std::optional<int> grade(const std::string& query_id, const DocId& doc) const;
    /// nullptr if the query has no judgments.
    const Judgments* judgments(const std::string& query_id) const;
    bool has_positive(const std::string& query_id) const;
    /// Query ids in lexicographic order.
    std::vector<std::string> queries() const;
    std::size_t size() const;

private:
    std::map<std::string, Judgments, std::less<>> by_query_;
};

enum class GainKind {
    exponential,  ///< 2^grade - 1
    linear,       ///< grade
};

struct NdcgOptions {
    std::size_t depth = 10;
    /// Drop unjudged documents and condense ranks before truncation.
    bool judged_only = true;
    GainKind gain = GainKind::exponential;
};

/// nDCG@depth with discount 1/log2(rank + 1). The ideal ordering uses every
/// judgment of the query. nullopt when the query has no positive judgment
/// or nothing is left of the ranking after filtering.
std::optional<double> ndcg_at(const Ranking& ranking, const Qrels& qrels, const NdcgOptions& options = {});

struct SignificanceResult {
    double t_statistic = 0.0;
    double p_value = 1.0;      ///< two-sided
    double corrected_p = 1.0;  ///< min(1, p_value * test_count)
    std::size_t n = 0;
    double mean_difference = 0.0;  ///< mean of a - b
    bool significant = false;      ///< corrected_p < alpha
};

/// Two-sided paired Student's t-test on a - b with n - 1 degrees of freedom
/// and Bonferroni correction for `test_count` tests. All-zero differences
/// give t = 0, p = 1. Throws InputError unless |a| = |b| >= 2.
SignificanceResult paired_t_test(std::span<const double> a, std::span<const double> b,
                                 std::size_t test_count = 1, double alpha = 0.05);

/// Regularized incomplete beta I_x(a, b) by continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

/// P(|T| >= |t|) for Student's t with `dof` degrees of freedom.
double student_t_two_sided_p(double t, double dof);

/// Neumaier-compensated sum and mean (0 for an empty span).
double compensated_sum(std::span<const double> values);
double compensated_mean(std::span<const double> values);

/// Kendall tau-a between two orderings of the same indices.
/// Throws InputError if they are not permutations of each other.
double kendall_tau(std::span<const DocIndex> a, std::span<const DocIndex> b);

// Sweep results.

/// One query inside one run.
struct QueryOutcome {
    std::string query_id;
    std::size_t k = 0;
    SamplerSpec sampler = FullComparison{};  ///< parameters realized for this query
    std::uint64_t comparisons = 0;
    double ndcg = 0.0;
};

/// One (sampler, aggregator, rate, repetition) run over all queries.
struct RunRecord {
    std::string corpus_tag;
    std::string sampler;     ///< "none" for unsampled baselines
    std::string aggregator;
    double rate = 1.0;       ///< nominal grid rate
    std::size_t repetition = 0;
    std::vector<QueryOutcome> queries;

    double mean_ndcg() const;
    std::uint64_t comparisons() const;
    /// sum |C| / sum (k^2 - k) over the queries.
    double effective_rate() const;
};

struct SweepReport {
    std::vector<RunRecord> runs;
};

struct MinimalRate {
    double rate = 1.0;
    double delta = 0.0;          ///< mean nDCG of the selected run minus the baseline
    bool below_full = false;     ///< false when no sampled rate qualified
    SignificanceResult test;
};

/// Smallest nominal rate whose run is not significantly worse than the
/// unsampled baseline of the same aggregator (paired t-test over queries,
/// Bonferroni factor `test_count`). With several repetitions per rate the
/// least effective one is tested. Returns rate 1.0 when no rate qualifies.
/// Throws InputError if the baseline is missing or the runs cover
/// different queries.
MinimalRate minimal_safe_rate(const SweepReport& report, std::string_view aggregator, std::string_view sampler,
                              std::size_t test_count = 19, double alpha = 0.05);

}  // namespace sparsepair

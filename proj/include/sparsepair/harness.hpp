#pragma once

/** \file harness.hpp
 *  \brief Experiment orchestration: single re-ranking runs, sampling-rate
 *  sweeps, skip-size grid search, diagnostics reports and minimal-rate
 *  tables.
 *
 * Work is split into independent (run, query) units executed with OpenMP.
 * Each unit is a pure function of its inputs and derived seeds, and results
 * are placed in fixed slots, so output does not depend on the worker count.
 */

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sparsepair/aggregation.hpp"
#include "sparsepair/evaluation.hpp"
#include "sparsepair/model.hpp"

namespace sparsepair {

/// Preference matrices reindexed to their pointwise lists, plus judgments.
struct Corpus {
    std::vector<PreferenceMatrix> prefs;
    std::vector<TopKList> pointwise;
    Qrels qrels;
};

/// Pairs every pointwise list with its cached matrix (reindexed to the
/// list's order). Throws InputError naming the query when the cache lacks
/// it or holds a different document set or k.
Corpus align_corpus(std::span<const PreferenceMatrix> cache, std::span<const TopKList> pointwise, Qrels qrels = {});

enum class SamplerMethod { none, global_random, neighborhood_window, skip_window };

std::string_view sampler_method_name(SamplerMethod method);
std::optional<SamplerMethod> parse_sampler_method(std::string_view name);

/// Sampler parameters independent of the query: realized per query from
/// its k and a derived seed.
struct SamplingPlan {
    SamplerMethod method = SamplerMethod::none;
    double rate = 1.0;                  ///< G-Random rate; window rate if `window` unset
    std::optional<std::size_t> window;  ///< explicit m for window samplers
    std::size_t skip = 1;               ///< S-Window lambda

    SamplerSpec realize(std::size_t k, std::uint64_t seed) const;
};

struct RerankOutcome {
    Ranking ranking;
    SamplerSpec sampler;
    std::uint64_t comparisons = 0;
    bool converged = true;
};

/// sample -> restrict -> aggregate for every query, repetition 0.
/// The output rankings carry `tag`.
std::vector<RerankOutcome> rerank(const Corpus& corpus, const SamplingPlan& plan, const AggregatorSpec& aggregator,
                                  std::uint64_t base_seed, const std::string& tag = "sparsepairrank",
                                  int workers = 0);

/// Nominal grid 0.05, 0.10, ..., 0.95.
std::vector<double> default_rates();

struct SweepConfig {
    std::string corpus_tag = "corpus";
    std::vector<SamplerMethod> samplers;
    std::vector<AggregatorSpec> aggregators;
    std::vector<double> rates = default_rates();
    std::size_t repetitions = 10;
    std::size_t skip = 7;  ///< S-Window lambda
    /// Per-rate lambda (e.g. grid-search winners); rates match within 1e-9.
    std::vector<std::pair<double, std::size_t>> skip_by_rate;
    std::uint64_t base_seed = 0;
    int workers = 0;
    NdcgOptions ndcg;

    std::size_t skip_for(double rate) const;
};

/// One unsampled baseline run per aggregator, then every (sampler,
/// aggregator, rate) combination; G-Random runs `repetitions` times with
/// seeds derived from (base_seed, query, repetition), window samplers once
/// with m = window_for_rate(k, rate). KwikSort only gets its baseline.
/// Queries without a positive judgment are left out.
SweepReport run_sweep(const Corpus& corpus, const SweepConfig& config);

/// Number of (run) records `run_sweep` produces for `config`.
std::size_t expected_run_count(const SweepConfig& config);

struct GridConfig {
    std::vector<double> rates = default_rates();
    std::size_t lambda_min = 2;
    std::size_t lambda_max = 15;
    std::size_t folds = 5;
    AggregatorSpec aggregator;
    std::uint64_t base_seed = 0;
    int workers = 0;
    NdcgOptions ndcg;
};

struct FoldChoice {
    std::size_t fold = 0;
    std::size_t lambda = 0;
    double train_ndcg = 0.0;    ///< mean over the other folds (selection criterion)
    double heldout_ndcg = 0.0;  ///< mean over this fold
};

struct RateChoice {
    double rate = 0.0;
    std::vector<FoldChoice> folds;
    std::size_t modal_lambda = 0;  ///< most frequent fold winner, smaller on ties
    std::vector<std::pair<std::size_t, double>> mean_ndcg;  ///< per lambda, all queries
};

/// Five-fold cross-validated S-Window skip selection per rate: queries are
/// shuffled into folds; per fold the lambda with the best mean nDCG on the
/// remaining folds wins (smaller lambda on ties) and is scored on the fold.
/// Throws InputError with fewer evaluable queries than folds.
std::vector<RateChoice> grid_lambda(const Corpus& corpus, const GridConfig& config);

struct Summary {
    double mean = 0.0;
    double std = 0.0;  ///< sample standard deviation
    double min = 0.0;
    double max = 0.0;
    std::size_t count = 0;
};

Summary summarize(std::span<const double> values);

struct QueryDiagnostics {
    std::string query_id;
    std::size_t k = 0;
    double consistency = 0.0;
    std::optional<double> transitivity;
    std::vector<double> complementarity;  ///< at DiagnosticsReport::epsilons
};

struct DiagnosticsReport {
    std::vector<double> epsilons;  ///< 0.05, 0.10, ..., 0.50
    std::vector<QueryDiagnostics> queries;
    Summary consistency;
    Summary transitivity;
    std::vector<double> mean_complementarity;
    /// Probability histogram, 20 equal bins on [0, 1]; 1.0 goes in the last.
    std::vector<std::uint64_t> histogram;
};

DiagnosticsReport diagnose(std::span<const PreferenceMatrix> matrices, int workers = 0);
nlohmann::json to_json(const DiagnosticsReport& report);

struct SignificanceRow {
    std::string aggregator;
    double baseline_ndcg = 0.0;
    std::vector<std::pair<std::string, MinimalRate>> by_sampler;
};

/// minimal_safe_rate for every (aggregator, sampler) present in the sweep.
std::vector<SignificanceRow> significance_table(const SweepReport& report, std::size_t test_count = 19);
std::string format_significance_table(std::span<const SignificanceRow> rows);
nlohmann::json to_json(std::span<const SignificanceRow> rows);

/// Largest re-ranking depth k whose sampled comparisons, rate * (k^2 - k),
/// fit into `budget`.
std::size_t depth_for_budget(std::uint64_t budget, double rate);

}  // namespace sparsepair

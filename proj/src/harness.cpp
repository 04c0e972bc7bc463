#include "sparsepair/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sparsepair/diagnostics.hpp"
#include "sparsepair/errors.hpp"
#include "sparsepair/random.hpp"
#include "sparsepair/sampling.hpp"

namespace sparsepair {

namespace {

int team_size(int workers) {
#ifdef _OPENMP
    return workers > 0 ? workers : omp_get_max_threads();
#else
    (void)workers;
    return 1;
#endif
}

/// Runs body(n) for n in [0, count) on `workers` threads and rethrows the
/// first exception (lowest n) after the loop.
template <typename Body>
void parallel_for(std::size_t count, int workers, Body&& body) {
    std::vector<std::exception_ptr> errors(count);
    [[maybe_unused]] const int team = team_size(workers);
#pragma omp parallel for schedule(dynamic) num_threads(team)
    for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(count); ++n) {
        try {
            body(static_cast<std::size_t>(n));
        } catch (...) {
            errors[static_cast<std::size_t>(n)] = std::current_exception();
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

RerankOutcome run_unit(const PreferenceMatrix& prefs, const SamplingPlan& plan, AggregatorSpec aggregator,
                       std::uint64_t base_seed, std::size_t repetition) {
    const auto spec =
        plan.realize(prefs.k(), derive_seed(base_seed, prefs.query_id(), repetition, SeedStream::sampler));
    const auto set = sample(spec, prefs.k());
    aggregator.kwiksort_seed = derive_seed(base_seed, prefs.query_id(), repetition, SeedStream::kwiksort);
    auto result = aggregate(prefs, set, aggregator);
    return {std::move(result.ranking), spec, result.comparisons, result.converged};
}

std::vector<std::size_t> evaluable_queries(const Corpus& corpus, const NdcgOptions& options) {
    std::vector<std::size_t> out;
    for (std::size_t q = 0; q < corpus.pointwise.size(); ++q) {
        const auto& list = corpus.pointwise[q];
        std::vector<double> scores(list.k());
        for (std::size_t r = 0; r < list.k(); ++r) scores[r] = static_cast<double>(list.k() - r);
        const auto probe = Ranking::from_scores(list.query_id(), list.docs(), scores, "probe");
        if (ndcg_at(probe, corpus.qrels, options)) out.push_back(q);
    }
    return out;
}

}  // namespace

Corpus align_corpus(std::span<const PreferenceMatrix> cache, std::span<const TopKList> pointwise, Qrels qrels) {
    std::unordered_map<std::string_view, const PreferenceMatrix*> by_query;
    for (const auto& m : cache) by_query.emplace(m.query_id(), &m);
    Corpus corpus;
    corpus.qrels = std::move(qrels);
    for (const auto& list : pointwise) {
        auto it = by_query.find(list.query_id());
        if (it == by_query.end()) {
            throw InputError(fmt::format("query {}: no preferences in the cache", list.query_id()));
        }
        corpus.prefs.push_back(it->second->aligned_to(list));
        corpus.pointwise.push_back(list);
    }
    return corpus;
}

std::string_view sampler_method_name(SamplerMethod method) {
    switch (method) {
        case SamplerMethod::none: return "none";
        case SamplerMethod::global_random: return "g-random";
        case SamplerMethod::neighborhood_window: return "n-window";
        case SamplerMethod::skip_window: return "s-window";
    }
    return "unknown";
}

std::optional<SamplerMethod> parse_sampler_method(std::string_view name) {
    for (auto m : {SamplerMethod::none, SamplerMethod::global_random, SamplerMethod::neighborhood_window,
                   SamplerMethod::skip_window}) {
        if (name == sampler_method_name(m)) return m;
    }
    return std::nullopt;
}

SamplerSpec SamplingPlan::realize(std::size_t k, std::uint64_t seed) const {
    switch (method) {
        case SamplerMethod::none: return FullComparison{};
        case SamplerMethod::global_random: return GlobalRandom{rate, seed};
        case SamplerMethod::neighborhood_window: return NeighborhoodWindow{window.value_or(window_for_rate(k, rate))};
        case SamplerMethod::skip_window: return SkipWindow{window.value_or(window_for_rate(k, rate)), skip};
    }
    throw ParameterError("unknown sampler");
}

std::vector<RerankOutcome> rerank(const Corpus& corpus, const SamplingPlan& plan, const AggregatorSpec& aggregator,
                                  std::uint64_t base_seed, const std::string& tag, int workers) {
    aggregator.validate();
    std::vector<std::optional<RerankOutcome>> slots(corpus.prefs.size());
    parallel_for(slots.size(), workers, [&](std::size_t q) {
        auto outcome = run_unit(corpus.prefs[q], plan, aggregator, base_seed, 0);
        outcome.ranking = outcome.ranking.retagged(tag);
        slots[q] = std::move(outcome);
    });
    std::vector<RerankOutcome> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

std::vector<double> default_rates() {
    std::vector<double> rates;
    for (int n = 1; n <= 19; ++n) rates.push_back(n / 20.0);
    return rates;
}

namespace {

struct RunPlan {
    SamplerMethod method;
    AggregatorSpec aggregator;
    double rate;
    std::size_t repetition;
};

std::vector<RunPlan> plan_runs(const SweepConfig& config) {
    std::vector<RunPlan> plans;
    for (const auto& agg : config.aggregators) plans.push_back({SamplerMethod::none, agg, 1.0, 0});
    for (auto method : config.samplers) {
        if (method == SamplerMethod::none) continue;
        const std::size_t reps = method == SamplerMethod::global_random ? config.repetitions : 1;
        for (const auto& agg : config.aggregators) {
            if (agg.kind == AggregatorKind::kwiksort) continue;
            for (double rate : config.rates) {
                for (std::size_t rep = 0; rep < reps; ++rep) plans.push_back({method, agg, rate, rep});
            }
        }
    }
    return plans;
}

}  // namespace

std::size_t SweepConfig::skip_for(double rate) const {
    for (const auto& [r, lambda] : skip_by_rate) {
        if (std::abs(r - rate) <= 1e-9) return lambda;
    }
    return skip;
}

std::size_t expected_run_count(const SweepConfig& config) { return plan_runs(config).size(); }

SweepReport run_sweep(const Corpus& corpus, const SweepConfig& config) {
    for (const auto& agg : config.aggregators) agg.validate();
    if (config.repetitions == 0) throw ParameterError("repetitions must be positive");
    const auto queries = evaluable_queries(corpus, config.ndcg);
    if (queries.empty()) throw InputError("no query has a positive relevance judgment");
    const auto plans = plan_runs(config);

    std::vector<QueryOutcome> slots(plans.size() * queries.size());
    parallel_for(slots.size(), config.workers, [&](std::size_t unit) {
        const auto& plan = plans[unit / queries.size()];
        const auto& prefs = corpus.prefs[queries[unit % queries.size()]];
        const SamplingPlan sampling{plan.method, plan.rate, std::nullopt, config.skip_for(plan.rate)};
        const auto outcome = run_unit(prefs, sampling, plan.aggregator, config.base_seed, plan.repetition);
        slots[unit] = {prefs.query_id(), prefs.k(), outcome.sampler, outcome.comparisons,
                       *ndcg_at(outcome.ranking, corpus.qrels, config.ndcg)};
    });

    SweepReport report;
    report.runs.reserve(plans.size());
    for (std::size_t r = 0; r < plans.size(); ++r) {
        RunRecord run;
        run.corpus_tag = config.corpus_tag;
        run.sampler = std::string(sampler_method_name(plans[r].method));
        run.aggregator = std::string(aggregator_name(plans[r].aggregator.kind));
        run.rate = plans[r].rate;
        run.repetition = plans[r].repetition;
        auto first = slots.begin() + static_cast<std::ptrdiff_t>(r * queries.size());
        run.queries.assign(std::make_move_iterator(first),
                           std::make_move_iterator(first + static_cast<std::ptrdiff_t>(queries.size())));
        report.runs.push_back(std::move(run));
    }
    return report;
}

std::vector<RateChoice> grid_lambda(const Corpus& corpus, const GridConfig& config) {
    config.aggregator.validate();
    if (config.folds < 2) throw ParameterError("need at least 2 folds");
    if (config.lambda_min < 1 || config.lambda_max < config.lambda_min) {
        throw ParameterError("invalid lambda range");
    }
    const auto queries = evaluable_queries(corpus, config.ndcg);
    if (queries.size() < config.folds) {
        throw InputError(fmt::format("{} evaluable queries cannot be split into {} folds", queries.size(),
                                     config.folds));
    }

    // A lambda that is a multiple of some query's k would leave that query
    // without comparisons; such lambdas are not part of the grid.
    std::vector<std::size_t> lambdas;
    for (std::size_t l = config.lambda_min; l <= config.lambda_max; ++l) {
        const bool usable = std::all_of(queries.begin(), queries.end(),
                                        [&](std::size_t q) { return l % corpus.prefs[q].k() != 0; });
        if (usable) lambdas.push_back(l);
    }
    if (lambdas.empty()) throw ParameterError("no usable lambda in the grid");

    std::vector<std::size_t> fold_of(queries.size());
    {
        std::vector<std::size_t> shuffled(queries.size());
        std::iota(shuffled.begin(), shuffled.end(), std::size_t{0});
        Rng rng(derive_seed(config.base_seed, "folds", 0, SeedStream::folds));
        for (std::size_t n = shuffled.size(); n > 1; --n) std::swap(shuffled[n - 1], shuffled[rng.uniform_index(n)]);
        for (std::size_t pos = 0; pos < shuffled.size(); ++pos) fold_of[shuffled[pos]] = pos % config.folds;
    }

    const std::size_t nl = lambdas.size();
    const std::size_t nq = queries.size();
    std::vector<RateChoice> out;
    for (double rate : config.rates) {
        std::vector<double> ndcg(nl * nq);
        parallel_for(ndcg.size(), config.workers, [&](std::size_t unit) {
            const std::size_t li = unit / nq;
            const auto& prefs = corpus.prefs[queries[unit % nq]];
            const SamplingPlan plan{SamplerMethod::skip_window, rate, std::nullopt, lambdas[li]};
            const auto outcome = run_unit(prefs, plan, config.aggregator, config.base_seed, 0);
            ndcg[unit] = *ndcg_at(outcome.ranking, corpus.qrels, config.ndcg);
        });

        auto mean_over = [&](std::size_t li, auto&& keep) {
            std::vector<double> values;
            for (std::size_t q = 0; q < nq; ++q) {
                if (keep(q)) values.push_back(ndcg[li * nq + q]);
            }
            return compensated_mean(values);
        };

        RateChoice choice;
        choice.rate = rate;
        for (std::size_t li = 0; li < nl; ++li) {
            choice.mean_ndcg.emplace_back(lambdas[li], mean_over(li, [](std::size_t) { return true; }));
        }
        std::map<std::size_t, std::size_t> wins;
        for (std::size_t f = 0; f < config.folds; ++f) {
            FoldChoice best;
            best.fold = f;
            bool have = false;
            for (std::size_t li = 0; li < nl; ++li) {
                const double train = mean_over(li, [&](std::size_t q) { return fold_of[q] != f; });
                if (!have || train > best.train_ndcg) {
                    best.lambda = lambdas[li];
                    best.train_ndcg = train;
                    best.heldout_ndcg = mean_over(li, [&](std::size_t q) { return fold_of[q] == f; });
                    have = true;
                }
            }
            ++wins[best.lambda];
            choice.folds.push_back(best);
        }
        std::size_t top = 0;
        for (const auto& [lambda, count] : wins) {
            if (count > top) {
                top = count;
                choice.modal_lambda = lambda;
            }
        }
        out.push_back(std::move(choice));
    }
    return out;
}

Summary summarize(std::span<const double> values) {
    Summary s;
    s.count = values.size();
    if (values.empty()) return s;
    s.mean = compensated_mean(values);
    s.min = *std::min_element(values.begin(), values.end());
    s.max = *std::max_element(values.begin(), values.end());
    if (values.size() > 1) {
        std::vector<double> sq;
        sq.reserve(values.size());
        for (double v : values) sq.push_back((v - s.mean) * (v - s.mean));
        s.std = std::sqrt(compensated_sum(sq) / static_cast<double>(values.size() - 1));
    }
    return s;
}

DiagnosticsReport diagnose(std::span<const PreferenceMatrix> matrices, int workers) {
    DiagnosticsReport report;
    for (int n = 1; n <= 10; ++n) report.epsilons.push_back(n / 20.0);
    report.queries.resize(matrices.size());
    std::vector<std::vector<std::uint64_t>> histograms(matrices.size());
    parallel_for(matrices.size(), workers, [&](std::size_t q) {
        const auto& m = matrices[q];
        auto& d = report.queries[q];
        d.query_id = m.query_id();
        d.k = m.k();
        d.consistency = consistency(m);
        d.transitivity = transitivity(m, 1);
        for (double eps : report.epsilons) d.complementarity.push_back(epsilon_complementarity(m, eps));
        auto& h = histograms[q];
        h.assign(20, 0);
        for (std::size_t i = 0; i < m.k(); ++i) {
            for (std::size_t j = 0; j < m.k(); ++j) {
                if (i != j) ++h[std::min<std::size_t>(19, static_cast<std::size_t>(m(i, j) * 20.0))];
            }
        }
    });

    report.histogram.assign(20, 0);
    for (const auto& h : histograms) {
        for (std::size_t b = 0; b < 20; ++b) report.histogram[b] += h[b];
    }
    std::vector<double> cons;
    std::vector<double> trans;
    for (const auto& d : report.queries) {
        cons.push_back(d.consistency);
        if (d.transitivity) trans.push_back(*d.transitivity);
    }
    report.consistency = summarize(cons);
    report.transitivity = summarize(trans);
    for (std::size_t e = 0; e < report.epsilons.size(); ++e) {
        std::vector<double> values;
        for (const auto& d : report.queries) values.push_back(d.complementarity[e]);
        report.mean_complementarity.push_back(compensated_mean(values));
    }
    return report;
}

namespace {

nlohmann::json summary_json(const Summary& s) {
    return {{"mean", s.mean}, {"std", s.std}, {"min", s.min}, {"max", s.max}, {"count", s.count}};
}

}  // namespace

nlohmann::json to_json(const DiagnosticsReport& report) {
    nlohmann::json queries = nlohmann::json::array();
    for (const auto& d : report.queries) {
        queries.push_back({{"query_id", d.query_id},
                           {"k", d.k},
                           {"consistency", d.consistency},
                           {"transitivity", d.transitivity ? nlohmann::json(*d.transitivity) : nlohmann::json()},
                           {"complementarity", d.complementarity}});
    }
    nlohmann::json bins = nlohmann::json::array();
    for (std::size_t b = 0; b < report.histogram.size(); ++b) {
        bins.push_back({{"lower", b / 20.0}, {"upper", (b + 1) / 20.0}, {"count", report.histogram[b]}});
    }
    return {{"consistency", summary_json(report.consistency)},
            {"transitivity", summary_json(report.transitivity)},
            {"epsilons", report.epsilons},
            {"mean_complementarity", report.mean_complementarity},
            {"histogram", bins},
            {"queries", queries}};
}

std::vector<SignificanceRow> significance_table(const SweepReport& report, std::size_t test_count) {
    std::vector<std::string> aggregators;
    std::vector<std::string> samplers;
    for (const auto& run : report.runs) {
        auto& list = run.sampler == "none" ? aggregators : samplers;
        const auto& name = run.sampler == "none" ? run.aggregator : run.sampler;
        if (std::find(list.begin(), list.end(), name) == list.end()) list.push_back(name);
    }
    std::vector<SignificanceRow> rows;
    for (const auto& agg : aggregators) {
        SignificanceRow row;
        row.aggregator = agg;
        for (const auto& run : report.runs) {
            if (run.sampler == "none" && run.aggregator == agg) {
                row.baseline_ndcg = run.mean_ndcg();
                break;
            }
        }
        for (const auto& s : samplers) {
            const bool present = std::any_of(report.runs.begin(), report.runs.end(), [&](const RunRecord& run) {
                return run.sampler == s && run.aggregator == agg;
            });
            if (present) row.by_sampler.emplace_back(s, minimal_safe_rate(report, agg, s, test_count));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string format_significance_table(std::span<const SignificanceRow> rows) {
    std::vector<std::string> samplers;
    for (const auto& row : rows) {
        for (const auto& [s, _] : row.by_sampler) {
            if (std::find(samplers.begin(), samplers.end(), s) == samplers.end()) samplers.push_back(s);
        }
    }
    std::string out = fmt::format("{:<16} {:>8}", "aggregator", "ndcg@10");
    for (const auto& s : samplers) out += fmt::format("  {:>16}", s);
    out += '\n';
    for (const auto& row : rows) {
        out += fmt::format("{:<16} {:>8.3f}", row.aggregator, row.baseline_ndcg);
        for (const auto& s : samplers) {
            auto it = std::find_if(row.by_sampler.begin(), row.by_sampler.end(),
                                   [&](const auto& entry) { return entry.first == s; });
            if (it == row.by_sampler.end()) {
                out += fmt::format("  {:>16}", "-");
            } else {
                out += fmt::format("  {:>16}", fmt::format("{:.2f} ({:+.3f})", it->second.rate, it->second.delta));
            }
        }
        out += '\n';
    }
    return out;
}

nlohmann::json to_json(std::span<const SignificanceRow> rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& row : rows) {
        nlohmann::json samplers = nlohmann::json::object();
        for (const auto& [s, m] : row.by_sampler) {
            samplers[s] = {{"rate", m.rate},
                           {"delta", m.delta},
                           {"below_full", m.below_full},
                           {"p_value", m.test.p_value},
                           {"corrected_p", m.test.corrected_p}};
        }
        out.push_back({{"aggregator", row.aggregator}, {"baseline_ndcg", row.baseline_ndcg}, {"samplers", samplers}});
    }
    return out;
}

std::size_t depth_for_budget(std::uint64_t budget, double rate) {
    if (!(rate > 0.0 && rate <= 1.0)) throw ParameterError(fmt::format("rate must lie in (0, 1], got {}", rate));
    std::size_t k = 2;
    while (rate * static_cast<double>(all_pairs_count(k + 1)) <= static_cast<double>(budget) + 1e-9) ++k;
    return k;
}

}  // namespace sparsepair

// sparsepair: command-line front end for sparse pairwise re-ranking
// experiments. Every subcommand reads plain files, writes to --out ("-" is
// stdout) and exits 0 on success. Failures print one line to stderr:
//   1 internal error, 2 usage, 3 bad input file, 4 bad parameter.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "sparsepair/aggregation.hpp"
#include "sparsepair/errors.hpp"
#include "sparsepair/harness.hpp"
#include "sparsepair/io.hpp"
#include "sparsepair/sampling.hpp"
#include "sparsepair/simulation.hpp"

namespace fs = std::filesystem;
using namespace sparsepair;

namespace {

constexpr int exit_internal = 1;
constexpr int exit_usage = 2;
constexpr int exit_input = 3;
constexpr int exit_parameter = 4;

// Options every subcommand carries.
struct Common {
    std::uint64_t seed = 0;
    std::string out = "-";
    std::string format;
    int workers = 0;
};

void add_common(CLI::App* cmd, Common& c, std::vector<std::string> formats) {
    cmd->add_option("--seed", c.seed, "Base seed for all derived randomness")->capture_default_str();
    cmd->add_option("--out", c.out, "Output path, '-' for stdout")->capture_default_str();
    c.format = formats.front();
    cmd->add_option("--format", c.format, "Output format")
        ->check(CLI::IsMember(formats))
        ->capture_default_str();
    cmd->add_option("--workers", c.workers, "OpenMP threads, 0 = runtime default")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
}

// Writes `text` to --out. Files are written whole so a failed run leaves no
// partial report behind.
void emit(const std::string& out, const std::string& text) {
    if (out == "-") {
        std::cout << text << std::flush;
        return;
    }
    const fs::path path(out);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream file(path, std::ios::binary);
    if (!file) throw InputError(fmt::format("cannot open '{}' for writing", out));
    file << text;
    if (!file) throw InputError(fmt::format("failed writing '{}'", out));
}

// Aggregator flags shared by rerank, sweep and grid-lambda.
struct AggregatorFlags {
    double gamma = 0.15;
    double bt_reg = 0.01;
    std::string pr_flow = "to-winner";
};

void add_aggregator_flags(CLI::App* cmd, AggregatorFlags& a) {
    cmd->add_option("--gamma", a.gamma, "PageRank teleport weight")->capture_default_str();
    cmd->add_option("--bt-reg", a.bt_reg, "Bradley-Terry L2 weight")->capture_default_str();
    cmd->add_option("--pagerank-flow", a.pr_flow, "Direction of PageRank mass along a pair")
        ->check(CLI::IsMember({"to-winner", "as-written"}))
        ->capture_default_str();
}

AggregatorSpec make_aggregator(const std::string& name, const AggregatorFlags& flags) {
    const auto kind = parse_aggregator(name);
    if (!kind) throw ParameterError(fmt::format("unknown aggregator '{}'", name));
    AggregatorSpec spec;
    spec.kind = *kind;
    spec.gamma = flags.gamma;
    spec.bt_reg = flags.bt_reg;
    spec.pr_flow = flags.pr_flow == "as-written" ? PageRankFlow::as_written : PageRankFlow::to_winner;
    spec.validate();
    return spec;
}

SamplerMethod make_sampler(const std::string& name) {
    const auto method = parse_sampler_method(name);
    if (!method) throw ParameterError(fmt::format("unknown sampler '{}'", name));
    return *method;
}

std::vector<TopKList> to_lists(const std::vector<Ranking>& rankings) {
    std::vector<TopKList> lists;
    lists.reserve(rankings.size());
    for (const auto& r : rankings) lists.push_back(to_topk(r));
    return lists;
}

Qrels load_qrels(const std::string& path) {
    auto file = read_qrels(path);
    for (const auto& w : file.warnings) std::cerr << "sparsepair: warning: " << w << '\n';
    return std::move(file.qrels);
}

Corpus load_corpus(const std::string& prefs, const std::string& run, const std::string& qrels) {
    const auto cache = read_preference_cache(prefs);
    const auto lists = to_lists(read_run(run));
    return align_corpus(cache, lists, qrels.empty() ? Qrels{} : load_qrels(qrels));
}

// "0.25=3" -> {0.25, 3}.
std::pair<double, std::size_t> parse_rate_skip(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParameterError(fmt::format("expected RATE=LAMBDA, got '{}'", text));
    try {
        std::size_t used = 0;
        const double rate = std::stod(text.substr(0, eq), &used);
        if (used != eq) throw std::invalid_argument("rate");
        const auto skip_text = text.substr(eq + 1);
        const unsigned long long skip = std::stoull(skip_text, &used);
        if (used != skip_text.size()) throw std::invalid_argument("lambda");
        return {rate, static_cast<std::size_t>(skip)};
    } catch (const std::logic_error&) {
        throw ParameterError(fmt::format("expected RATE=LAMBDA, got '{}'", text));
    }
}

nlohmann::json grid_json(const std::vector<RateChoice>& choices) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& c : choices) {
        nlohmann::json folds = nlohmann::json::array();
        for (const auto& f : c.folds) {
            folds.push_back({{"fold", f.fold},
                             {"lambda", f.lambda},
                             {"train_ndcg", f.train_ndcg},
                             {"heldout_ndcg", f.heldout_ndcg}});
        }
        nlohmann::json means = nlohmann::json::object();
        for (const auto& [lambda, ndcg] : c.mean_ndcg) means[std::to_string(lambda)] = ndcg;
        out.push_back({{"rate", c.rate}, {"modal_lambda", c.modal_lambda}, {"folds", folds}, {"mean_ndcg", means}});
    }
    return out;
}

std::string grid_text(const std::vector<RateChoice>& choices) {
    std::string text = "rate   lambda  folds\n";
    for (const auto& c : choices) {
        std::string folds;
        for (const auto& f : c.folds) folds += fmt::format(" {}", f.lambda);
        text += fmt::format("{:<6.2f} {:<7}{}\n", c.rate, c.modal_lambda, folds);
    }
    return text;
}

// Reads per-rate lambdas from a grid-lambda JSON report.
std::vector<std::pair<double, std::size_t>> read_grid_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError(fmt::format("cannot open '{}'", path));
    std::vector<std::pair<double, std::size_t>> out;
    try {
        const auto doc = nlohmann::json::parse(in);
        for (const auto& entry : doc) {
            out.emplace_back(entry.at("rate").get<double>(), entry.at("modal_lambda").get<std::size_t>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(fmt::format("{}: not a grid-lambda report ({})", path, e.what()));
    }
    return out;
}

std::string diagnostics_text(const DiagnosticsReport& r) {
    auto line = [](const char* name, const Summary& s) {
        return fmt::format("{:<14} mean {:.4f}  std {:.4f}  min {:.4f}  max {:.4f}  n {}\n", name, s.mean, s.std,
                           s.min, s.max, s.count);
    };
    std::string text = line("consistency", r.consistency) + line("transitivity", r.transitivity);
    text += "complementarity\n";
    for (std::size_t e = 0; e < r.epsilons.size(); ++e) {
        text += fmt::format("  eps {:.2f}  {:.4f}\n", r.epsilons[e], r.mean_complementarity[e]);
    }
    text += "histogram\n";
    const double width = 1.0 / static_cast<double>(r.histogram.size());
    for (std::size_t b = 0; b < r.histogram.size(); ++b) {
        text += fmt::format("  [{:.2f}, {:.2f}{}  {}\n", width * static_cast<double>(b),
                            width * static_cast<double>(b + 1), b + 1 == r.histogram.size() ? "]" : ")",
                            r.histogram[b]);
    }
    text += "query          k    consistency  transitivity\n";
    for (const auto& q : r.queries) {
        text += fmt::format("{:<14} {:<4} {:<12.4f} {}\n", q.query_id, q.k, q.consistency,
                            q.transitivity ? fmt::format("{:.4f}", *q.transitivity) : std::string("n/a"));
    }
    return text;
}

std::string run_text(std::span<const Ranking> rankings) {
    std::ostringstream out;
    write_run(out, rankings);
    return out.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse pairwise re-ranking: sampling, aggregation, diagnostics and sweeps", "sparsepair"};
    app.set_config("--config", "", "TOML/INI file; keys mirror the long flags, one [section] per subcommand");
    app.require_subcommand(1);

    // rerank
    Common rr;
    AggregatorFlags rr_agg;
    std::string rr_prefs, rr_run, rr_sampler = "none", rr_aggregator = "greedy", rr_tag = "sparsepairrank";
    double rr_rate = 1.0;
    std::optional<std::size_t> rr_window;
    std::size_t rr_skip = 7;
    auto* rerank_cmd = app.add_subcommand("rerank", "Re-rank a pointwise run with cached preferences");
    add_common(rerank_cmd, rr, {"trec"});
    rerank_cmd->add_option("--prefs", rr_prefs, "Preference cache (CSV)")->required()->check(CLI::ExistingFile);
    rerank_cmd->add_option("--run", rr_run, "Pointwise run (TREC)")->required()->check(CLI::ExistingFile);
    rerank_cmd->add_option("--sampler", rr_sampler, "none | g-random | n-window | s-window")->capture_default_str();
    rerank_cmd->add_option("--aggregator", rr_aggregator, "additive | bradley-terry | greedy | pagerank | kwiksort")
        ->capture_default_str();
    rerank_cmd->add_option("--rate", rr_rate, "Sampling rate")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    rerank_cmd->add_option("--window", rr_window, "Window size m (overrides --rate for window samplers)");
    rerank_cmd->add_option("--skip", rr_skip, "S-Window lambda")->capture_default_str();
    rerank_cmd->add_option("--tag", rr_tag, "Run tag")->capture_default_str();
    add_aggregator_flags(rerank_cmd, rr_agg);

    // sweep
    Common sw;
    AggregatorFlags sw_agg;
    std::string sw_prefs, sw_run, sw_qrels, sw_tag = "corpus", sw_skip_from;
    std::vector<std::string> sw_samplers = {"g-random", "n-window", "s-window"};
    std::vector<std::string> sw_aggregators = {"additive", "bradley-terry", "greedy", "pagerank"};
    std::vector<std::string> sw_skip_by_rate;
    std::vector<double> sw_rates = default_rates();
    std::size_t sw_reps = 10, sw_skip = 7;
    auto* sweep_cmd = app.add_subcommand("sweep", "Sampling-rate sweep over samplers and aggregators");
    add_common(sweep_cmd, sw, {"jsonl"});
    sweep_cmd->add_option("--prefs", sw_prefs, "Preference cache (CSV)")->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--run", sw_run, "Pointwise run (TREC)")->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--qrels", sw_qrels, "Relevance judgments (TREC)")->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--samplers", sw_samplers, "Sampling methods")->capture_default_str();
    sweep_cmd->add_option("--aggregators", sw_aggregators, "Aggregation methods")->capture_default_str();
    sweep_cmd->add_option("--rates", sw_rates, "Nominal sampling rates")->check(CLI::Range(0.0, 1.0));
    sweep_cmd->add_option("--repetitions", sw_reps, "G-Random repetitions per rate")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sweep_cmd->add_option("--skip", sw_skip, "S-Window lambda for rates without an override")->capture_default_str();
    sweep_cmd->add_option("--skip-by-rate", sw_skip_by_rate, "Per-rate lambda overrides, RATE=LAMBDA");
    sweep_cmd->add_option("--skip-from", sw_skip_from, "grid-lambda JSON report supplying per-rate lambdas")
        ->check(CLI::ExistingFile);
    sweep_cmd->add_option("--corpus-tag", sw_tag, "Label stored in every record")->capture_default_str();
    add_aggregator_flags(sweep_cmd, sw_agg);

    // grid-lambda
    Common gl;
    AggregatorFlags gl_agg;
    std::string gl_prefs, gl_run, gl_qrels, gl_aggregator = "greedy";
    std::vector<double> gl_rates = default_rates();
    std::size_t gl_min = 2, gl_max = 15, gl_folds = 5;
    auto* grid_cmd = app.add_subcommand("grid-lambda", "Cross-validated S-Window skip selection per rate");
    add_common(grid_cmd, gl, {"json", "text"});
    grid_cmd->add_option("--prefs", gl_prefs, "Preference cache (CSV)")->required()->check(CLI::ExistingFile);
    grid_cmd->add_option("--run", gl_run, "Pointwise run (TREC)")->required()->check(CLI::ExistingFile);
    grid_cmd->add_option("--qrels", gl_qrels, "Relevance judgments (TREC)")->required()->check(CLI::ExistingFile);
    grid_cmd->add_option("--aggregator", gl_aggregator, "Aggregator used for selection")->capture_default_str();
    grid_cmd->add_option("--rates", gl_rates, "Nominal sampling rates")->check(CLI::Range(0.0, 1.0));
    grid_cmd->add_option("--lambda-min", gl_min, "Smallest lambda")->capture_default_str();
    grid_cmd->add_option("--lambda-max", gl_max, "Largest lambda")->capture_default_str();
    grid_cmd->add_option("--folds", gl_folds, "Cross-validation folds")->check(CLI::PositiveNumber)->capture_default_str();
    add_aggregator_flags(grid_cmd, gl_agg);

    // diagnose
    Common dg;
    std::string dg_prefs;
    auto* diagnose_cmd = app.add_subcommand("diagnose", "Consistency, complementarity and transitivity of a cache");
    add_common(diagnose_cmd, dg, {"text", "json"});
    diagnose_cmd->add_option("--prefs", dg_prefs, "Preference cache (CSV)")->required()->check(CLI::ExistingFile);

    // significance
    Common sg;
    std::string sg_sweep;
    std::size_t sg_tests = 19;
    auto* signif_cmd = app.add_subcommand("significance", "Lowest rate not significantly worse than the baseline");
    add_common(signif_cmd, sg, {"text", "json"});
    signif_cmd->add_option("--sweep", sg_sweep, "Sweep report (JSONL)")->required()->check(CLI::ExistingFile);
    signif_cmd->add_option("--tests", sg_tests, "Bonferroni test count")->check(CLI::PositiveNumber)->capture_default_str();

    // synth
    Common sy;
    std::size_t sy_topics = 50, sy_k = 50;
    std::optional<double> sy_sharpness, sy_noise, sy_extremity, sy_bias, sy_model_error, sy_pointwise_noise,
        sy_within;
    std::optional<std::uint64_t> sy_budget;
    double sy_budget_rate = 0.3;
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic cache, pointwise run and qrels");
    add_common(synth_cmd, sy, {"trec"});
    synth_cmd->get_option("--out")->description("Output directory (prefs.csv, run.txt, qrels.txt)");
    sy.out = "synthetic";
    synth_cmd->add_option("--topics", sy_topics, "Number of queries")->check(CLI::PositiveNumber)->capture_default_str();
    synth_cmd->add_option("--k", sy_k, "Documents per query")->capture_default_str();
    synth_cmd->add_option("--budget", sy_budget, "Comparison budget; sets k to the deepest list it affords");
    synth_cmd->add_option("--budget-rate", sy_budget_rate, "Sampling rate assumed by --budget")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    synth_cmd->add_option("--sharpness", sy_sharpness, "Logit per unit of relevance gap");
    synth_cmd->add_option("--noise-sd", sy_noise, "Per-pair logit noise");
    synth_cmd->add_option("--extremity", sy_extremity, "Exponent on the odds");
    synth_cmd->add_option("--position-bias", sy_bias, "Logit bonus for the first-presented document");
    synth_cmd->add_option("--model-error-sd", sy_model_error, "Per-document perception error");
    synth_cmd->add_option("--pointwise-noise-sd", sy_pointwise_noise, "Noise of the pointwise scores");
    synth_cmd->add_option("--within-grade-sd", sy_within, "Spread of relevance inside a grade");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_usage;
    }

    try {
        if (*rerank_cmd) {
            const auto corpus = load_corpus(rr_prefs, rr_run, "");
            SamplingPlan plan{make_sampler(rr_sampler), rr_rate, rr_window, rr_skip};
            const auto outcomes =
                rerank(corpus, plan, make_aggregator(rr_aggregator, rr_agg), rr.seed, rr_tag, rr.workers);
            std::vector<Ranking> rankings;
            rankings.reserve(outcomes.size());
            for (const auto& o : outcomes) {
                if (!o.converged) {
                    std::cerr << "sparsepair: warning: " << o.ranking.query_id() << ": aggregator did not converge\n";
                }
                rankings.push_back(o.ranking);
            }
            emit(rr.out, run_text(rankings));
        } else if (*sweep_cmd) {
            const auto corpus = load_corpus(sw_prefs, sw_run, sw_qrels);
            SweepConfig config;
            config.corpus_tag = sw_tag;
            for (const auto& s : sw_samplers) config.samplers.push_back(make_sampler(s));
            for (const auto& a : sw_aggregators) config.aggregators.push_back(make_aggregator(a, sw_agg));
            config.rates = sw_rates;
            config.repetitions = sw_reps;
            config.skip = sw_skip;
            if (!sw_skip_from.empty()) config.skip_by_rate = read_grid_report(sw_skip_from);
            for (const auto& entry : sw_skip_by_rate) config.skip_by_rate.push_back(parse_rate_skip(entry));
            config.base_seed = sw.seed;
            config.workers = sw.workers;
            std::ostringstream out;
            write_sweep_report(out, run_sweep(corpus, config));
            emit(sw.out, out.str());
        } else if (*grid_cmd) {
            const auto corpus = load_corpus(gl_prefs, gl_run, gl_qrels);
            GridConfig config;
            config.rates = gl_rates;
            config.lambda_min = gl_min;
            config.lambda_max = gl_max;
            config.folds = gl_folds;
            config.aggregator = make_aggregator(gl_aggregator, gl_agg);
            config.base_seed = gl.seed;
            config.workers = gl.workers;
            const auto choices = grid_lambda(corpus, config);
            emit(gl.out, gl.format == "json" ? grid_json(choices).dump(2) + "\n" : grid_text(choices));
        } else if (*diagnose_cmd) {
            const auto cache = read_preference_cache(dg_prefs);
            const auto report = diagnose(cache, dg.workers);
            emit(dg.out, dg.format == "json" ? to_json(report).dump(2) + "\n" : diagnostics_text(report));
        } else if (*signif_cmd) {
            const auto rows = significance_table(read_sweep_report(sg_sweep), sg_tests);
            emit(sg.out, sg.format == "json" ? to_json(rows).dump(2) + "\n" : format_significance_table(rows));
        } else if (*synth_cmd) {
            const std::size_t k = sy_budget ? depth_for_budget(*sy_budget, sy_budget_rate) : sy_k;
            SynthSpec spec = calibrated_spec(k);
            if (sy_sharpness) spec.sharpness = *sy_sharpness;
            if (sy_noise) spec.noise_sd = *sy_noise;
            if (sy_extremity) spec.extremity = *sy_extremity;
            if (sy_bias) spec.position_bias = *sy_bias;
            if (sy_model_error) spec.model_error_sd = *sy_model_error;
            if (sy_pointwise_noise) spec.pointwise_noise_sd = *sy_pointwise_noise;
            if (sy_within) spec.within_grade_sd = *sy_within;
            spec.validate();
            const auto corpus = generate_corpus(spec, sy_topics, sy.seed);
            if (sy.out == "-") throw ParameterError("synth writes three files; --out must be a directory");
            const fs::path dir(sy.out);
            fs::create_directories(dir);
            write_preference_cache(dir / "prefs.csv", corpus.prefs);
            std::vector<Ranking> lists;
            lists.reserve(corpus.pointwise.size());
            for (const auto& list : corpus.pointwise) {
                std::vector<double> scores(list.k());
                for (std::size_t n = 0; n < list.k(); ++n) scores[n] = static_cast<double>(list.k() - n);
                lists.push_back(Ranking::from_scores(list.query_id(), list.docs(), scores, "pointwise"));
            }
            write_run(dir / "run.txt", lists);
            write_qrels(dir / "qrels.txt", corpus.qrels);
            std::cerr << fmt::format("sparsepair: wrote {} topics with k = {} to {}\n", sy_topics, k, dir.string());
        }
    } catch (const ParameterError& e) {
        std::cerr << "sparsepair: error: " << e.what() << '\n';
        return exit_parameter;
    } catch (const InputError& e) {
        std::cerr << "sparsepair: error: " << e.what() << '\n';
        return exit_input;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "sparsepair: error: " << e.what() << '\n';
        return exit_input;
    } catch (const std::exception& e) {
        std::cerr << "sparsepair: internal error: " << e.what() << '\n';
        return exit_internal;
    }
    return 0;
}

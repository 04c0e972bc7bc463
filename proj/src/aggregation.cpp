#include "sparsepair/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <fmt/format.h>

#include "sparsepair/errors.hpp"
#include "sparsepair/random.hpp"

namespace sparsepair {

namespace {

void check_dimensions(const PreferenceMatrix& prefs, const ComparisonSet& sample) {
    if (prefs.k() != sample.k()) {
        throw InputError(fmt::format("query {}: comparison set is for k = {} but the matrix has k = {}",
                                     prefs.query_id(), sample.k(), prefs.k()));
    }
}

Ranking make_ranking(const PreferenceMatrix& prefs, std::span<const double> scores, AggregatorKind kind) {
    return Ranking::from_scores(prefs.query_id(), prefs.docs(), scores, std::string(aggregator_name(kind)));
}

// log(1 / (1 + e^-x)) without overflow.
double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

struct Duel {
    DocIndex winner;
    DocIndex loser;
};

class BradleyTerryObjective {
public:
    BradleyTerryObjective(std::size_t k, std::vector<Duel> duels, double reg)
        : k_(k), duels_(std::move(duels)), reg_(reg) {}

    double value(const Eigen::VectorXd& s) const {
        double f = -reg_ * s.squaredNorm();
        for (const auto& d : duels_) f += log_sigmoid(s[d.winner] - s[d.loser]);
        return f;
    }

    void gradient_and_negative_hessian(const Eigen::VectorXd& s, Eigen::VectorXd& g, Eigen::MatrixXd& h) const {
        g = -2.0 * reg_ * s;
        h = Eigen::MatrixXd::Identity(k_, k_) * (2.0 * reg_);
        for (const auto& d : duels_) {
            const double q = sigmoid(s[d.winner] - s[d.loser]);
            const double lose = 1.0 - q;
            g[d.winner] += lose;
            g[d.loser] -= lose;
            const double w = q * lose;
            h(d.winner, d.winner) += w;
            h(d.loser, d.loser) += w;
            h(d.winner, d.loser) -= w;
            h(d.loser, d.winner) -= w;
        }
    }

private:
    std::size_t k_;
    std::vector<Duel> duels_;
    double reg_;
};

void kwiksort_recurse(const PreferenceMatrix& prefs, std::vector<DocIndex> items, Rng& rng,
                      std::vector<DocIndex>& out, std::size_t& lookups) {
    if (items.empty()) return;
    if (items.size() == 1) {
        out.push_back(items.front());
        return;
    }
    const DocIndex pivot = items[rng.uniform_index(items.size())];
    std::vector<DocIndex> above;
    std::vector<DocIndex> below;
    for (DocIndex d : items) {
        if (d == pivot) continue;
        ++lookups;
        (prefs(pivot, d) >= 0.5 ? below : above).push_back(d);
    }
    kwiksort_recurse(prefs, std::move(above), rng, out, lookups);
    out.push_back(pivot);
    kwiksort_recurse(prefs, std::move(below), rng, out, lookups);
}

}  // namespace

void AggregatorSpec::validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ParameterError(fmt::format("gamma must lie in [0, 1], got {}", gamma));
    if (!(pr_tol > 0.0)) throw ParameterError("PageRank tolerance must be positive");
    if (!(bt_tol > 0.0)) throw ParameterError("Bradley-Terry tolerance must be positive");
    if (!(bt_reg >= 0.0)) throw ParameterError("Bradley-Terry regularization must be non-negative");
    if (!std::isfinite(bt_initial)) throw ParameterError("Bradley-Terry starting value must be finite");
}

Ranking aggregate_additive(const PreferenceMatrix& prefs, const ComparisonSet& sample) {
    check_dimensions(prefs, sample);
    std::vector<double> s(prefs.k(), 0.0);
    for (const auto& [i, j] : sample.pairs()) {
        s[i] += prefs(i, j);
        s[j] += 1.0 - prefs(i, j);
    }
    return make_ranking(prefs, s, AggregatorKind::additive);
}

AggregationResult aggregate_bradley_terry(const PreferenceMatrix& prefs, const ComparisonSet& sample,
                                          const AggregatorSpec& spec) {
    check_dimensions(prefs, sample);
    spec.validate();
    const std::size_t k = prefs.k();
    std::vector<Duel> duels;
    duels.reserve(sample.size());
    for (const auto& [i, j] : sample.pairs()) {
        duels.push_back(prefs(i, j) >= 0.5 ? Duel{i, j} : Duel{j, i});
    }
    const BradleyTerryObjective objective(k, std::move(duels), spec.bt_reg);

    Eigen::VectorXd s = Eigen::VectorXd::Constant(k, spec.bt_initial);
    Eigen::VectorXd g(k);
    Eigen::MatrixXd h(k, k);
    bool converged = false;
    std::size_t iterations = 0;
    double f = objective.value(s);
    for (; iterations <= spec.bt_max_iter; ++iterations) {
        objective.gradient_and_negative_hessian(s, g, h);
        if (g.norm() <= spec.bt_tol) {
            converged = true;
            break;
        }
        if (iterations == spec.bt_max_iter) break;
        const Eigen::VectorXd step = h.llt().solve(g);
        // Armijo backtracking. Once the predicted gain g'step falls to the
        // rounding noise of f, the objective can no longer rank trial points
        // and the pure Newton step is taken: the iteration is then inside its
        // quadratic region.
        const double slope = g.dot(step);
        double alpha = 1.0;
        Eigen::VectorXd trial = s + step;
        double f_trial = objective.value(trial);
        const bool quadratic_region = slope <= 1e-9 * (1.0 + std::abs(f));
        while (!quadratic_region && f_trial < f + 1e-4 * alpha * slope && alpha > 1e-12) {
            alpha *= 0.5;
            trial = s + alpha * step;
            f_trial = objective.value(trial);
        }
        s = std::move(trial);
        f = f_trial;
    }

    std::vector<double> scores(s.data(), s.data() + k);
    const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(k);
    for (auto& v : scores) v -= mean;
    return {make_ranking(prefs, scores, AggregatorKind::bradley_terry), converged, iterations, sample.size()};
}

Ranking aggregate_greedy(const PreferenceMatrix& prefs, const ComparisonSet& sample) {
    check_dimensions(prefs, sample);
    const std::size_t k = prefs.k();
    auto p = [&](DocIndex i, DocIndex j) { return sample.contains(i, j) ? prefs(i, j) : 0.0; };

    std::vector<double> t(k, 0.0);
    for (DocIndex i = 0; i < k; ++i) {
        double wins = 0.0;
        double losses = 0.0;
        for (DocIndex j = 0; j < k; ++j) {
            if (j == i) continue;
            wins += p(i, j);
            losses += p(j, i);
        }
        t[i] = wins - losses;
    }

    std::vector<unsigned char> remaining(k, 1);
    std::vector<double> s(k, 0.0);
    for (std::size_t left = k; left > 0; --left) {
        std::optional<DocIndex> best;
        for (DocIndex i = 0; i < k; ++i) {
            if (remaining[i] && (!best || t[i] > t[*best])) best = i;
        }
        const DocIndex j = *best;
        s[j] = static_cast<double>(left);
        remaining[j] = 0;
        for (DocIndex i = 0; i < k; ++i) {
            if (remaining[i]) t[i] = t[i] - p(i, j) + p(j, i);
        }
    }
    return make_ranking(prefs, s, AggregatorKind::greedy);
}

AggregationResult aggregate_pagerank(const PreferenceMatrix& prefs, const ComparisonSet& sample,
                                     const AggregatorSpec& spec) {
    check_dimensions(prefs, sample);
    spec.validate();
    const std::size_t k = prefs.k();

    struct Edge {
        DocIndex from;
        DocIndex to;
        double weight;
    };
    std::vector<Edge> edges;
    edges.reserve(sample.size());
    for (const auto& [i, j] : sample.pairs()) {
        if (spec.pr_flow == PageRankFlow::as_written) {
            edges.push_back({i, j, prefs(i, j)});  // s_j receives p_ij * s_i / W_i
        } else {
            edges.push_back({j, i, prefs(i, j)});  // the winner d_i receives from d_j
        }
    }
    std::vector<double> out_weight(k, 0.0);
    for (const auto& e : edges) out_weight[e.from] += e.weight;
    for (auto& e : edges) {
        if (out_weight[e.from] > 0.0) e.weight /= out_weight[e.from];
    }

    const double uniform = 1.0 / static_cast<double>(k);
    std::vector<double> s(k, uniform);
    std::vector<double> next(k);
    bool converged = false;
    std::size_t iterations = 0;
    while (iterations < spec.pr_max_iter) {
        double dangling = 0.0;
        for (DocIndex i = 0; i < k; ++i) {
            if (out_weight[i] <= 0.0) dangling += s[i];
        }
        std::fill(next.begin(), next.end(), 0.0);
        for (const auto& e : edges) {
            if (out_weight[e.from] > 0.0) next[e.to] += e.weight * s[e.from];
        }
        double change = 0.0;
        for (DocIndex i = 0; i < k; ++i) {
            next[i] = spec.gamma * uniform + (1.0 - spec.gamma) * (next[i] + dangling * uniform);
            change = std::max(change, std::abs(next[i] - s[i]));
        }
        s.swap(next);
        ++iterations;
        if (change <= spec.pr_tol) {
            converged = true;
            break;
        }
    }
    return {make_ranking(prefs, s, AggregatorKind::pagerank), converged, iterations, sample.size()};
}

AggregationResult kwiksort(const PreferenceMatrix& prefs, std::uint64_t seed) {
    const std::size_t k = prefs.k();
    std::vector<DocIndex> items(k);
    std::iota(items.begin(), items.end(), DocIndex{0});
    std::vector<DocIndex> order;
    order.reserve(k);
    std::size_t lookups = 0;
    Rng rng(seed);
    kwiksort_recurse(prefs, std::move(items), rng, order, lookups);

    std::vector<double> scores(k);
    for (std::size_t n = 0; n < k; ++n) scores[order[n]] = static_cast<double>(k - n);
    return {make_ranking(prefs, scores, AggregatorKind::kwiksort), true, 0, lookups};
}

AggregationResult aggregate(const PreferenceMatrix& prefs, const ComparisonSet& sample,
                            const AggregatorSpec& spec) {
    switch (spec.kind) {
        case AggregatorKind::additive:
            return {aggregate_additive(prefs, sample), true, 0, sample.size()};
        case AggregatorKind::bradley_terry:
            return aggregate_bradley_terry(prefs, sample, spec);
        case AggregatorKind::greedy:
            return {aggregate_greedy(prefs, sample), true, 0, sample.size()};
        case AggregatorKind::pagerank:
            return aggregate_pagerank(prefs, sample, spec);
        case AggregatorKind::kwiksort:
            return kwiksort(prefs, spec.kwiksort_seed);
    }
    throw ParameterError("unknown aggregator");
}

std::string_view aggregator_name(AggregatorKind kind) {
    switch (kind) {
        case AggregatorKind::additive: return "additive";
        case AggregatorKind::bradley_terry: return "bradley-terry";
        case AggregatorKind::greedy: return "greedy";
        case AggregatorKind::pagerank: return "pagerank";
        case AggregatorKind::kwiksort: return "kwiksort";
    }
    return "unknown";
}

std::optional<AggregatorKind> parse_aggregator(std::string_view name) {
    for (auto kind : {AggregatorKind::additive, AggregatorKind::bradley_terry, AggregatorKind::greedy,
                      AggregatorKind::pagerank, AggregatorKind::kwiksort}) {
        if (name == aggregator_name(kind)) return kind;
    }
    if (name == "bt") return AggregatorKind::bradley_terry;
    return std::nullopt;
}

}  // namespace sparsepair

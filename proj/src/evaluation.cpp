#include "sparsepair/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "sparsepair/errors.hpp"

namespace sparsepair {

void Qrels::set(const std::string& query_id, const DocId& doc, int grade) {
    if (grade < 0) throw ValidationError(fmt::format("query {}: negative grade {} for '{}'", query_id, grade, doc));
    by_query_[query_id][doc] = grade;
}

std::optional<int> Qrels::grade(const std::string& query_id, const DocId& doc) const {
    const auto* j = judgments(query_id);
    if (!j) return std::nullopt;
    auto it = j->find(doc);
    if (it == j->end()) return std::nullopt;
    return it->second;
}

const Qrels::Judgments* Qrels::judgments(const std::string& query_id) const {
    auto it = by_query_.find(query_id);
    return it == by_query_.end() ? nullptr : &it->second;
}

bool Qrels::has_positive(const std::string& query_id) const {
    const auto* j = judgments(query_id);
    return j && std::any_of(j->begin(), j->end(), [](const auto& kv) { return kv.second > 0; });
}

std::vector<std::string> Qrels::queries() const {
    std::vector<std::string> out;
    out.reserve(by_query_.size());
    for (const auto& [q, _] : by_query_) out.push_back(q);
    return out;
}

std::size_t Qrels::size() const {
    std::size_t n = 0;
    for (const auto& [_, j] : by_query_) n += j.size();
    return n;
}

namespace {

double gain(int grade, GainKind kind) {
    return kind == GainKind::exponential ? std::exp2(static_cast<double>(grade)) - 1.0 : static_cast<double>(grade);
}

double discount(std::size_t rank) { return 1.0 / std::log2(static_cast<double>(rank) + 1.0); }

}  // namespace

std::optional<double> ndcg_at(const Ranking& ranking, const Qrels& qrels, const NdcgOptions& options) {
    const auto* judged = qrels.judgments(ranking.query_id());
    if (!judged || !qrels.has_positive(ranking.query_id())) return std::nullopt;

    std::vector<int> grades;
    grades.reserve(ranking.size());
    for (const auto& e : ranking.entries()) {
        auto it = judged->find(e.doc);
        if (it != judged->end()) {
            grades.push_back(it->second);
        } else if (!options.judged_only) {
            grades.push_back(0);
        }
    }
    if (grades.empty()) return std::nullopt;

    double dcg = 0.0;
    for (std::size_t r = 0; r < std::min(options.depth, grades.size()); ++r) {
        dcg += gain(grades[r], options.gain) * discount(r + 1);
    }
    std::vector<int> ideal;
    ideal.reserve(judged->size());
    for (const auto& [_, g] : *judged) ideal.push_back(g);
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t r = 0; r < std::min(options.depth, ideal.size()); ++r) {
        idcg += gain(ideal[r], options.gain) * discount(r + 1);
    }
    return dcg / idcg;
}

double compensated_sum(std::span<const double> values) {
    double sum = 0.0;
    double c = 0.0;
    for (double v : values) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    return sum + c;
}

double compensated_mean(std::span<const double> values) {
    return values.empty() ? 0.0 : compensated_sum(values) / static_cast<double>(values.size());
}

namespace {

// Continued fraction for I_x(a, b), modified Lentz evaluation.
double beta_continued_fraction(double a, double b, double x) {
    constexpr int max_iter = 500;
    constexpr double eps = 1e-16;
    constexpr double tiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < eps) break;
    }
    return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw ParameterError("incomplete beta needs a, b > 0");
    if (!(x >= 0.0 && x <= 1.0)) throw ParameterError("incomplete beta needs x in [0, 1]");
    if (x == 0.0 || x == 1.0) return x;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    // The fraction converges fast for x < (a + 1) / (a + b + 2); use symmetry otherwise.
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double dof) {
    if (!(dof > 0.0)) throw ParameterError("degrees of freedom must be positive");
    if (std::isnan(t)) return 1.0;
    if (std::isinf(t)) return 0.0;
    return regularized_incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t));
}

SignificanceResult paired_t_test(std::span<const double> a, std::span<const double> b, std::size_t test_count,
                                 double alpha) {
    if (a.size() != b.size()) throw InputError(fmt::format("paired t-test on {} vs {} values", a.size(), b.size()));
    if (a.size() < 2) throw InputError("paired t-test needs at least two pairs");
    if (test_count == 0) throw ParameterError("test count must be positive");
    const std::size_t n = a.size();
    std::vector<double> diff(n);
    for (std::size_t q = 0; q < n; ++q) diff[q] = a[q] - b[q];

    SignificanceResult result;
    result.n = n;
    result.mean_difference = compensated_mean(diff);
    if (std::all_of(diff.begin(), diff.end(), [](double d) { return d == 0.0; })) {
        result.t_statistic = 0.0;
        result.p_value = 1.0;
        result.corrected_p = 1.0;
        result.significant = false;
        return result;
    }
    std::vector<double> squares(n);
    for (std::size_t q = 0; q < n; ++q) {
        const double d = diff[q] - result.mean_difference;
        squares[q] = d * d;
    }
    const double variance = compensated_sum(squares) / static_cast<double>(n - 1);
    const double se = std::sqrt(variance / static_cast<double>(n));
    if (se == 0.0) {
        result.t_statistic = std::copysign(std::numeric_limits<double>::infinity(), result.mean_difference);
    } else {
        result.t_statistic = result.mean_difference / se;
    }
    result.p_value = student_t_two_sided_p(result.t_statistic, static_cast<double>(n - 1));
    result.corrected_p = std::min(1.0, result.p_value * static_cast<double>(test_count));
    result.significant = result.corrected_p < alpha;
    return result;
}

double kendall_tau(std::span<const DocIndex> a, std::span<const DocIndex> b) {
    const std::size_t n = a.size();
    if (b.size() != n) throw InputError("kendall tau on orderings of different length");
    std::vector<std::size_t> pos_b(n, n);
    for (std::size_t r = 0; r < n; ++r) {
        if (b[r] >= n || pos_b[b[r]] != n) throw InputError("kendall tau: not a permutation");
        pos_b[b[r]] = r;
    }
    if (n < 2) return 1.0;
    long long concordant = 0;
    long long discordant = 0;
    for (std::size_t x = 0; x < n; ++x) {
        if (a[x] >= n) throw InputError("kendall tau: not a permutation");
        for (std::size_t y = x + 1; y < n; ++y) {
            (pos_b[a[x]] < pos_b[a[y]] ? concordant : discordant) += 1;
        }
    }
    const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
    return static_cast<double>(concordant - discordant) / pairs;
}

double RunRecord::mean_ndcg() const {
    std::vector<double> values;
    values.reserve(queries.size());
    for (const auto& q : queries) values.push_back(q.ndcg);
    return compensated_mean(values);
}

std::uint64_t RunRecord::comparisons() const {
    std::uint64_t total = 0;
    for (const auto& q : queries) total += q.comparisons;
    return total;
}

double RunRecord::effective_rate() const {
    std::uint64_t grid = 0;
    for (const auto& q : queries) grid += all_pairs_count(q.k);
    return grid == 0 ? 0.0 : static_cast<double>(comparisons()) / static_cast<double>(grid);
}

namespace {

std::vector<double> paired_values(const RunRecord& run, const RunRecord& baseline) {
    std::unordered_map<std::string_view, double> by_query;
    for (const auto& q : run.queries) by_query.emplace(q.query_id, q.ndcg);
    if (by_query.size() != baseline.queries.size()) {
        throw InputError(fmt::format("run {} / {} at rate {} covers {} queries, the baseline {}", run.sampler,
                                     run.aggregator, run.rate, by_query.size(), baseline.queries.size()));
    }
    std::vector<double> values;
    values.reserve(baseline.queries.size());
    for (const auto& q : baseline.queries) {
        auto it = by_query.find(q.query_id);
        if (it == by_query.end()) {
            throw InputError(fmt::format("query {} of the baseline is missing from run {} / {} at rate {}",
                                         q.query_id, run.sampler, run.aggregator, run.rate));
        }
        values.push_back(it->second);
    }
    return values;
}

}  // namespace

MinimalRate minimal_safe_rate(const SweepReport& report, std::string_view aggregator, std::string_view sampler,
                              std::size_t test_count, double alpha) {
    const RunRecord* baseline = nullptr;
    std::map<double, std::vector<const RunRecord*>> by_rate;
    for (const auto& run : report.runs) {
        if (run.aggregator != aggregator) continue;
        if (run.sampler == "none") {
            if (!baseline || run.repetition < baseline->repetition) baseline = &run;
        } else if (run.sampler == sampler) {
            by_rate[run.rate].push_back(&run);
        }
    }
    if (!baseline) throw InputError(fmt::format("sweep has no unsampled baseline for aggregator {}", aggregator));

    std::vector<double> base_values;
    for (const auto& q : baseline->queries) base_values.push_back(q.ndcg);

    for (auto& [rate, runs] : by_rate) {
        const RunRecord* worst = nullptr;
        double worst_mean = 0.0;
        for (const auto* run : runs) {
            const double m = run->mean_ndcg();
            if (!worst || m < worst_mean || (m == worst_mean && run->repetition < worst->repetition)) {
                worst = run;
                worst_mean = m;
            }
        }
        const auto values = paired_values(*worst, *baseline);
        const auto test = paired_t_test(values, base_values, test_count, alpha);
        const bool significantly_worse = test.significant && test.mean_difference < 0.0;
        if (!significantly_worse) return {rate, test.mean_difference, true, test};
    }
    return {};
}

}  // namespace sparsepair

#include "sparsepair/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "sparsepair/errors.hpp"
#include "sparsepair/random.hpp"

namespace sparsepair {

void SynthSpec::validate() const {
    if (k < 2) throw ParameterError(fmt::format("synthetic query needs k >= 2, got {}", k));
    if (!latent_grades.empty() && latent_grades.size() != k) {
        throw ParameterError(fmt::format("{} latent grades for k = {}", latent_grades.size(), k));
    }
    if (!(sharpness > 0.0)) throw ParameterError("sharpness must be positive");
    if (!(noise_sd >= 0.0)) throw ParameterError("noise_sd must be non-negative");
    if (!(extremity >= 1.0)) throw ParameterError("extremity must be at least 1");
    if (!(pointwise_noise_sd >= 0.0)) throw ParameterError("pointwise_noise_sd must be non-negative");
    if (!(model_error_sd >= 0.0)) throw ParameterError("model_error_sd must be non-negative");
    if (!(within_grade_sd >= 0.0)) throw ParameterError("within_grade_sd must be non-negative");
    double total = 0.0;
    for (double p : grade_probabilities) {
        if (!(p >= 0.0)) throw ParameterError("grade probabilities must be non-negative");
        total += p;
    }
    if (!(total > 0.0)) throw ParameterError("grade probabilities must not all be zero");
}

namespace {

constexpr int max_grade = 3;

int grade_of(double latent) {
    return static_cast<int>(std::clamp(std::lround(latent), 0L, static_cast<long>(max_grade)));
}

int draw_grade(Rng& rng, const std::array<double, 4>& probabilities) {
    const double total = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
    double u = rng.uniform01() * total;
    for (int g = 0; g < max_grade; ++g) {
        if (u < probabilities[g]) return g;
        u -= probabilities[g];
    }
    return max_grade;
}

}  // namespace

SyntheticQuery generate_preferences(const SynthSpec& spec) {
    spec.validate();
    const std::size_t k = spec.k;
    Rng rng(spec.seed);

    std::vector<double> latent = spec.latent_grades;
    if (latent.empty()) {
        latent.resize(k);
        for (auto& g : latent) g = draw_grade(rng, spec.grade_probabilities) + spec.within_grade_sd * rng.normal();
    }
    std::vector<double> perceived(k);
    for (std::size_t n = 0; n < k; ++n) perceived[n] = latent[n] + spec.model_error_sd * rng.normal();

    std::vector<double> pointwise_score(k);
    for (std::size_t n = 0; n < k; ++n) pointwise_score[n] = latent[n] + spec.pointwise_noise_sd * rng.normal();
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pointwise_score[a] > pointwise_score[b]; });

    std::vector<DocId> docs(k);
    std::vector<double> ordered_latent(k);
    Qrels qrels;
    for (std::size_t r = 0; r < k; ++r) {
        const std::size_t n = order[r];
        docs[r] = fmt::format("{}-d{}", spec.query_id, n + 1);
        ordered_latent[r] = latent[n];
        qrels.set(spec.query_id, docs[r], grade_of(latent[n]));
    }

    // Noise is drawn in generation order so the matrix does not depend on
    // the pointwise shuffle.
    std::vector<double> noise(k * k, 0.0);
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
            if (a != b) noise[a * k + b] = spec.noise_sd * rng.normal();
        }
    }
    std::vector<double> values(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            if (i == j) continue;
            const std::size_t a = order[i];
            const std::size_t b = order[j];
            const double logit = spec.sharpness * (perceived[a] - perceived[b]) + spec.position_bias + noise[a * k + b];
            const double x = spec.extremity * logit;
            values[i * k + j] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
        }
    }

    TopKList pointwise(spec.query_id, docs);
    return {PreferenceMatrix(spec.query_id, std::move(docs), std::move(values)), std::move(pointwise),
            std::move(qrels), std::move(ordered_latent)};
}

SyntheticCorpus generate_corpus(const SynthSpec& base, std::size_t topics, std::uint64_t base_seed) {
    SyntheticCorpus corpus;
    corpus.prefs.reserve(topics);
    corpus.pointwise.reserve(topics);
    for (std::size_t t = 0; t < topics; ++t) {
        SynthSpec spec = base;
        spec.query_id = fmt::format("q{}", t + 1);
        spec.seed = derive_seed(base_seed, spec.query_id, 0, SeedStream::simulation);
        auto query = generate_preferences(spec);
        for (const auto& doc : query.pointwise.docs()) {
            corpus.qrels.set(spec.query_id, doc, *query.qrels.grade(spec.query_id, doc));
        }
        corpus.prefs.push_back(std::move(query.prefs));
        corpus.pointwise.push_back(std::move(query.pointwise));
    }
    return corpus;
}

SynthSpec calibrated_spec(std::size_t k) {
    SynthSpec spec;
    spec.k = k;
    // Mostly non-relevant lists with exact grades: same-grade pairs are
    // decided by noise and bias alone, cross-grade pairs mostly by grade.
    spec.grade_probabilities = {0.92, 0.035, 0.027, 0.018};
    spec.within_grade_sd = 0.0;
    spec.sharpness = 20.0;
    spec.noise_sd = 12.0;
    spec.extremity = 1.0;
    spec.position_bias = 7.0;
    spec.model_error_sd = 0.0;
    spec.pointwise_noise_sd = 0.8;
    return spec;
}

}  // namespace sparsepair

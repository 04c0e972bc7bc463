#pragma once

/** \file simulation.hpp
 *  \brief Synthetic preference caches with controllable quality.
 *
 * Each document has a true relevance g_i (qrels grade = g_i rounded to
 * the nearest grade) and a perceived relevance h_i = g_i + e_i, where e_i is
 * a per-document error shared by all of its comparisons. Every directed
 * pair gets its own logit
 *
 *     x_ij = sharpness * (h_i - h_j) + position_bias + noise_ij,
 *
 * with independent Gaussian noise for (i, j) and (j, i), and probability
 * p_ij = o^e / (1 + o^e) for the odds o = exp(x_ij), i.e.
 * sigmoid(extremity * x_ij). A positive position_bias favours whichever
 * document is presented first, so near-equal pairs claim a win both ways.
 */

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sparsepair/evaluation.hpp"
#include "sparsepair/model.hpp"

namespace sparsepair {

struct SynthSpec {
    std::string query_id = "q1";
    std::size_t k = 50;
    /// True relevance per document. When empty, a grade is drawn from
    /// `grade_probabilities` and jittered by N(0, within_grade_sd^2).
    std::vector<double> latent_grades;
    std::array<double, 4> grade_probabilities = {0.55, 0.20, 0.15, 0.10};
    double within_grade_sd = 0.15;
    double sharpness = 1.0;
    double noise_sd = 0.0;
    double extremity = 1.0;
    double position_bias = 0.0;
    /// Standard deviation of the per-document perception error e_i.
    double model_error_sd = 0.0;
    /// Noise of the pointwise scores that order the top-k list.
    double pointwise_noise_sd = 0.5;
    std::uint64_t seed = 0;

    /// Throws ParameterError.
    void validate() const;
};

struct SyntheticQuery {
    /// Indexed in pointwise order, i.e. aligned with `pointwise`.
    PreferenceMatrix prefs;
    TopKList pointwise;
    Qrels qrels;
    /// True relevance in pointwise order.
    std::vector<double> latent;
};

/// Deterministic in `spec` (including its seed).
SyntheticQuery generate_preferences(const SynthSpec& spec);

struct SyntheticCorpus {
    std::vector<PreferenceMatrix> prefs;
    std::vector<TopKList> pointwise;
    Qrels qrels;
};

/// `topics` queries "q1".."qN" from `base`, with per-topic seeds derived
/// from `base_seed` and the query id.
SyntheticCorpus generate_corpus(const SynthSpec& base, std::size_t topics, std::uint64_t base_seed);

/// Parameters whose diagnostics resemble a strong pairwise transformer on
/// in-domain passages: about half of the pairs consistent, about 0.69
/// triple transitivity, probabilities piled up near 0 and 1.
SynthSpec calibrated_spec(std::size_t k = 50);

}  // namespace sparsepair

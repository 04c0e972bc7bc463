#pragma once

#include <cstddef>
#include <cstdint>

#include "sparsepair/model.hpp"

namespace sparsepair {

/// G-Random. Draws floor(rate * (k^2 - k)) pairs uniformly without
/// replacement, then makes sure every document is the first element of at
/// least one pair: a missing row gets one pair with a uniform partner, and
/// a random pair of a row holding two or more is dropped to compensate
/// while the set is larger than max(floor(rate * (k^2 - k)), k).
///
/// Throws ParameterError unless k >= 2 and 0 < rate <= 1.
ComparisonSet sample_global_random(std::size_t k, double rate, std::uint64_t seed);

/// N-Window: (i, (i + c) mod k) for c = 1..window. Each document is first
/// element of exactly `window` pairs and second element of exactly `window`.
///
/// Throws ParameterError unless 1 <= window <= k - 1.
ComparisonSet sample_neighborhood_window(std::size_t k, std::size_t window);

/// S-Window: (i, (i + c * skip) mod k) for c = 1..window, dropping
/// self-pairs and repeats within a row. skip = 1 is N-Window.
///
/// Throws ParameterError unless 1 <= window <= k - 1, skip >= 1 and skip is
/// not a multiple of k (every slot would then be a self-pair).
ComparisonSet sample_skip_window(std::size_t k, std::size_t window, std::size_t skip);

/// Dispatches on the sampler kind. FullComparison yields C_all.
ComparisonSet sample(const SamplerSpec& spec, std::size_t k);

/// |C| / (k^2 - k) for the set `spec` produces at dimension k, computed
/// without materializing the set. Throws ParameterError like `sample`.
double effective_rate(const SamplerSpec& spec, std::size_t k);

/// Target size of a G-Random sample: max(floor(rate * (k^2 - k)), k).
std::size_t global_random_size(std::size_t k, double rate);

/// Largest window m in [1, k - 1] with k * m <= rate * (k^2 - k).
std::size_t window_for_rate(std::size_t k, double rate);

/// Validates `spec` for dimension k; throws ParameterError.
void validate(const SamplerSpec& spec, std::size_t k);

}  // namespace sparsepair

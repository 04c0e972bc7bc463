#pragma once

/** \file diagnostics.hpp
 *  \brief Quality measures of a full preference matrix: direction
 *  consistency, epsilon-complementarity and triple transitivity.
 *
 * A directed statement "d_i over d_j" holds iff p_ij >= 0.5.
 */

#include <cstdint>
#include <optional>

#include "sparsepair/model.hpp"

namespace sparsepair {

enum class ConsistencyMode {
    /// Unordered pairs {i, j} on which exactly one of p_ij, p_ji is >= 0.5,
    /// over (k^2 - k) / 2.
    unordered_pairs,
    /// Ordered pairs with p_ij >= 0.5 and p_ji < 0.5, over k^2 - k. Always
    /// half of the unordered value.
    ordered_pairs,
};

/// Throws InputError for k < 2.
double consistency(const PreferenceMatrix& prefs, ConsistencyMode mode = ConsistencyMode::unordered_pairs);

/// Fraction of ordered pairs with |p_ij + p_ji - 1| < eps.
/// Throws ParameterError for eps <= 0, InputError for k < 2.
double epsilon_complementarity(const PreferenceMatrix& prefs, double eps);

struct TripleCounts {
    std::uint64_t transitive = 0;    ///< |T|
    std::uint64_t intransitive = 0;  ///< |I|
    friend bool operator==(const TripleCounts&, const TripleCounts&) = default;
};

/// |T| and |I| over all ordered triples (i, j, l) of distinct documents:
/// the triple is in T when the statements i>j, j>l, i>l all hold or all
/// fail, and in I when i>j and j>l agree but i>l disagrees with them.
/// OpenMP-parallel over i; `threads` = 0 uses the runtime default.
TripleCounts count_triples(const PreferenceMatrix& prefs, int threads = 0);

/// |T| / (|T| + |I|); nullopt when k < 3 or no triple falls in T or I.
std::optional<double> transitivity(const PreferenceMatrix& prefs, int threads = 0);

namespace serial {

/// Single-threaded reference for count_triples.
TripleCounts count_triples(const PreferenceMatrix& prefs);

}  // namespace serial

}  // namespace sparsepair

#include "sparsepair/diagnostics.hpp"

#include <cmath>
#include <vector>

#include <fmt/format.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sparsepair/errors.hpp"

namespace sparsepair {

namespace {

void require_pairs(const PreferenceMatrix& prefs) {
    if (prefs.k() < 2) {
        throw InputError(fmt::format("query {}: diagnostics need at least 2 documents", prefs.query_id()));
    }
}

std::vector<unsigned char> direction_bits(const PreferenceMatrix& prefs) {
    const std::size_t k = prefs.k();
    std::vector<unsigned char> ge(k * k, 0);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            if (i != j) ge[i * k + j] = prefs(i, j) >= 0.5 ? 1 : 0;
        }
    }
    return ge;
}

// Triples (i, j, *) for one first index i.
inline void count_row(const unsigned char* ge, std::size_t k, std::size_t i, std::uint64_t& t,
                      std::uint64_t& in) {
    for (std::size_t j = 0; j < k; ++j) {
        if (j == i) continue;
        const unsigned char ij = ge[i * k + j];
        for (std::size_t l = 0; l < k; ++l) {
            if (l == i || l == j) continue;
            if (ge[j * k + l] != ij) continue;
            if (ge[i * k + l] == ij) {
                ++t;
            } else {
                ++in;
            }
        }
    }
}

}  // namespace

double consistency(const PreferenceMatrix& prefs, ConsistencyMode mode) {
    require_pairs(prefs);
    const std::size_t k = prefs.k();
    std::uint64_t agreeing = 0;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            if ((prefs(i, j) >= 0.5) != (prefs(j, i) >= 0.5)) ++agreeing;
        }
    }
    const auto ordered = static_cast<double>(all_pairs_count(k));
    if (mode == ConsistencyMode::ordered_pairs) return static_cast<double>(agreeing) / ordered;
    return static_cast<double>(agreeing) / (ordered / 2.0);
}

double epsilon_complementarity(const PreferenceMatrix& prefs, double eps) {
    if (!(eps > 0.0)) throw ParameterError(fmt::format("epsilon must be positive, got {}", eps));
    require_pairs(prefs);
    const std::size_t k = prefs.k();
    std::uint64_t within = 0;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            if (i != j && std::abs(prefs(i, j) + prefs(j, i) - 1.0) < eps) ++within;
        }
    }
    return static_cast<double>(within) / static_cast<double>(all_pairs_count(k));
}

TripleCounts count_triples(const PreferenceMatrix& prefs, [[maybe_unused]] int threads) {
    const std::size_t k = prefs.k();
    if (k < 3) return {};
    const auto ge = direction_bits(prefs);
    const unsigned char* bits = ge.data();
    std::uint64_t t = 0;
    std::uint64_t in = 0;
#ifdef _OPENMP
    const int team = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(static) reduction(+ : t, in) num_threads(team)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(k); ++i) {
        count_row(bits, k, static_cast<std::size_t>(i), t, in);
    }
    return {t, in};
}

std::optional<double> transitivity(const PreferenceMatrix& prefs, int threads) {
    const auto counts = count_triples(prefs, threads);
    const auto denominator = counts.transitive + counts.intransitive;
    if (denominator == 0) return std::nullopt;
    return static_cast<double>(counts.transitive) / static_cast<double>(denominator);
}

namespace serial {

TripleCounts count_triples(const PreferenceMatrix& prefs) {
    const std::size_t k = prefs.k();
    TripleCounts counts;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            if (j == i) continue;
            const bool ij = prefs(i, j) >= 0.5;
            for (std::size_t l = 0; l < k; ++l) {
                if (l == i || l == j) continue;
                const bool jl = prefs(j, l) >= 0.5;
                const bool il = prefs(i, l) >= 0.5;
                if (ij != jl) continue;
                if (il == ij) {
                    ++counts.transitive;
                } else {
                    ++counts.intransitive;
                }
            }
        }
    }
    return counts;
}

}  // namespace serial

}  // namespace sparsepair

#include "sparsepair/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "sparsepair/errors.hpp"
#include "sparsepair/random.hpp"

namespace sparsepair {

namespace {

// floor(x) that does not lose a unit when x is an integer up to rounding,
// e.g. 0.3 * 2450.
std::size_t robust_floor(double x) { return static_cast<std::size_t>(std::floor(x + 1e-9)); }

void check_k(std::size_t k) {
    if (k < 2) throw ParameterError(fmt::format("need at least 2 documents, got k = {}", k));
}

void check_rate(double rate) {
    if (!(rate > 0.0 && rate <= 1.0)) {
        throw ParameterError(fmt::format("sampling rate must lie in (0, 1], got {}", rate));
    }
}

void check_window(std::size_t k, std::size_t window) {
    if (window < 1 || window > k - 1) {
        throw ParameterError(fmt::format("window size must lie in [1, {}], got {}", k - 1, window));
    }
}

void check_skip(std::size_t k, std::size_t skip) {
    if (skip < 1) throw ParameterError("skip size must be at least 1");
    if (skip % k == 0) {
        throw ParameterError(
            fmt::format("skip size {} is a multiple of k = {}; every comparison would be a self-comparison",
                        skip, k));
    }
}

// Row i of S-Window as distinct partners in ascending order.
template <typename Emit>
void skip_window_row(std::size_t k, std::size_t window, std::size_t skip, DocIndex i,
                     std::vector<unsigned char>& seen, Emit&& emit) {
    std::fill(seen.begin(), seen.end(), 0);
    const std::size_t step = skip % k;
    std::size_t j = i;
    for (std::size_t c = 1; c <= window; ++c) {
        j = (j + step) % k;
        seen[j] = 1;
    }
    seen[i] = 0;
    for (DocIndex n = 0; n < k; ++n) {
        if (seen[n]) emit(n);
    }
}

}  // namespace

std::size_t global_random_size(std::size_t k, double rate) {
    check_k(k);
    check_rate(rate);
    const auto total = all_pairs_count(k);
    return std::max(robust_floor(rate * static_cast<double>(total)), k);
}

std::size_t window_for_rate(std::size_t k, double rate) {
    check_k(k);
    check_rate(rate);
    // k * m <= rate * k * (k - 1)  <=>  m <= rate * (k - 1)
    const auto m = robust_floor(rate * static_cast<double>(k - 1));
    return std::clamp<std::size_t>(m, 1, k - 1);
}

ComparisonSet sample_global_random(std::size_t k, double rate, std::uint64_t seed) {
    check_k(k);
    check_rate(rate);
    const std::size_t total = all_pairs_count(k);
    const std::size_t drawn = robust_floor(rate * static_cast<double>(total));
    const std::size_t target = std::max(drawn, k);

    Rng rng(seed);
    // Partial Fisher-Yates over linear off-diagonal indices.
    std::vector<std::size_t> grid(total);
    std::iota(grid.begin(), grid.end(), std::size_t{0});
    for (std::size_t n = 0; n < drawn; ++n) {
        const auto pick = n + rng.uniform_index(total - n);
        std::swap(grid[n], grid[pick]);
    }
    auto to_pair = [k](std::size_t linear) {
        const DocIndex i = linear / (k - 1);
        const DocIndex c = linear % (k - 1);
        return DocPair{i, c < i ? c : c + 1};
    };
    std::vector<DocPair> pairs;
    pairs.reserve(target + k);
    std::vector<std::size_t> row_count(k, 0);
    for (std::size_t n = 0; n < drawn; ++n) {
        pairs.push_back(to_pair(grid[n]));
        ++row_count[pairs.back().first];
    }

    for (DocIndex i = 0; i < k; ++i) {
        if (row_count[i] != 0) continue;
        DocIndex j = rng.uniform_index(k - 1);
        if (j >= i) ++j;
        pairs.push_back({i, j});
        row_count[i] = 1;
        if (pairs.size() <= target) continue;
        std::vector<std::size_t> removable;
        for (std::size_t n = 0; n < pairs.size(); ++n) {
            if (row_count[pairs[n].first] >= 2) removable.push_back(n);
        }
        // pairs.size() > target >= k with every row covered implies some row holds two.
        const auto victim = removable[rng.uniform_index(removable.size())];
        --row_count[pairs[victim].first];
        pairs[victim] = pairs.back();
        pairs.pop_back();
    }
    return ComparisonSet(k, std::move(pairs));
}

ComparisonSet sample_neighborhood_window(std::size_t k, std::size_t window) {
    check_k(k);
    check_window(k, window);
    std::vector<DocPair> pairs;
    pairs.reserve(k * window);
    for (DocIndex i = 0; i < k; ++i) {
        for (std::size_t c = 1; c <= window; ++c) pairs.push_back({i, (i + c) % k});
    }
    return ComparisonSet(k, std::move(pairs));
}

ComparisonSet sample_skip_window(std::size_t k, std::size_t window, std::size_t skip) {
    check_k(k);
    check_window(k, window);
    check_skip(k, skip);
    std::vector<DocPair> pairs;
    pairs.reserve(k * window);
    std::vector<unsigned char> seen(k);
    for (DocIndex i = 0; i < k; ++i) {
        skip_window_row(k, window, skip, i, seen, [&](DocIndex j) { pairs.push_back({i, j}); });
    }
    return ComparisonSet(k, std::move(pairs));
}

void validate(const SamplerSpec& spec, std::size_t k) {
    check_k(k);
    if (const auto* g = std::get_if<GlobalRandom>(&spec)) check_rate(g->rate);
    if (const auto* n = std::get_if<NeighborhoodWindow>(&spec)) check_window(k, n->window);
    if (const auto* s = std::get_if<SkipWindow>(&spec)) {
        check_window(k, s->window);
        check_skip(k, s->skip);
    }
}

ComparisonSet sample(const SamplerSpec& spec, std::size_t k) {
    struct Visitor {
        std::size_t k;
        ComparisonSet operator()(const FullComparison&) const {
            check_k(k);
            return ComparisonSet::all_pairs(k);
        }
        ComparisonSet operator()(const GlobalRandom& g) const { return sample_global_random(k, g.rate, g.seed); }
        ComparisonSet operator()(const NeighborhoodWindow& n) const {
            return sample_neighborhood_window(k, n.window);
        }
        ComparisonSet operator()(const SkipWindow& s) const { return sample_skip_window(k, s.window, s.skip); }
    };
    return std::visit(Visitor{k}, spec);
}

double effective_rate(const SamplerSpec& spec, std::size_t k) {
    validate(spec, k);
    const auto total = static_cast<double>(all_pairs_count(k));
    struct Visitor {
        std::size_t k;
        std::size_t operator()(const FullComparison&) const { return all_pairs_count(k); }
        std::size_t operator()(const GlobalRandom& g) const { return global_random_size(k, g.rate); }
        std::size_t operator()(const NeighborhoodWindow& n) const { return k * n.window; }
        std::size_t operator()(const SkipWindow& s) const {
            std::size_t count = 0;
            std::vector<unsigned char> seen(k);
            for (DocIndex i = 0; i < k; ++i) {
                skip_window_row(k, s.window, s.skip, i, seen, [&](DocIndex) { ++count; });
            }
            return count;
        }
    };
    return static_cast<double>(std::visit(Visitor{k}, spec)) / total;
}

}  // namespace sparsepair

#pragma once

/** \file model.hpp
 *  \brief Shared value types: top-k lists, preference matrices, comparison
 *  sets, rankings and sampler parameters.
 *
 * Documents are addressed by their 0-based position in the pointwise
 * ranking (DocIndex). Everything here is immutable after construction and
 * validated on construction.
 */

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace sparsepair {

using DocId = std::string;
/// 0-based position of a document in the pointwise top-k order.
using DocIndex = std::size_t;

/// Ordered document pair (i, j): "is d_i more relevant than d_j?".
struct DocPair {
    DocIndex first;
    DocIndex second;

    friend auto operator<=>(const DocPair&, const DocPair&) = default;
};

/// Number of ordered off-diagonal pairs, k^2 - k.
constexpr std::size_t all_pairs_count(std::size_t k) noexcept { return k * k - k; }

/// Candidate list of one query in pointwise rank order (rank 1 first).
class TopKList {
public:
    /// Throws InputError on k < 2, empty or duplicate ids.
    TopKList(std::string query_id, std::vector<DocId> docs);

    const std::string& query_id() const noexcept { return query_id_; }
    std::span<const DocId> docs() const noexcept { return docs_; }
    std::size_t k() const noexcept { return docs_.size(); }

private:
    std::string query_id_;
    std::vector<DocId> docs_;
};

/// Dense matrix of directed preference probabilities p_ij for all k^2 - k
/// ordered pairs of one query. The diagonal is not part of the matrix.
class PreferenceMatrix {
public:
    /// `values` is row-major k x k; diagonal entries are ignored.
    /// Throws ValidationError if an off-diagonal value is outside [0, 1].
    PreferenceMatrix(std::string query_id, std::vector<DocId> docs, std::vector<double> values);

    /// Same, with document ids "d1" .. "dk".
    PreferenceMatrix(std::string query_id, std::size_t k, std::vector<double> values);

    double operator()(DocIndex i, DocIndex j) const noexcept { return values_[i * k_ + j]; }

    const std::string& query_id() const noexcept { return query_id_; }
    std::span<const DocId> docs() const noexcept { return docs_; }
    std::size_t k() const noexcept { return k_; }
    std::size_t entry_count() const noexcept { return all_pairs_count(k_); }

    /// Matrix whose document `n` is this matrix's document `order[n]`.
    PreferenceMatrix permuted(std::span<const DocIndex> order) const;

    /// Reindexes to the order of `list`. Throws InputError naming the query
    /// if the two do not hold the same document set.
    PreferenceMatrix aligned_to(const TopKList& list) const;

private:
    std::string query_id_;
    std::vector<DocId> docs_;
    std::size_t k_;
    std::vector<double> values_;
};

/// Set of ordered pairs sampled for inference.
///
/// Invariants: no self-pairs, no duplicates, every index in [0, k) occurs in
/// at least one pair. Pairs are kept sorted.
class ComparisonSet {
public:
    /// Throws InputError if an invariant is violated.
    ComparisonSet(std::size_t k, std::vector<DocPair> pairs);

    /// C_all: every ordered off-diagonal pair.
    static ComparisonSet all_pairs(std::size_t k);

    bool contains(DocIndex i, DocIndex j) const noexcept { return member_[i * k_ + j] != 0; }
    std::span<const DocPair> pairs() const noexcept { return pairs_; }
    std::size_t size() const noexcept { return pairs_.size(); }
    std::size_t k() const noexcept { return k_; }
    /// |C| / (k^2 - k).
    double rate() const noexcept;

    friend bool operator==(const ComparisonSet& a, const ComparisonSet& b) {
        return a.k_ == b.k_ && a.pairs_ == b.pairs_;
    }

private:
    std::size_t k_;
    std::vector<DocPair> pairs_;
    std::vector<unsigned char> member_;
};

struct RankedDoc {
    DocId doc;
    double score;
    /// Position of the document in the list the scores were computed on.
    DocIndex index;
};

/// Ranked list of one query, best first, with non-increasing scores.
class Ranking {
public:
    /// Throws InputError on increasing scores or duplicate documents.
    Ranking(std::string query_id, std::vector<RankedDoc> entries, std::string tag);

    /// Sorts documents by descending score. Equal scores keep the smaller
    /// (better pointwise) index first.
    static Ranking from_scores(std::string query_id, std::span<const DocId> docs,
                               std::span<const double> scores, std::string tag);

    const std::string& query_id() const noexcept { return query_id_; }
    const std::string& tag() const noexcept { return tag_; }
    std::span<const RankedDoc> entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }

    /// Indices of the documents, best first.
    std::vector<DocIndex> order() const;

    Ranking retagged(std::string tag) const { return Ranking(query_id_, entries_, std::move(tag)); }

private:
    std::string query_id_;
    std::vector<RankedDoc> entries_;
    std::string tag_;
};

TopKList to_topk(const Ranking& ranking);

// Sampler parameters. One alternative per sampling method.

/// No sampling: C = C_all.
struct FullComparison {
    friend bool operator==(const FullComparison&, const FullComparison&) = default;
};

/// G-Random: a fraction `rate` of C_all drawn uniformly.
struct GlobalRandom {
    double rate;
    std::uint64_t seed;
    friend bool operator==(const GlobalRandom&, const GlobalRandom&) = default;
};

/// N-Window: each document against its `window` successors (wrapping).
struct NeighborhoodWindow {
    std::size_t window;
    friend bool operator==(const NeighborhoodWindow&, const NeighborhoodWindow&) = default;
};

/// S-Window: each document against every `skip`-th successor, `window` times.
struct SkipWindow {
    std::size_t window;
    std::size_t skip;
    friend bool operator==(const SkipWindow&, const SkipWindow&) = default;
};

using SamplerSpec = std::variant<FullComparison, GlobalRandom, NeighborhoodWindow, SkipWindow>;

/// Short method name: "none", "g-random", "n-window", "s-window".
std::string sampler_name(const SamplerSpec& spec);

}  // namespace sparsepair

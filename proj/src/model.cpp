#include "sparsepair/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include <fmt/format.h>

#include "sparsepair/errors.hpp"

namespace sparsepair {

namespace {

void check_unique_ids(const std::string& query_id, std::span<const DocId> docs) {
    std::unordered_set<std::string_view> seen;
    seen.reserve(docs.size());
    for (const auto& doc : docs) {
        if (doc.empty()) throw InputError(fmt::format("query {}: empty document id", query_id));
        if (!seen.insert(doc).second) {
            throw InputError(fmt::format("query {}: duplicate document id '{}'", query_id, doc));
        }
    }
}

std::vector<DocId> default_ids(std::size_t k) {
    std::vector<DocId> ids;
    ids.reserve(k);
    for (std::size_t i = 0; i < k; ++i) ids.push_back(fmt::format("d{}", i + 1));
    return ids;
}

}  // namespace

TopKList::TopKList(std::string query_id, std::vector<DocId> docs)
    : query_id_(std::move(query_id)), docs_(std::move(docs)) {
    if (docs_.size() < 2) {
        throw InputError(fmt::format("query {}: top-k list needs at least 2 documents, got {}",
                                     query_id_, docs_.size()));
    }
    check_unique_ids(query_id_, docs_);
}

PreferenceMatrix::PreferenceMatrix(std::string query_id, std::vector<DocId> docs,
                                   std::vector<double> values)
    : query_id_(std::move(query_id)), docs_(std::move(docs)), k_(docs_.size()),
      values_(std::move(values)) {
    if (values_.size() != k_ * k_) {
        throw InputError(fmt::format("query {}: expected {} matrix values, got {}", query_id_,
                                     k_ * k_, values_.size()));
    }
    check_unique_ids(query_id_, docs_);
    for (std::size_t i = 0; i < k_; ++i) {
        for (std::size_t j = 0; j < k_; ++j) {
            double& v = values_[i * k_ + j];
            if (i == j) {
                v = 0.0;
                continue;
            }
            if (!(v >= 0.0 && v <= 1.0)) {
                throw ValidationError(fmt::format("query {}: probability p({},{}) = {} outside [0,1]",
                                                  query_id_, i + 1, j + 1, v));
            }
        }
    }
}

PreferenceMatrix::PreferenceMatrix(std::string query_id, std::size_t k, std::vector<double> values)
    : PreferenceMatrix(std::move(query_id), default_ids(k), std::move(values)) {}

PreferenceMatrix PreferenceMatrix::permuted(std::span<const DocIndex> order) const {
    if (order.size() != k_) throw InputError("permutation size does not match matrix dimension");
    std::vector<DocId> docs(k_);
    std::vector<double> values(k_ * k_, 0.0);
    for (std::size_t a = 0; a < k_; ++a) {
        docs[a] = docs_.at(order[a]);
        for (std::size_t b = 0; b < k_; ++b) {
            if (a != b) values[a * k_ + b] = (*this)(order[a], order[b]);
        }
    }
    return PreferenceMatrix(query_id_, std::move(docs), std::move(values));
}

PreferenceMatrix PreferenceMatrix::aligned_to(const TopKList& list) const {
    if (list.k() != k_) {
        throw InputError(fmt::format("query {}: preference cache has k = {} but the pointwise run has k = {}",
                                     query_id_, k_, list.k()));
    }
    std::unordered_map<std::string_view, DocIndex> position;
    for (DocIndex i = 0; i < k_; ++i) position.emplace(docs_[i], i);
    std::vector<DocIndex> order;
    order.reserve(k_);
    for (const auto& doc : list.docs()) {
        auto it = position.find(doc);
        if (it == position.end()) {
            throw InputError(fmt::format("query {}: document '{}' of the pointwise run is not in the preference cache",
                                         query_id_, doc));
        }
        order.push_back(it->second);
    }
    return permuted(order);
}

ComparisonSet::ComparisonSet(std::size_t k, std::vector<DocPair> pairs)
    : k_(k), pairs_(std::move(pairs)), member_(k * k, 0) {
    std::vector<unsigned char> covered(k, 0);
    for (const auto& [i, j] : pairs_) {
        if (i >= k || j >= k) {
            throw InputError(fmt::format("comparison ({},{}) outside a {}-document list", i + 1, j + 1, k));
        }
        if (i == j) throw InputError(fmt::format("self-comparison ({},{})", i + 1, j + 1));
        auto& slot = member_[i * k + j];
        if (slot) throw InputError(fmt::format("duplicate comparison ({},{})", i + 1, j + 1));
        slot = 1;
        covered[i] = covered[j] = 1;
    }
    for (std::size_t i = 0; i < k; ++i) {
        if (!covered[i]) throw InputError(fmt::format("document {} is not part of any comparison", i + 1));
    }
    if (!std::is_sorted(pairs_.begin(), pairs_.end())) std::sort(pairs_.begin(), pairs_.end());
}

ComparisonSet ComparisonSet::all_pairs(std::size_t k) {
    std::vector<DocPair> pairs;
    pairs.reserve(all_pairs_count(k));
    for (DocIndex i = 0; i < k; ++i) {
        for (DocIndex j = 0; j < k; ++j) {
            if (i != j) pairs.push_back({i, j});
        }
    }
    return ComparisonSet(k, std::move(pairs));
}

double ComparisonSet::rate() const noexcept {
    const auto total = all_pairs_count(k_);
    return total == 0 ? 0.0 : static_cast<double>(pairs_.size()) / static_cast<double>(total);
}

Ranking::Ranking(std::string query_id, std::vector<RankedDoc> entries, std::string tag)
    : query_id_(std::move(query_id)), entries_(std::move(entries)), tag_(std::move(tag)) {
    std::unordered_set<std::string_view> seen;
    for (std::size_t n = 0; n < entries_.size(); ++n) {
        if (!seen.insert(entries_[n].doc).second) {
            throw InputError(fmt::format("query {}: duplicate document '{}' in ranking", query_id_,
                                         entries_[n].doc));
        }
        if (n > 0 && entries_[n].score > entries_[n - 1].score) {
            throw InputError(fmt::format("query {}: ranking scores increase at rank {}", query_id_, n + 1));
        }
    }
}

Ranking Ranking::from_scores(std::string query_id, std::span<const DocId> docs,
                             std::span<const double> scores, std::string tag) {
    if (docs.size() != scores.size()) throw InputError("score count does not match document count");
    std::vector<DocIndex> order(docs.size());
    std::iota(order.begin(), order.end(), DocIndex{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](DocIndex a, DocIndex b) { return scores[a] > scores[b]; });
    std::vector<RankedDoc> entries;
    entries.reserve(order.size());
    for (DocIndex i : order) entries.push_back({docs[i], scores[i], i});
    return Ranking(std::move(query_id), std::move(entries), std::move(tag));
}

std::vector<DocIndex> Ranking::order() const {
    std::vector<DocIndex> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.index);
    return out;
}

TopKList to_topk(const Ranking& ranking) {
    std::vector<DocId> docs;
    docs.reserve(ranking.size());
    for (const auto& e : ranking.entries()) docs.push_back(e.doc);
    return TopKList(ranking.query_id(), std::move(docs));
}

std::string sampler_name(const SamplerSpec& spec) {
    struct Visitor {
        std::string operator()(const FullComparison&) const { return "none"; }
        std::string operator()(const GlobalRandom&) const { return "g-random"; }
        std::string operator()(const NeighborhoodWindow&) const { return "n-window"; }
        std::string operator()(const SkipWindow&) const { return "s-window"; }
    };
    return std::visit(Visitor{}, spec);
}

}  // namespace sparsepair

#pragma once

/** \file io.hpp
 *  \brief On-disk formats.
 *
 *  - Preference cache: CSV with header `query_id,doc_i,doc_j,probability`,
 *    one line per ordered pair, every k^2 - k pair of a query present. A
 *    document's index is the order of its first appearance in the file.
 *  - Run: TREC six-column `qid Q0 docid rank score tag`.
 *  - Qrels: TREC four-column `qid 0 docid grade`.
 *  - Sweep report: JSON lines, one per (run, query).
 *
 *  Stream overloads report errors against `source`; path overloads use the
 *  file name. Parse errors carry the 1-based line number.
 */

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sparsepair/evaluation.hpp"
#include "sparsepair/model.hpp"

namespace sparsepair {

std::vector<PreferenceMatrix> parse_preference_cache(std::istream& in, std::string_view source = "<stream>");
std::vector<PreferenceMatrix> read_preference_cache(const std::filesystem::path& path);
void write_preference_cache(std::ostream& out, std::span<const PreferenceMatrix> matrices);
void write_preference_cache(const std::filesystem::path& path, std::span<const PreferenceMatrix> matrices);

/// Queries in order of first appearance. Within a query the file's ranks
/// are used when they are exactly 1..n with non-increasing scores;
/// otherwise documents are re-ranked by score (descending), then file order.
std::vector<Ranking> parse_run(std::istream& in, std::string_view source = "<stream>");
std::vector<Ranking> read_run(const std::filesystem::path& path);
/// Ranks start at 1, scores printed with six decimals.
void write_run(std::ostream& out, std::span<const Ranking> rankings);
void write_run(const std::filesystem::path& path, std::span<const Ranking> rankings);

struct QrelsFile {
    Qrels qrels;
    /// Negative grades (clamped to 0) and duplicate judgments (last wins).
    std::vector<std::string> warnings;
};

QrelsFile parse_qrels(std::istream& in, std::string_view source = "<stream>");
QrelsFile read_qrels(const std::filesystem::path& path);
/// Queries and documents in lexicographic order.
void write_qrels(std::ostream& out, const Qrels& qrels);
void write_qrels(const std::filesystem::path& path, const Qrels& qrels);

/// Lines in run order, queries in their order inside the run.
void write_sweep_report(std::ostream& out, const SweepReport& report);
void write_sweep_report(const std::filesystem::path& path, const SweepReport& report);
/// Regroups lines into runs by (corpus_tag, sampler, aggregator, rate,
/// repetition) in order of first appearance.
SweepReport parse_sweep_report(std::istream& in, std::string_view source = "<stream>");
SweepReport read_sweep_report(const std::filesystem::path& path);

}  // namespace sparsepair

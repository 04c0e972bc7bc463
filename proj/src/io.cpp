#include "sparsepair/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <tuple>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>
#include <json.hpp>

#include "sparsepair/errors.hpp"

namespace sparsepair {

namespace {

using nlohmann::json;

constexpr std::string_view cache_header = "query_id,doc_i,doc_j,probability";

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError(fmt::format("cannot open '{}' for reading", path.string()));
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError(fmt::format("cannot open '{}' for writing", path.string()));
    return out;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool is_blank(std::string_view line) {
    return line.find_first_not_of(" \t") == std::string_view::npos;
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        fields.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return fields;
}

std::vector<std::string> split_whitespace(const std::string& line) {
    std::istringstream ss(line);
    std::vector<std::string> out;
    for (std::string token; ss >> token;) out.push_back(std::move(token));
    return out;
}

template <typename T>
bool parse_number(std::string_view text, T& value) {
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    return ec == std::errc() && ptr == end;
}

std::string shortest(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

[[noreturn]] void fail_line(std::string_view source, std::size_t line, std::string_view what) {
    throw SchemaError(fmt::format("{}:{}: {}", source, line, what));
}

struct CacheQuery {
    std::string query_id;
    std::vector<DocId> docs;
    std::unordered_map<std::string, DocIndex> index;
    std::map<std::pair<DocIndex, DocIndex>, double> values;

    DocIndex intern(std::string_view doc) {
        auto [it, inserted] = index.emplace(std::string(doc), docs.size());
        if (inserted) docs.emplace_back(doc);
        return it->second;
    }
};

}  // namespace

std::vector<PreferenceMatrix> parse_preference_cache(std::istream& in, std::string_view source) {
    std::vector<CacheQuery> queries;
    std::unordered_map<std::string, std::size_t> query_slot;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (is_blank(line)) continue;
        if (!header_seen) {
            if (line != cache_header) fail_line(source, line_no, fmt::format("expected header '{}'", cache_header));
            header_seen = true;
            continue;
        }
        const auto fields = split_fields(line, ',');
        if (fields.size() != 4) fail_line(source, line_no, fmt::format("expected 4 fields, got {}", fields.size()));
        if (fields[0].empty() || fields[1].empty() || fields[2].empty()) fail_line(source, line_no, "empty field");
        double p = 0.0;
        if (!parse_number(fields[3], p)) fail_line(source, line_no, fmt::format("bad probability '{}'", fields[3]));
        if (!(p >= 0.0 && p <= 1.0)) {
            throw ValidationError(fmt::format("{}:{}: probability {} outside [0,1]", source, line_no, fields[3]));
        }
        if (fields[1] == fields[2]) fail_line(source, line_no, "self-comparison");

        auto [slot, inserted] = query_slot.emplace(std::string(fields[0]), queries.size());
        if (inserted) queries.push_back({std::string(fields[0]), {}, {}, {}});
        auto& q = queries[slot->second];
        const auto i = q.intern(fields[1]);
        const auto j = q.intern(fields[2]);
        if (!q.values.emplace(std::pair{i, j}, p).second) {
            fail_line(source, line_no, fmt::format("duplicate pair ({}, {}) for query {}", fields[1], fields[2],
                                                   q.query_id));
        }
    }

    std::vector<PreferenceMatrix> out;
    out.reserve(queries.size());
    for (auto& q : queries) {
        const std::size_t k = q.docs.size();
        std::vector<double> values(k * k, 0.0);
        for (DocIndex i = 0; i < k; ++i) {
            for (DocIndex j = 0; j < k; ++j) {
                if (i == j) continue;
                auto it = q.values.find({i, j});
                if (it == q.values.end()) {
                    throw SchemaError(fmt::format("{}: query {}, pair ({},{}) [{} vs {}] missing from the cache",
                                                  source, q.query_id, i + 1, j + 1, q.docs[i], q.docs[j]));
                }
                values[i * k + j] = it->second;
            }
        }
        out.emplace_back(q.query_id, std::move(q.docs), std::move(values));
    }
    return out;
}

std::vector<PreferenceMatrix> read_preference_cache(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_preference_cache(in, path.string());
}

void write_preference_cache(std::ostream& out, std::span<const PreferenceMatrix> matrices) {
    out << cache_header << '\n';
    for (const auto& m : matrices) {
        for (const auto& doc : m.docs()) {
            if (doc.find_first_of(",\n\r") != std::string::npos) {
                throw SchemaError(fmt::format("document id '{}' cannot be written to a CSV cache", doc));
            }
        }
        for (DocIndex i = 0; i < m.k(); ++i) {
            for (DocIndex j = 0; j < m.k(); ++j) {
                if (i == j) continue;
                out << m.query_id() << ',' << m.docs()[i] << ',' << m.docs()[j] << ',' << shortest(m(i, j)) << '\n';
            }
        }
    }
}

void write_preference_cache(const std::filesystem::path& path, std::span<const PreferenceMatrix> matrices) {
    auto out = open_output(path);
    write_preference_cache(out, matrices);
}

std::vector<Ranking> parse_run(std::istream& in, std::string_view source) {
    struct Line {
        DocId doc;
        long rank;
        double score;
        std::string tag;
    };
    std::vector<std::pair<std::string, std::vector<Line>>> queries;
    std::unordered_map<std::string, std::size_t> slot;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (is_blank(line)) continue;
        const auto f = split_whitespace(line);
        if (f.size() != 6) fail_line(source, line_no, fmt::format("expected 6 columns, got {}", f.size()));
        Line entry{f[2], 0, 0.0, f[5]};
        if (!parse_number(std::string_view(f[3]), entry.rank)) fail_line(source, line_no, "bad rank");
        if (!parse_number(std::string_view(f[4]), entry.score)) fail_line(source, line_no, "bad score");
        auto [it, inserted] = slot.emplace(f[0], queries.size());
        if (inserted) queries.emplace_back(f[0], std::vector<Line>{});
        queries[it->second].second.push_back(std::move(entry));
    }

    std::vector<Ranking> out;
    out.reserve(queries.size());
    for (auto& [qid, lines] : queries) {
        std::vector<std::size_t> order(lines.size());
        for (std::size_t n = 0; n < order.size(); ++n) order[n] = n;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return lines[a].rank < lines[b].rank; });
        bool use_ranks = true;
        for (std::size_t r = 0; r < order.size() && use_ranks; ++r) {
            if (lines[order[r]].rank != static_cast<long>(r + 1)) use_ranks = false;
            if (r > 0 && lines[order[r]].score > lines[order[r - 1]].score) use_ranks = false;
        }
        if (!use_ranks) {
            for (std::size_t n = 0; n < order.size(); ++n) order[n] = n;
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return lines[a].score > lines[b].score; });
        }
        std::vector<RankedDoc> entries;
        entries.reserve(order.size());
        for (std::size_t r = 0; r < order.size(); ++r) {
            entries.push_back({lines[order[r]].doc, lines[order[r]].score, r});
        }
        std::string tag = lines.empty() ? std::string() : lines.front().tag;
        try {
            out.emplace_back(qid, std::move(entries), std::move(tag));
        } catch (const InputError& e) {
            throw SchemaError(fmt::format("{}: {}", source, e.what()));
        }
    }
    return out;
}

std::vector<Ranking> read_run(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_run(in, path.string());
}

void write_run(std::ostream& out, std::span<const Ranking> rankings) {
    for (const auto& ranking : rankings) {
        std::size_t rank = 1;
        for (const auto& e : ranking.entries()) {
            out << fmt::format("{} Q0 {} {} {:.6f} {}\n", ranking.query_id(), e.doc, rank++, e.score, ranking.tag());
        }
    }
}

void write_run(const std::filesystem::path& path, std::span<const Ranking> rankings) {
    auto out = open_output(path);
    write_run(out, rankings);
}

QrelsFile parse_qrels(std::istream& in, std::string_view source) {
    QrelsFile result;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (is_blank(line)) continue;
        const auto f = split_whitespace(line);
        if (f.size() != 4) fail_line(source, line_no, fmt::format("expected 4 columns, got {}", f.size()));
        int grade = 0;
        if (!parse_number(std::string_view(f[3]), grade)) fail_line(source, line_no, "bad grade");
        if (grade < 0) {
            result.warnings.push_back(fmt::format("{}:{}: negative grade {} for query {}, document {} clamped to 0",
                                                  source, line_no, grade, f[0], f[2]));
            grade = 0;
        }
        if (result.qrels.grade(f[0], f[2])) {
            result.warnings.push_back(fmt::format("{}:{}: duplicate judgment for query {}, document {}; last one wins",
                                                  source, line_no, f[0], f[2]));
        }
        result.qrels.set(f[0], f[2], grade);
    }
    return result;
}

QrelsFile read_qrels(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_qrels(in, path.string());
}

void write_qrels(std::ostream& out, const Qrels& qrels) {
    for (const auto& qid : qrels.queries()) {
        const auto* judged = qrels.judgments(qid);
        std::vector<std::pair<DocId, int>> sorted(judged->begin(), judged->end());
        std::sort(sorted.begin(), sorted.end());
        for (const auto& [doc, grade] : sorted) out << qid << " 0 " << doc << ' ' << grade << '\n';
    }
}

void write_qrels(const std::filesystem::path& path, const Qrels& qrels) {
    auto out = open_output(path);
    write_qrels(out, qrels);
}

namespace {

json params_to_json(const SamplerSpec& spec) {
    struct Visitor {
        json operator()(const FullComparison&) const { return json::object(); }
        json operator()(const GlobalRandom& g) const { return {{"r", g.rate}, {"seed", g.seed}}; }
        json operator()(const NeighborhoodWindow& n) const { return {{"m", n.window}}; }
        json operator()(const SkipWindow& s) const { return {{"lambda", s.skip}, {"m", s.window}}; }
    };
    return std::visit(Visitor{}, spec);
}

SamplerSpec params_from_json(std::string_view sampler, const json& params) {
    if (sampler == "none") return FullComparison{};
    if (sampler == "g-random") return GlobalRandom{params.at("r").get<double>(), params.at("seed").get<std::uint64_t>()};
    if (sampler == "n-window") return NeighborhoodWindow{params.at("m").get<std::size_t>()};
    if (sampler == "s-window") {
        return SkipWindow{params.at("m").get<std::size_t>(), params.at("lambda").get<std::size_t>()};
    }
    throw SchemaError(fmt::format("unknown sampler '{}'", sampler));
}

}  // namespace

void write_sweep_report(std::ostream& out, const SweepReport& report) {
    for (const auto& run : report.runs) {
        for (const auto& q : run.queries) {
            const auto grid = all_pairs_count(q.k);
            json line = {
                {"corpus_tag", run.corpus_tag},
                {"query_id", q.query_id},
                {"sampler", run.sampler},
                {"params", params_to_json(q.sampler)},
                {"aggregator", run.aggregator},
                {"rate", run.rate},
                {"effective_rate", grid == 0 ? 0.0 : static_cast<double>(q.comparisons) / static_cast<double>(grid)},
                {"repetition", run.repetition},
                {"k", q.k},
                {"comparisons", q.comparisons},
                {"ndcg", q.ndcg},
            };
            out << line.dump() << '\n';
        }
    }
}

void write_sweep_report(const std::filesystem::path& path, const SweepReport& report) {
    auto out = open_output(path);
    write_sweep_report(out, report);
}

SweepReport parse_sweep_report(std::istream& in, std::string_view source) {
    SweepReport report;
    std::map<std::tuple<std::string, std::string, std::string, double, std::size_t>, std::size_t> slot;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (is_blank(line)) continue;
        try {
            const auto j = json::parse(line);
            RunRecord key;
            key.corpus_tag = j.at("corpus_tag").get<std::string>();
            key.sampler = j.at("sampler").get<std::string>();
            key.aggregator = j.at("aggregator").get<std::string>();
            key.rate = j.at("rate").get<double>();
            key.repetition = j.at("repetition").get<std::size_t>();
            QueryOutcome q;
            q.query_id = j.at("query_id").get<std::string>();
            q.k = j.at("k").get<std::size_t>();
            q.sampler = params_from_json(key.sampler, j.at("params"));
            q.comparisons = j.at("comparisons").get<std::uint64_t>();
            q.ndcg = j.at("ndcg").get<double>();
            auto [it, inserted] = slot.emplace(
                std::tuple{key.corpus_tag, key.sampler, key.aggregator, key.rate, key.repetition}, report.runs.size());
            if (inserted) report.runs.push_back(std::move(key));
            report.runs[it->second].queries.push_back(std::move(q));
        } catch (const json::exception& e) {
            fail_line(source, line_no, e.what());
        }
    }
    return report;
}

SweepReport read_sweep_report(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_sweep_report(in, path.string());
}

}  // namespace sparsepair

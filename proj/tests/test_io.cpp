#include <doctest.h>

#include <filesystem>
#include <functional>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "sparsepair/errors.hpp"
#include "sparsepair/io.hpp"
#include "sparsepair/simulation.hpp"

using namespace sparsepair;

namespace {

std::string cache_text(const std::vector<PreferenceMatrix>& ms) {
    std::ostringstream out;
    write_preference_cache(out, ms);
    return out.str();
}

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("preference cache round-trips bit-exactly") {
    std::mt19937_64 gen(3);
    std::vector<PreferenceMatrix> ms;
    for (std::size_t k : {2u, 3u, 7u}) {
        auto v = oracle::random_values(k, gen);
        v[1] = 0.1 + 0.2;  // a value with a long shortest representation
        ms.emplace_back("q" + std::to_string(k), k, v);
    }
    ms.push_back(generate_preferences(calibrated_spec(20)).prefs);
    const auto text = cache_text(ms);
    std::istringstream in(text);
    const auto back = parse_preference_cache(in);
    REQUIRE(back.size() == ms.size());
    for (std::size_t n = 0; n < ms.size(); ++n) {
        CHECK(back[n].query_id() == ms[n].query_id());
        REQUIRE(back[n].k() == ms[n].k());
        CHECK(std::equal(back[n].docs().begin(), back[n].docs().end(), ms[n].docs().begin()));
        for (std::size_t i = 0; i < ms[n].k(); ++i) {
            for (std::size_t j = 0; j < ms[n].k(); ++j) CHECK(back[n](i, j) == ms[n](i, j));
        }
    }
    CHECK(cache_text(back) == text);
}

TEST_CASE("preference cache line format") {
    std::istringstream in("query_id,doc_i,doc_j,probability\nq1,docA,docB,0.8314\nq1,docB,docA,0.2\n");
    const auto ms = parse_preference_cache(in);
    REQUIRE(ms.size() == 1);
    CHECK(ms[0].docs()[0] == "docA");
    CHECK(ms[0](0, 1) == 0.8314);
    CHECK(ms[0](1, 0) == 0.2);
}

TEST_CASE("preference cache rejects sparse and out-of-range input") {
    std::ostringstream text;
    text << "query_id,doc_i,doc_j,probability\n";
    const char* docs[] = {"a", "b", "c"};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            if (i == j || (i == 2 && j == 0)) continue;  // drop p(3,1)
            text << "q7," << docs[i] << ',' << docs[j] << ",0.5\n";
        }
    }
    std::istringstream in(text.str());
    const auto msg = message_of([&] { (void)parse_preference_cache(in, "cache.csv"); });
    CHECK(msg.find("q7, pair (3,1)") != std::string::npos);
    std::istringstream again(text.str());
    CHECK_THROWS_AS(parse_preference_cache(again), SchemaError);

    std::istringstream range("query_id,doc_i,doc_j,probability\nq1,a,b,1.5\nq1,b,a,0.5\n");
    CHECK_THROWS_AS(parse_preference_cache(range), ValidationError);

    std::istringstream duplicate("query_id,doc_i,doc_j,probability\nq1,a,b,0.5\nq1,a,b,0.5\n");
    CHECK_THROWS_AS(parse_preference_cache(duplicate), SchemaError);

    std::istringstream malformed("query_id,doc_i,doc_j,probability\nq1,a,b\n");
    const auto line_msg = message_of([&] { (void)parse_preference_cache(malformed, "m.csv"); });
    CHECK(line_msg.find("m.csv:2") != std::string::npos);
}

TEST_CASE("run files") {
    std::istringstream in("q1 Q0 docA 1 4.000000 sparsepairrank\nq1 Q0 docB 2 3.500000 sparsepairrank\n");
    const auto runs = parse_run(in);
    REQUIRE(runs.size() == 1);
    CHECK(runs[0].tag() == "sparsepairrank");
    std::ostringstream out;
    write_run(out, runs);
    CHECK(out.str() == "q1 Q0 docA 1 4.000000 sparsepairrank\nq1 Q0 docB 2 3.500000 sparsepairrank\n");

    // Ranks 1, 3, 4 are not contiguous: re-ranked by score, then file order.
    std::istringstream gaps("q2  Q0\tx 1 1.0 t\nq2 Q0 y 3 2.0 t\nq2 Q0 z 4 2.0 t\n");
    const auto r = parse_run(gaps);
    REQUIRE(r.size() == 1);
    CHECK(r[0].entries()[0].doc == "y");
    CHECK(r[0].entries()[1].doc == "z");
    CHECK(r[0].entries()[2].doc == "x");

    std::istringstream empty("");
    CHECK(parse_run(empty).empty());

    std::istringstream bad("q1 Q0 a 1 1.0 t\nq1 Q0 b two 0.5 t\n");
    const auto msg = message_of([&] { (void)parse_run(bad, "run.txt"); });
    CHECK(msg.find("run.txt:2") != std::string::npos);
}

TEST_CASE("qrels files") {
    std::istringstream in("q1 0 docA 2\nq1 0 docB -2\nq1 0 docC 1\nq1 0 docC 3\n");
    const auto file = parse_qrels(in, "qrels.txt");
    CHECK(file.qrels.grade("q1", "docA") == 2);
    CHECK(file.qrels.grade("q1", "docB") == 0);
    CHECK(file.qrels.grade("q1", "docC") == 3);
    REQUIRE(file.warnings.size() == 2);
    CHECK(file.warnings[0].find("qrels.txt:2") != std::string::npos);
    CHECK(file.warnings[1].find("qrels.txt:4") != std::string::npos);

    std::ostringstream out;
    write_qrels(out, file.qrels);
    std::istringstream back(out.str());
    const auto again = parse_qrels(back);
    CHECK(again.warnings.empty());
    std::ostringstream out2;
    write_qrels(out2, again.qrels);
    CHECK(out2.str() == out.str());

    std::istringstream bad("q1 0 a\n");
    CHECK_THROWS_AS(parse_qrels(bad), SchemaError);
}

TEST_CASE("sweep report round-trip") {
    SweepReport report;
    RunRecord base;
    base.corpus_tag = "synthetic";
    base.sampler = "none";
    base.aggregator = "greedy";
    base.queries = {{"q1", 10, FullComparison{}, 90, 0.5}, {"q2", 12, FullComparison{}, 132, 0.1 + 0.2}};
    report.runs.push_back(base);
    RunRecord g = base;
    g.sampler = "g-random";
    g.rate = 0.3;
    g.repetition = 4;
    g.queries = {{"q1", 10, GlobalRandom{0.3, 123456789012345ULL}, 27, 0.25},
                 {"q2", 12, GlobalRandom{0.3, 9}, 39, 0.75}};
    report.runs.push_back(g);
    RunRecord s = base;
    s.sampler = "s-window";
    s.rate = 0.1;
    s.queries = {{"q1", 10, SkipWindow{1, 7}, 10, 0.4}, {"q2", 12, SkipWindow{1, 7}, 12, 0.0}};
    report.runs.push_back(s);

    std::ostringstream out;
    write_sweep_report(out, report);
    std::istringstream in(out.str());
    const auto back = parse_sweep_report(in);
    REQUIRE(back.runs.size() == 3);
    for (std::size_t n = 0; n < 3; ++n) {
        CHECK(back.runs[n].sampler == report.runs[n].sampler);
        CHECK(back.runs[n].rate == report.runs[n].rate);
        CHECK(back.runs[n].repetition == report.runs[n].repetition);
        REQUIRE(back.runs[n].queries.size() == 2);
        for (std::size_t q = 0; q < 2; ++q) {
            CHECK(back.runs[n].queries[q].ndcg == report.runs[n].queries[q].ndcg);
            CHECK(back.runs[n].queries[q].sampler == report.runs[n].queries[q].sampler);
            CHECK(back.runs[n].queries[q].comparisons == report.runs[n].queries[q].comparisons);
        }
    }
    std::ostringstream again;
    write_sweep_report(again, back);
    CHECK(again.str() == out.str());

    std::istringstream bad("{\"corpus_tag\": 1}\n");
    CHECK_THROWS_AS(parse_sweep_report(bad), SchemaError);
}

TEST_CASE("file paths") {
    const auto dir = std::filesystem::temp_directory_path() / "sparsepair_io_test";
    std::filesystem::create_directories(dir);
    const std::vector<PreferenceMatrix> ms = {generate_preferences(calibrated_spec(5)).prefs};
    write_preference_cache(dir / "c.csv", ms);
    CHECK(read_preference_cache(dir / "c.csv").size() == 1);
    CHECK_THROWS_AS(read_preference_cache(dir / "missing.csv"), InputError);
    std::filesystem::remove_all(dir);
}

}  // TEST_SUITE

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ssgd/rttm.hpp"

using namespace ssgd;

TEST_CASE("parse_rttm: single record") {
    auto files = parse_rttm("SPEAKER f1 1 0.00 10.00 <NA> <NA> A <NA> <NA>\n");
    REQUIRE(files.size() == 1);
    const auto& ann = files.at("f1");
    REQUIRE(ann.size() == 1);
    CHECK(ann.entries()[0].segment == Segment(0, 10));
    CHECK(ann.entries()[0].speaker == "A");
}

TEST_CASE("parse_rttm: empty input and ignored lines") {
    CHECK(parse_rttm("").empty());
    CHECK(parse_rttm("\n\nSPKR-INFO f1 1 <NA> <NA> <NA> unknown A <NA>\n").empty());
}

TEST_CASE("parse_rttm: touching segments are preserved verbatim") {
    auto files = parse_rttm(
        "SPEAKER f1 1 0.000 2.000 <NA> <NA> A <NA> <NA>\n"
        "SPEAKER f1 1 2.000 3.000 <NA> <NA> A <NA> <NA>\n");
    CHECK(files.at("f1").size() == 2);
}

TEST_CASE("parse_rttm: malformed lines raise with the line number") {
    CHECK_THROWS_WITH(parse_rttm("SPEAKER f1 1 0.0\n"),
                      Catch::Matchers::ContainsSubstring("line 1"));
    CHECK_THROWS_WITH(parse_rttm("\nSPEAKER f1 1 abc 2.0 <NA> <NA> A <NA> <NA>\n"),
                      Catch::Matchers::ContainsSubstring("line 2"));
    CHECK_THROWS_AS(parse_rttm("SPEAKER f1 1 1.0 -2.0 <NA> <NA> A <NA> <NA>\n"),
                    ParseError);
}

TEST_CASE("write_rttm: empty map and single record") {
    CHECK(write_rttm({}).empty());
    std::map<std::string, Annotation> files;
    files["f1"].add(Segment(0, 10), "A");
    CHECK(write_rttm(files) == "SPEAKER f1 1 0.000 10.000 <NA> <NA> A <NA> <NA>\n");
}

TEST_CASE("write_rttm: byte-stable output") {
    std::map<std::string, Annotation> files;
    files["f2"].add(Segment(3.2, 7.9), "B");
    files["f1"].add(Segment(0.5, 2.25), "A");
    files["f1"].add(Segment(0.25, 1.0), "C");
    CHECK(write_rttm(files) == write_rttm(files));
}

TEST_CASE("rttm round trip: parse(write(x)) = x within 1 ms") {
    std::mt19937 rng(59);
    std::uniform_real_distribution<double> u(0.0, 600.0);
    std::uniform_int_distribution<int> nseg(1, 20);
    for (int rep = 0; rep < 200; ++rep) {
        std::map<std::string, Annotation> files;
        Annotation& ann = files["file_" + std::to_string(rep % 3)];
        int n = nseg(rng);
        for (int i = 0; i < n; ++i) {
            double s = u(rng), d = 0.05 + u(rng) / 50;
            ann.add(Segment(s, s + d), "spk" + std::to_string(i % 5));
        }
        auto parsed = parse_rttm(write_rttm(files));
        for (auto& [file_id, original] : files) {
            Annotation expect = original;
            expect.sort();
            Annotation got = parsed.at(file_id);
            got.sort();
            REQUIRE(got.size() == expect.size());
            for (std::size_t i = 0; i < got.size(); ++i) {
                CHECK(got.entries()[i].speaker == expect.entries()[i].speaker);
                CHECK(std::abs(got.entries()[i].segment.start -
                               expect.entries()[i].segment.start) <= 0.0015);
                CHECK(std::abs(got.entries()[i].segment.end -
                               expect.entries()[i].segment.end) <= 0.002);
            }
        }
    }
}

TEST_CASE("parse_uem: basic, merge, empty") {
    auto files = parse_uem("f1 1 0.0 600.0\n");
    REQUIRE(files.at("f1").size() == 1);
    CHECK(files.at("f1")[0] == Segment(0, 600));

    auto merged = parse_uem("f1 1 0.0 100.0\nf1 1 50.0 200.0\n");
    REQUIRE(merged.at("f1").size() == 1);
    CHECK(merged.at("f1")[0] == Segment(0, 200));

    CHECK(parse_uem("").empty());
    CHECK_THROWS_AS(parse_uem("f1 1 0.0\n"), ParseError);
}

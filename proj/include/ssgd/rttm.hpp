#pragma once

#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssgd/core.hpp"

namespace ssgd {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

inline double parse_seconds(const std::string& tok, int line_no, const char* what) {
    try {
        std::size_t end = 0;
        double v = std::stod(tok, &end);
        if (end != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": bad " + what + " '" + tok + "'");
    }
}

}  // namespace detail

/// Parses SPEAKER lines of the 10-field NIST RTTM format. Non-SPEAKER lines
/// are ignored; blank lines skipped. Segments are kept verbatim (no merge).
inline std::map<std::string, Annotation> parse_rttm(const std::string& text) {
    std::map<std::string, Annotation> out;
    std::istringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        auto fields = detail::split_fields(line);
        if (fields.empty()) continue;
        if (fields[0] != "SPEAKER") continue;
        if (fields.size() < 10)
            throw ParseError("line " + std::to_string(line_no) +
                             ": SPEAKER line has " + std::to_string(fields.size()) +
                             " fields, expected 10");
        double onset = detail::parse_seconds(fields[3], line_no, "onset");
        double duration = detail::parse_seconds(fields[4], line_no, "duration");
        if (onset < 0.0)
            throw ParseError("line " + std::to_string(line_no) + ": negative onset");
        if (duration <= 0.0)
            throw ParseError("line " + std::to_string(line_no) + ": non-positive duration");
        out[fields[1]].add(Segment(onset, onset + duration), fields[7]);
    }
    return out;
}

/// One SPEAKER line per segment, times with 3 decimals, sorted by
/// (file-id, onset, speaker). Byte-stable for identical input.
inline std::string write_rttm(const std::map<std::string, Annotation>& files) {
    std::string out;
    char buf[512];
    for (const auto& [file_id, annotation] : files) {
        Annotation sorted = annotation;
        sorted.sort();
        for (const auto& e : sorted.entries()) {
            std::snprintf(buf, sizeof(buf),
                          "SPEAKER %s 1 %.3f %.3f <NA> <NA> %s <NA> <NA>\n",
                          file_id.c_str(), e.segment.start, e.segment.duration(),
                          e.speaker.c_str());
            out += buf;
        }
    }
    return out;
}

/// 4-field UEM lines (file, channel, start, end); regions of one file are
/// merged into their union.
inline std::map<std::string, std::vector<Segment>> parse_uem(const std::string& text) {
    std::map<std::string, std::vector<Segment>> out;
    std::istringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        auto fields = detail::split_fields(line);
        if (fields.empty() || fields[0][0] == ';') continue;
        if (fields.size() != 4)
            throw ParseError("line " + std::to_string(line_no) + ": UEM line has " +
                             std::to_string(fields.size()) + " fields, expected 4");
        double start = detail::parse_seconds(fields[2], line_no, "start");
        double end = detail::parse_seconds(fields[3], line_no, "end");
        if (end <= start)
            throw ParseError("line " + std::to_string(line_no) + ": end must exceed start");
        out[fields[0]].push_back(Segment(start, end));
    }
    for (auto& [file_id, regions] : out)
        regions = Annotation::merge_segments(std::move(regions));
    return out;
}

inline std::string write_uem(const std::map<std::string, std::vector<Segment>>& files) {
    std::string out;
    char buf[256];
    for (const auto& [file_id, regions] : files)
        for (const auto& r : Annotation::merge_segments(regions)) {
            std::snprintf(buf, sizeof(buf), "%s 1 %.3f %.3f\n", file_id.c_str(), r.start,
                          r.end);
            out += buf;
        }
    return out;
}

}  // namespace ssgd

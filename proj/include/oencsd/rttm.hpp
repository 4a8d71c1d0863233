// SPDX-License-Identifier: Apache-2.0
//
// Reader and writer for the standard SPEAKER-line annotation format used to
// interchange diarization references and hypotheses. Timestamps are written
// with exactly three decimals (millisecond grid, half away from zero), which
// makes write-then-parse an identity on the quantized records.

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "oencsd/common.hpp"
#include "oencsd/segments.hpp"

namespace oencsd {

struct RttmRecord {
    std::string file_id;
    double onset = 0.0;     // seconds, >= 0
    double duration = 0.0;  // seconds, > 0
    std::string speaker;

    bool operator==(const RttmRecord&) const = default;
};

namespace detail {

inline bool parse_seconds(const std::string& token, double& out) {
    std::size_t consumed = 0;
    try {
        out = std::stod(token, &consumed);
    } catch (const std::exception&) {
        return false;
    }
    return consumed == token.size() && std::isfinite(out);
}

inline std::string fixed3(double seconds) {
    const long long milli = std::llround(seconds * 1000.0);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lld.%03lld", milli / 1000, milli % 1000);
    return buf;
}

inline bool has_space(const std::string& s) {
    return std::any_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace detail

// Parses SPEAKER lines: type, file, channel, onset, duration, <NA>, <NA>,
// speaker, <NA>, <NA>. Blank lines and lines starting with '#' or ';' are
// skipped. Any other malformed line reports its number.
inline std::vector<RttmRecord> parse_rttm(const std::string& text) {
    std::vector<RttmRecord> records;
    std::istringstream lines(text);
    std::string line;
    int line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::vector<std::string> tok;
        std::string t;
        while (fields >> t) tok.push_back(t);
        if (tok.empty()) continue;
        if (tok[0][0] == '#' || tok[0][0] == ';') continue;
        const std::string where = "line " + std::to_string(line_no) + ": ";
        if (tok[0] != "SPEAKER")
            throw format_error(where + "expected a SPEAKER record, got '" + tok[0] + "'");
        if (tok.size() != 10)
            throw format_error(where + "expected 10 fields, got " +
                               std::to_string(tok.size()));
        RttmRecord r;
        r.file_id = tok[1];
        if (!detail::parse_seconds(tok[3], r.onset))
            throw format_error(where + "onset '" + tok[3] + "' is not a number");
        if (!detail::parse_seconds(tok[4], r.duration))
            throw format_error(where + "duration '" + tok[4] + "' is not a number");
        if (r.onset < 0.0) throw format_error(where + "onset must be >= 0");
        if (r.duration <= 0.0) throw format_error(where + "duration must be > 0");
        r.speaker = tok[7];
        records.push_back(std::move(r));
    }
    return records;
}

// One SPEAKER line per record, sorted by onset then speaker, timestamps with
// three decimals.
inline std::string write_rttm(std::vector<RttmRecord> records) {
    for (const RttmRecord& r : records) {
        if (r.onset < 0.0 || r.duration <= 0.0)
            throw contract_error("record timestamps out of range");
        if (r.file_id.empty() || detail::has_space(r.file_id) || r.speaker.empty() ||
            detail::has_space(r.speaker))
            throw contract_error("file and speaker ids must be non-empty without spaces");
    }
    std::stable_sort(records.begin(), records.end(),
                     [](const RttmRecord& a, const RttmRecord& b) {
                         if (a.onset != b.onset) return a.onset < b.onset;
                         return a.speaker < b.speaker;
                     });
    std::string out;
    for (const RttmRecord& r : records) {
        out += "SPEAKER " + r.file_id + " 1 " + detail::fixed3(r.onset) + " " +
               detail::fixed3(r.duration) + " <NA> <NA> " + r.speaker + " <NA> <NA>\n";
    }
    return out;
}

// Conversions between annotation records and scorer segments.
inline std::vector<Segment> segments_from_records(const std::vector<RttmRecord>& records) {
    std::vector<Segment> segs;
    segs.reserve(records.size());
    for (const RttmRecord& r : records)
        segs.push_back({r.speaker, r.onset, r.onset + r.duration});
    return segs;
}

inline std::vector<RttmRecord> records_from_segments(const std::string& file_id,
                                                     const std::vector<Segment>& segments) {
    std::vector<RttmRecord> records;
    records.reserve(segments.size());
    for (const Segment& s : segments) {
        if (!(s.end > s.start)) throw contract_error("segment end must exceed its start");
        records.push_back({file_id, s.start, s.end - s.start, s.speaker});
    }
    return records;
}

}  // namespace oencsd

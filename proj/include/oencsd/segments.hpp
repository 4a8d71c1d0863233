// SPDX-License-Identifier: Apache-2.0
//
// Speaker-labeled time segments: the common currency between the annotation
// file format, the scorer, the conversation generator, and the streaming
// session output.

#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "oencsd/common.hpp"

namespace oencsd {

struct Segment {
    std::string speaker;
    double start = 0.0;  // seconds
    double end = 0.0;    // seconds, end > start
};

// Per-speaker activity as a sorted union of disjoint intervals. Overlapping
// or touching segments of the same speaker merge into one interval; overlaps
// between different speakers are preserved.
inline std::map<std::string, std::vector<std::pair<double, double>>> normalize_segments(
    const std::vector<Segment>& segments) {
    std::map<std::string, std::vector<std::pair<double, double>>> by_speaker;
    for (const Segment& s : segments) {
        if (!(s.end > s.start)) throw contract_error("segment end must exceed its start");
        by_speaker[s.speaker].emplace_back(s.start, s.end);
    }
    for (auto& [speaker, intervals] : by_speaker) {
        std::sort(intervals.begin(), intervals.end());
        std::vector<std::pair<double, double>> merged;
        for (const auto& iv : intervals) {
            if (!merged.empty() && iv.first <= merged.back().second)
                merged.back().second = std::max(merged.back().second, iv.second);
            else
                merged.push_back(iv);
        }
        intervals = std::move(merged);
    }
    return by_speaker;
}

}  // namespace oencsd

// SPDX-License-Identifier: Apache-2.0
//
// Scoring: diarization error rate with a boundary tolerance collar, optimal
// reference-to-hypothesis speaker mapping, and attractor-assignment accuracy.
// All time accounting uses exact interval arithmetic; nothing is quantized
// to a frame grid.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "oencsd/assignment.hpp"
#include "oencsd/cluster.hpp"
#include "oencsd/common.hpp"
#include "oencsd/segments.hpp"

namespace oencsd {

struct DerBreakdown {
    double miss = 0.0;           // seconds of reference speech with no hypothesis slot
    double false_alarm = 0.0;    // seconds of hypothesis speech with no reference slot
    double confusion = 0.0;      // seconds attributed to the wrong speaker
    double scored_speech = 0.0;  // seconds of reference speech inside scored regions
    double der = 0.0;            // (miss + false_alarm + confusion) / scored_speech
};

namespace detail {

// Flattened view of normalized segments: parallel id and interval arrays with
// a deterministic (sorted-id) order.
struct SpeakerIntervals {
    std::vector<std::string> ids;
    std::vector<std::vector<std::pair<double, double>>> intervals;
};

inline SpeakerIntervals flatten(
    const std::map<std::string, std::vector<std::pair<double, double>>>& by_speaker) {
    SpeakerIntervals out;
    for (const auto& [id, ivs] : by_speaker) {
        out.ids.push_back(id);
        out.intervals.push_back(ivs);
    }
    return out;
}

inline bool contains_midpoint(const std::vector<std::pair<double, double>>& intervals,
                              double m) {
    for (const auto& [s, e] : intervals)
        if (s < m && m < e) return true;
    return false;
}

// Atom decomposition: every interval endpoint from both sides plus every
// exclusion endpoint, sorted and deduplicated. Between consecutive
// coordinates no activity or exclusion changes, so one midpoint probe
// classifies the whole atom.
inline std::vector<double> atom_coordinates(const SpeakerIntervals& ref,
                                            const SpeakerIntervals& hyp,
                                            const std::vector<std::pair<double, double>>& excl) {
    std::vector<double> coords;
    for (const auto& side : {ref, hyp})
        for (const auto& ivs : side.intervals)
            for (const auto& [s, e] : ivs) {
                coords.push_back(s);
                coords.push_back(e);
            }
    for (const auto& [s, e] : excl) {
        coords.push_back(s);
        coords.push_back(e);
    }
    std::sort(coords.begin(), coords.end());
    coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    return coords;
}

// Merged union of [b - collar, b + collar] around every reference interval
// boundary. A zero collar yields zero-length intervals that exclude nothing.
inline std::vector<std::pair<double, double>> collar_exclusions(const SpeakerIntervals& ref,
                                                                double collar) {
    std::vector<std::pair<double, double>> raw;
    for (const auto& ivs : ref.intervals)
        for (const auto& [s, e] : ivs) {
            raw.emplace_back(s - collar, s + collar);
            raw.emplace_back(e - collar, e + collar);
        }
    std::sort(raw.begin(), raw.end());
    std::vector<std::pair<double, double>> merged;
    for (const auto& iv : raw) {
        if (!merged.empty() && iv.first <= merged.back().second)
            merged.back().second = std::max(merged.back().second, iv.second);
        else
            merged.push_back(iv);
    }
    return merged;
}

// Pairwise ref-hyp overlap durations restricted to non-excluded atoms.
inline Eigen::MatrixXd scored_overlap_matrix(
    const SpeakerIntervals& ref, const SpeakerIntervals& hyp,
    const std::vector<std::pair<double, double>>& excl) {
    const std::vector<double> coords = atom_coordinates(ref, hyp, excl);
    Eigen::MatrixXd overlap =
        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ref.ids.size()),
                              static_cast<Eigen::Index>(hyp.ids.size()));
    for (std::size_t c = 0; c + 1 < coords.size(); ++c) {
        const double len = coords[c + 1] - coords[c];
        if (len <= 0.0) continue;
        const double m = coords[c] + len / 2.0;
        if (contains_midpoint(excl, m)) continue;
        for (std::size_t i = 0; i < ref.intervals.size(); ++i) {
            if (!contains_midpoint(ref.intervals[i], m)) continue;
            for (std::size_t j = 0; j < hyp.intervals.size(); ++j)
                if (contains_midpoint(hyp.intervals[j], m))
                    overlap(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += len;
        }
    }
    return overlap;
}

// Maximum-total-overlap one-to-one matching; pairs with zero overlap are
// dropped, leaving a partial mapping. Returns pairs of (ref index, hyp index).
inline std::vector<std::pair<int, int>> mapping_from_overlaps(const Eigen::MatrixXd& overlap) {
    std::vector<std::pair<int, int>> pairs;
    if (overlap.rows() == 0 || overlap.cols() == 0) return pairs;
    if (overlap.rows() <= overlap.cols()) {
        const std::vector<int> match = max_score_assignment(overlap);
        for (int i = 0; i < static_cast<int>(match.size()); ++i)
            if (overlap(i, match[static_cast<std::size_t>(i)]) > 0.0)
                pairs.emplace_back(i, match[static_cast<std::size_t>(i)]);
    } else {
        const std::vector<int> match = max_score_assignment(overlap.transpose());
        for (int j = 0; j < static_cast<int>(match.size()); ++j)
            if (overlap(match[static_cast<std::size_t>(j)], j) > 0.0)
                pairs.emplace_back(match[static_cast<std::size_t>(j)], j);
    }
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

}  // namespace detail

// One-to-one partial speaker mapping maximizing total overlap duration, with
// zero-overlap pairs left unmapped. Computed file-wide over the full timeline
// (no collar exclusions).
inline std::map<std::string, std::string> optimal_speaker_mapping(
    const std::vector<Segment>& ref, const std::vector<Segment>& hyp) {
    const detail::SpeakerIntervals r = detail::flatten(normalize_segments(ref));
    const detail::SpeakerIntervals h = detail::flatten(normalize_segments(hyp));
    const Eigen::MatrixXd overlap = detail::scored_overlap_matrix(r, h, {});
    std::map<std::string, std::string> mapping;
    for (const auto& [i, j] : detail::mapping_from_overlaps(overlap))
        mapping[r.ids[static_cast<std::size_t>(i)]] = h.ids[static_cast<std::size_t>(j)];
    return mapping;
}

// Diarization error rate. Regions within +/- collar of any reference
// activity boundary are excluded from scoring; overlapped speech is scored;
// the speaker mapping is chosen file-wide by maximum scored overlap.
inline DerBreakdown der(const std::vector<Segment>& ref, const std::vector<Segment>& hyp,
                        double collar) {
    if (collar < 0.0) throw contract_error("collar must be >= 0");
    if (ref.empty()) throw format_error("reference has no speech segments to score");
    const detail::SpeakerIntervals r = detail::flatten(normalize_segments(ref));
    const detail::SpeakerIntervals h = detail::flatten(normalize_segments(hyp));
    const std::vector<std::pair<double, double>> excl = detail::collar_exclusions(r, collar);

    const Eigen::MatrixXd overlap = detail::scored_overlap_matrix(r, h, excl);
    const std::vector<std::pair<int, int>> mapping = detail::mapping_from_overlaps(overlap);

    DerBreakdown out;
    const std::vector<double> coords = detail::atom_coordinates(r, h, excl);
    std::vector<char> ref_active(r.ids.size());
    std::vector<char> hyp_active(h.ids.size());
    for (std::size_t c = 0; c + 1 < coords.size(); ++c) {
        const double len = coords[c + 1] - coords[c];
        if (len <= 0.0) continue;
        const double m = coords[c] + len / 2.0;
        if (detail::contains_midpoint(excl, m)) continue;
        int n_ref = 0;
        int n_hyp = 0;
        for (std::size_t i = 0; i < r.intervals.size(); ++i) {
            ref_active[i] = detail::contains_midpoint(r.intervals[i], m) ? 1 : 0;
            n_ref += ref_active[i];
        }
        for (std::size_t j = 0; j < h.intervals.size(); ++j) {
            hyp_active[j] = detail::contains_midpoint(h.intervals[j], m) ? 1 : 0;
            n_hyp += hyp_active[j];
        }
        if (n_ref == 0 && n_hyp == 0) continue;
        int n_correct = 0;
        for (const auto& [i, j] : mapping)
            if (ref_active[static_cast<std::size_t>(i)] && hyp_active[static_cast<std::size_t>(j)])
                ++n_correct;
        out.scored_speech += len * n_ref;
        out.miss += len * std::max(0, n_ref - n_hyp);
        out.false_alarm += len * std::max(0, n_hyp - n_ref);
        out.confusion += len * (std::min(n_ref, n_hyp) - n_correct);
    }
    if (out.scored_speech <= 0.0)
        throw format_error("collar exclusions left no scored reference speech");
    out.der = (out.miss + out.false_alarm + out.confusion) / out.scored_speech;
    return out;
}

// Fraction of attractors whose predicted target (a specific centroid index,
// or the new-speaker slot) matches the reference target, pooled over chunks.
// No attractors at all counts as perfect.
inline double clustering_accuracy(const std::vector<Assignment>& predicted,
                                  const std::vector<Assignment>& reference) {
    if (predicted.size() != reference.size())
        throw contract_error("prediction and reference chunk counts must match");
    long correct = 0;
    long total = 0;
    for (std::size_t n = 0; n < predicted.size(); ++n) {
        if (predicted[n].target.size() != reference[n].target.size())
            throw contract_error("chunk attractor counts must match");
        for (std::size_t i = 0; i < predicted[n].target.size(); ++i) {
            correct += predicted[n].target[i] == reference[n].target[i] ? 1 : 0;
            ++total;
        }
    }
    return total == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace oencsd

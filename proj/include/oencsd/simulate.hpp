// SPDX-License-Identifier: Apache-2.0
//
// Synthetic conversation generator: alternating speaker turns with
// configurable overlap and silence fractions, rendered as spectrally-colored
// noise per speaker. Deterministic for a fixed seed; silence is exactly zero
// and every sample lands on the 16-bit PCM grid, so the audio survives a
// WAV round trip bit-exactly.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "oencsd/common.hpp"
#include "oencsd/segments.hpp"
#include "oencsd/wav.hpp"

namespace oencsd {

struct SimConfig {
    int n_speakers = 2;
    double duration_s = 300.0;
    double mean_turn_s = 2.0;
    double overlap_ratio = 0.1;  // target overlapped-speech fraction of the timeline
    double silence_ratio = 0.1;  // target silent fraction of the timeline
    std::uint32_t seed = 1;
    int sample_rate = 8000;

    void validate() const {
        if (n_speakers < 1) throw config_error("need at least one speaker");
        if (!(duration_s > 0.0)) throw config_error("duration must be positive");
        if (!(mean_turn_s > 0.0)) throw config_error("mean turn length must be positive");
        if (overlap_ratio < 0.0 || overlap_ratio >= 1.0)
            throw config_error("overlap ratio must be in [0, 1)");
        if (silence_ratio < 0.0 || silence_ratio >= 1.0)
            throw config_error("silence ratio must be in [0, 1)");
        if (sample_rate < 1) throw config_error("sample rate must be positive");
    }
};

struct Conversation {
    std::vector<float> audio;        // mono, values on the s/32768 grid
    std::vector<Segment> reference;  // chronological turns, speakers "spk<k>"
};

// Turn lengths are uniform in [0.5, 1.5] * mean_turn. Consecutive turns are
// separated by either a silence gap or an overlap (fair coin), with draw
// scales chosen so the expected silence and overlap fractions match the
// configured targets: with mean turn L and per-turn expected advance
// A = L / (1 - silence + overlap), the mean gap is silence*A and the mean
// overlap is overlap*A. Overlaps are clamped to stay inside both adjacent
// turns, which biases the measured fraction low only for targets well above
// the defaults. A single speaker always takes silence gaps (a speaker cannot
// overlap with itself), halving the draw scale to keep the silence target.
inline Conversation simulate_conversation(const SimConfig& cfg) {
    cfg.validate();
    const double L = cfg.mean_turn_s;
    const double advance = L / (1.0 - cfg.silence_ratio + cfg.overlap_ratio);
    const double mean_gap = cfg.silence_ratio * advance;
    const double mean_overlap = cfg.overlap_ratio * advance;

    Rng01 rng(cfg.seed);
    Conversation out;
    std::vector<double> last_end(static_cast<std::size_t>(cfg.n_speakers), 0.0);

    int speaker = static_cast<int>(rng.bits() % static_cast<std::uint32_t>(cfg.n_speakers));
    double start = 0.0;
    while (start < cfg.duration_s) {
        const double len = L * (0.5 + static_cast<double>(rng.next()));
        const double end = start + len;
        const double clipped = std::min(end, cfg.duration_s);
        // Skip slivers the sample grid cannot represent with audible energy.
        if (clipped - start >= 0.01) {
            out.reference.push_back({"spk" + std::to_string(speaker), start, clipped});
            last_end[static_cast<std::size_t>(speaker)] = clipped;
        }
        if (end >= cfg.duration_s) break;

        if (cfg.n_speakers == 1) {
            start = end + 2.0 * mean_gap * static_cast<double>(rng.next());
            continue;
        }
        const int next =
            (speaker + 1 +
             static_cast<int>(rng.bits() % static_cast<std::uint32_t>(cfg.n_speakers - 1))) %
            cfg.n_speakers;
        if (rng.next() < 0.5f) {
            start = end + 4.0 * mean_gap * static_cast<double>(rng.next());
        } else {
            double ov = 4.0 * mean_overlap * static_cast<double>(rng.next());
            // Keep the next turn inside the current one, shorter than any
            // possible next turn, and after the next speaker's last words.
            ov = std::min({ov, 0.9 * len, 0.45 * L,
                           std::max(0.0, end - last_end[static_cast<std::size_t>(next)])});
            start = end - ov;
        }
        speaker = next;
    }

    // Render per-speaker one-pole filtered noise into the active regions.
    // Filter and noise state persist across a speaker's turns.
    const auto n_samples =
        static_cast<std::size_t>(std::llround(cfg.duration_s * cfg.sample_rate));
    out.audio.assign(n_samples, 0.0f);
    for (int k = 0; k < cfg.n_speakers; ++k) {
        const std::string name = "spk" + std::to_string(k);
        const float alpha =
            cfg.n_speakers == 1
                ? 0.5f
                : 0.15f + 0.7f * static_cast<float>(k) / static_cast<float>(cfg.n_speakers - 1);
        Rng01 noise(cfg.seed * 1000003u + static_cast<std::uint32_t>(k) + 1u);
        float y = 0.0f;
        for (const Segment& s : out.reference) {
            if (s.speaker != name) continue;
            const auto i0 = static_cast<std::size_t>(
                std::max(0.0, std::ceil(s.start * cfg.sample_rate - 1e-9)));
            const auto i1 = std::min(
                n_samples, static_cast<std::size_t>(
                               std::max(0.0, std::ceil(s.end * cfg.sample_rate - 1e-9))));
            for (std::size_t i = i0; i < i1; ++i) {
                const float x = 2.0f * noise.next() - 1.0f;
                y = alpha * y + (1.0f - alpha) * x;
                out.audio[i] += 0.25f * y;
            }
        }
    }
    for (float& x : out.audio) {
        x = std::min(0.97f, std::max(-0.97f, x));
        x = static_cast<float>(quantize_pcm16(x)) / 32768.0f;
    }
    return out;
}

}  // namespace oencsd

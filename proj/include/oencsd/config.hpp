// SPDX-License-Identifier: Apache-2.0
//
// Configuration structs for the feature frontend, the chunk model, and the
// streaming session. Validation lives next to the fields it checks.

#pragma once

#include <cmath>
#include <string>

#include "oencsd/common.hpp"

namespace oencsd {

// ─── feature frontend ───────────────────────────────────────────────────────

struct FeatureConfig {
    int sample_rate = 8000;     // Hz
    int n_mels = 23;
    double window_s = 0.025;    // analysis window length
    double hop_s = 0.010;       // analysis hop
    int context = 7;            // frames spliced each side (x15 total)
    int subsample = 10;         // keep every subsample-th spliced frame
    double log_floor = 1e-10;   // mel energies are clamped here before log

    int window_samples() const { return static_cast<int>(std::lround(window_s * sample_rate)); }
    int hop_samples() const { return static_cast<int>(std::lround(hop_s * sample_rate)); }
    int spliced_dim() const { return n_mels * (2 * context + 1); }
    double frame_period_s() const { return hop_s * subsample; }

    void validate() const {
        if (sample_rate <= 0) throw config_error("sample_rate must be positive");
        if (n_mels < 1) throw config_error("n_mels must be >= 1");
        if (!(hop_s > 0.0) || hop_s > window_s) throw config_error("need 0 < hop <= window");
        if (context < 0) throw config_error("context must be >= 0");
        if (subsample < 1) throw config_error("subsample must be >= 1");
        if (!(log_floor > 0.0)) throw config_error("log_floor must be positive");
        if (window_samples() < 2) throw config_error("window shorter than 2 samples");
    }
};

// ─── chunk model ─────────────────────────────────────────────────────────────

struct ModelConfig {
    int d_model = 256;                  // D
    int n_heads = 4;
    int n_encoder_layers = 4;
    int ff_dim = 1024;
    int max_speakers = 4;               // S_max: cap on attractors per chunk
    float existence_threshold = 0.5f;   // stop rule for attractor emission
    int n_decoder_layers_refine = 1;    // depth of each refinement decoder
    int input_dim = 345;                // width of the spliced feature vectors

    bool operator==(const ModelConfig&) const = default;

    void validate() const {
        if (d_model < 1) throw config_error("d_model must be >= 1");
        if (n_heads < 1 || d_model % n_heads != 0)
            throw config_error("d_model must be divisible by n_heads");
        if (n_encoder_layers < 1) throw config_error("n_encoder_layers must be >= 1");
        if (ff_dim < 1) throw config_error("ff_dim must be >= 1");
        if (max_speakers < 1) throw config_error("max_speakers must be >= 1");
        if (!(existence_threshold > 0.0f) || !(existence_threshold < 1.0f))
            throw config_error("existence_threshold must lie in (0,1)");
        if (n_decoder_layers_refine < 1) throw config_error("n_decoder_layers_refine must be >= 1");
        if (input_dim < 1) throw config_error("input_dim must be >= 1");
    }
};

// ─── streaming session ───────────────────────────────────────────────────────

struct StreamConfig {
    double latency_s = 1.0;         // emission hop; also the innovation length
    double buffer_s = 1.0;          // total context per chunk, >= latency
    bool unbounded_buffer = false;  // keep every frame (disables the O(1) bound)
    ModelConfig model;
    FeatureConfig features;

    int latency_frames() const { return frames_of(latency_s, "latency"); }
    int buffer_frames() const { return frames_of(buffer_s, "buffer"); }

    void validate() const {
        features.validate();
        model.validate();
        if (!(latency_s > 0.0)) throw config_error("latency must be positive");
        if (buffer_s < latency_s) throw config_error("buffer must be >= latency");
        latency_frames();
        buffer_frames();
        if (model.input_dim != features.spliced_dim())
            throw config_error("model input_dim does not match the spliced feature dimension");
    }

private:
    int frames_of(double seconds, const char* what) const {
        const double period = features.frame_period_s();
        const double frames = seconds / period;
        const long long rounded = std::llround(frames);
        if (rounded < 1 || std::fabs(frames - static_cast<double>(rounded)) > 1e-6)
            throw config_error(std::string(what) + " must be a whole number of output frames");
        return static_cast<int>(rounded);
    }
};

}  // namespace oencsd

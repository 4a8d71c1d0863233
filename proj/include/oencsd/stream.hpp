// SPDX-License-Identifier: Apache-2.0
//
// Online session management: audio arrives in arbitrary slices, features
// accumulate in a FIFO of at most buffer_frames frames, and every
// latency_frames new frames one pipeline step runs over the whole buffer.
// Only the newest latency-worth of each chunk's posteriors (the innovation)
// is emitted, so output frames are never revised. Speaker identities persist
// across chunks through the centroid bank.

#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "oencsd/cluster.hpp"
#include "oencsd/common.hpp"
#include "oencsd/config.hpp"
#include "oencsd/eend_eda.hpp"
#include "oencsd/features.hpp"
#include "oencsd/refine.hpp"
#include "oencsd/segments.hpp"
#include "oencsd/weights.hpp"

namespace oencsd {

// ============================================================================
// Emitted output
// ============================================================================

struct GlobalDiarization {
    double frame_period = 0.0;
    long n_frames = 0;                                // frames emitted so far
    std::vector<std::string> speakers;                // global ids, discovery order
    std::vector<std::vector<std::uint8_t>> activity;  // per speaker, length n_frames

    // Merged active runs per speaker, in chronological order per speaker.
    std::vector<Segment> to_segments() const {
        std::vector<Segment> segs;
        for (std::size_t s = 0; s < speakers.size(); ++s) {
            long run_start = -1;
            for (long t = 0; t <= n_frames; ++t) {
                const bool on = t < n_frames && activity[s][static_cast<std::size_t>(t)] != 0;
                if (on && run_start < 0) run_start = t;
                if (!on && run_start >= 0) {
                    segs.push_back({speakers[s], run_start * frame_period, t * frame_period});
                    run_start = -1;
                }
            }
        }
        return segs;
    }
};

// ============================================================================
// Op counting
// ============================================================================

// Closed-form multiply-accumulate count of one pipeline step, as a function
// of chunk length (frames in the FIFO), model dimensions, the attractor
// capacity S_max, and the current centroid count. Frame-independent by
// construction: two steps with equal (chunk_frames, n_centroids) get equal
// counts. Uses the S_max capacity rather than the data-dependent attractor
// count so the figure reflects the architecture, not the audio content.
inline unsigned long long count_step_ops(const StreamConfig& cfg, long chunk_frames,
                                         int n_centroids) {
    if (chunk_frames < 1) throw contract_error("chunk must hold at least one frame");
    if (n_centroids < 0) throw contract_error("centroid count must be >= 0");
    const auto T = static_cast<unsigned long long>(chunk_frames);
    const auto D = static_cast<unsigned long long>(cfg.model.d_model);
    const auto Din = static_cast<unsigned long long>(cfg.model.input_dim);
    const auto F = static_cast<unsigned long long>(cfg.model.ff_dim);
    const auto L = static_cast<unsigned long long>(cfg.model.n_encoder_layers);
    const auto R = static_cast<unsigned long long>(cfg.model.n_decoder_layers_refine);
    const auto S = static_cast<unsigned long long>(cfg.model.max_speakers);
    const auto C = static_cast<unsigned long long>(n_centroids);

    // Encoder: input projection, per layer QKVO projections + two score/
    // context products + feed-forward.
    const unsigned long long encoder =
        T * D * Din + L * (4 * T * D * D + 2 * T * T * D + 2 * T * D * F);
    // Attractor LSTMs: 8 D^2 per encoder frame and per decoder step, plus the
    // existence head.
    const unsigned long long eda = 8 * T * D * D + S * (8 * D * D + D);
    const unsigned long long posteriors = S * T * D;
    // Attractor refinement: self-attention over S queries, cross-attention
    // into T memory frames, feed-forward.
    const unsigned long long refine_attr =
        R * (4 * S * D * D + 2 * S * S * D + 2 * S * D * D + 2 * T * D * D + 2 * S * T * D +
             2 * S * D * F);
    // Centroid refinement: C queries against the ghost-plus-attractors
    // memory of S + 1 columns.
    const unsigned long long refine_cent =
        R * (4 * C * D * D + 2 * C * C * D + 2 * C * D * D + 2 * (S + 1) * D * D +
             2 * C * (S + 1) * D + 2 * C * D * F);
    // Clustering: assignment logits and GRU updates.
    const unsigned long long cluster = S * (C + 1) * D + 6 * S * D * D;
    return encoder + eda + posteriors + refine_attr + refine_cent + cluster;
}

inline unsigned long long count_step_ops(const StreamConfig& cfg, int n_centroids = 0) {
    return count_step_ops(cfg, cfg.buffer_frames(), n_centroids);
}

struct StepStats {
    int index = 0;
    long chunk_frames = 0;     // FIFO length when the step ran
    int n_centroids = 0;       // bank size before the step's update
    unsigned long long macs = 0;
    double wall_seconds = 0.0;
};

// Verdict over the steady-state steps (FIFO at or beyond nominal capacity):
// CONSTANT when the context never outgrows the nominal buffer and every
// steady step with the same centroid count costs exactly the same; GROWING
// when costs strictly increase; VARIABLE otherwise. An empty steady set is
// vacuously CONSTANT. The context bound matters: without eviction each step
// has a fresh (chunk, centroid) shape, so per-count equality alone would be
// vacuously true on exactly the runs that grow.
inline std::string bench_verdict(const std::vector<StepStats>& steps, long buffer_frames) {
    std::vector<const StepStats*> steady;
    for (const StepStats& s : steps)
        if (s.chunk_frames >= buffer_frames) steady.push_back(&s);
    bool constant = true;
    std::map<int, unsigned long long> per_c;
    for (const StepStats* s : steady) {
        if (s->chunk_frames > buffer_frames) constant = false;
        const auto [it, fresh] = per_c.emplace(s->n_centroids, s->macs);
        if (!fresh && it->second != s->macs) constant = false;
    }
    if (constant) return "CONSTANT";
    bool growing = true;
    for (std::size_t i = 1; i < steady.size(); ++i)
        if (steady[i]->macs <= steady[i - 1]->macs) growing = false;
    return growing ? "GROWING" : "VARIABLE";
}

// FIFO update: append the new frames, then drop the oldest until at most
// `capacity` remain.
inline void fifo_update(std::deque<Eigen::VectorXf>& fifo, const Eigen::MatrixXf& new_frames,
                        long capacity) {
    if (capacity < 1) throw contract_error("fifo capacity must be >= 1");
    for (Eigen::Index c = 0; c < new_frames.cols(); ++c) fifo.push_back(new_frames.col(c));
    while (static_cast<long>(fifo.size()) > capacity) fifo.pop_front();
}

// ============================================================================
// Session
// ============================================================================

// A Session serves one logical consumer at a time; the weight bundle is only
// read and may back any number of concurrent sessions. The caller keeps the
// bundle alive for the session's lifetime.
class Session {
public:
    Session(const WeightBundle& weights, const StreamConfig& cfg)
        : cfg_(cfg), weights_(weights), featurizer_(validated_features(cfg)) {
        weights_.validate_complete();
        if (!(weights_.config() == cfg_.model))
            throw config_error("weight bundle was built for a different model configuration");
        latency_frames_ = cfg_.latency_frames();
        buffer_frames_ = cfg_.buffer_frames();
        bank_ = CentroidBank(cfg_.model.d_model);
        out_.frame_period = cfg_.features.frame_period_s();
    }

    // Feeds mono samples at the configured rate; returns how many new frames
    // were emitted to the global output by the steps this call completed.
    long push(std::span<const float> samples) {
        if (finalized_) throw contract_error("push after finalize");
        return on_features(featurizer_.push(samples));
    }

    // Flushes the feature tail, zero-pads the final partial hop in feature
    // space, and emits the remaining frames. Idempotent; afterwards push is
    // invalid.
    long finalize() {
        if (finalized_) return 0;
        finalized_ = true;
        long emitted = on_features(featurizer_.finish());
        if (pending_ > 0) {
            const Eigen::MatrixXf pad = Eigen::MatrixXf::Zero(
                cfg_.features.spliced_dim(), latency_frames_ - pending_);
            fifo_update(fifo_, pad, fifo_capacity());
            total_cols_ += pad.cols();
            const long tail = pending_;
            pending_ = 0;
            emitted += run_step(tail);
        }
        return emitted;
    }

    const GlobalDiarization& output() const { return out_; }
    const std::vector<StepStats>& steps() const { return steps_; }
    const CentroidBank& bank() const { return bank_; }
    long emitted_frames() const { return out_.n_frames; }
    bool finalized() const { return finalized_; }

private:
    static const FeatureConfig& validated_features(const StreamConfig& cfg) {
        cfg.validate();
        return cfg.features;
    }

    long fifo_capacity() const {
        return cfg_.unbounded_buffer ? std::numeric_limits<long>::max() : buffer_frames_;
    }

    // Appends feature columns one at a time so each pipeline step sees only
    // the frames that existed when its hop completed, regardless of how the
    // caller sliced the audio.
    long on_features(const Eigen::MatrixXf& cols) {
        long emitted = 0;
        for (Eigen::Index c = 0; c < cols.cols(); ++c) {
            fifo_update(fifo_, cols.col(c), fifo_capacity());
            ++total_cols_;
            if (++pending_ == latency_frames_) {
                pending_ = 0;
                emitted += run_step(latency_frames_);
            }
        }
        return emitted;
    }

    // One pipeline step over the current FIFO. Emits `emit_n` frames starting
    // at the beginning of the innovation window (emit_n < latency_frames only
    // for the zero-padded final step, whose pad columns are dropped).
    long run_step(long emit_n) {
        const auto t0 = std::chrono::steady_clock::now();
        const long T = static_cast<long>(fifo_.size());
        const int c_before = bank_.count();

        FeatureSequence x;
        x.frame_period = out_.frame_period;
        x.start_time = static_cast<double>(total_cols_ - T) * out_.frame_period;
        x.data.resize(cfg_.features.spliced_dim(), T);
        for (long c = 0; c < T; ++c) x.data.col(c) = fifo_[static_cast<std::size_t>(c)];

        if (mask_.size() != T) mask_ = build_latency_mask(static_cast<int>(T), latency_frames_);

        const FrameEmbeddings emb = encode(x, mask_, weights_);
        const AttractorSet attractors = eda_attractors(emb, weights_, cfg_.model);

        Eigen::MatrixXf permuted;  // global rows x T
        if (attractors.count() > 0) {
            const LocalPosteriors local = speaker_posteriors(attractors, emb);
            const Eigen::MatrixXf a_refined = refine_attractors(attractors, emb, weights_);
            const Eigen::MatrixXf h_refined =
                refine_centroids(bank_.centroids, ghost_concat(a_refined, weights_), weights_);
            const Eigen::Ref<const Eigen::VectorXf> h0 =
                weights_.vec("cluster.h0", cfg_.model.d_model);
            const Assignment asg =
                match(assignment_probs(h_refined, h0, a_refined));
            permuted = permute_local(local, asg);
            update_centroids(bank_, a_refined, asg, h0, weights_);
        }

        // Grow the global roster; new speakers are silent before discovery.
        while (static_cast<int>(out_.speakers.size()) < bank_.count()) {
            out_.speakers.push_back("spk" + std::to_string(out_.speakers.size()));
            out_.activity.emplace_back(static_cast<std::size_t>(out_.n_frames), 0);
        }

        // Innovation emission: binarize the newest latency-worth of frames.
        const long col0 = T - latency_frames_;
        for (std::size_t s = 0; s < out_.speakers.size(); ++s)
            for (long j = 0; j < emit_n; ++j) {
                const bool active = static_cast<long>(s) < permuted.rows() &&
                                    permuted(static_cast<Eigen::Index>(s), col0 + j) > 0.5f;
                out_.activity[s].push_back(active ? 1 : 0);
            }
        out_.n_frames += emit_n;

        const auto t1 = std::chrono::steady_clock::now();
        StepStats stats;
        stats.index = static_cast<int>(steps_.size());
        stats.chunk_frames = T;
        stats.n_centroids = c_before;
        stats.macs = count_step_ops(cfg_, T, c_before);
        stats.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
        steps_.push_back(stats);
        return emit_n;
    }

    StreamConfig cfg_;
    const WeightBundle& weights_;
    StreamingFeaturizer featurizer_;
    std::deque<Eigen::VectorXf> fifo_;
    AttentionMask mask_;
    CentroidBank bank_{0};
    GlobalDiarization out_;
    std::vector<StepStats> steps_;
    int latency_frames_ = 0;
    long buffer_frames_ = 0;
    long pending_ = 0;
    long total_cols_ = 0;
    bool finalized_ = false;
};

}  // namespace oencsd

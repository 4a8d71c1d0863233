// SPDX-License-Identifier: Apache-2.0
//
// Log-mel frontend: Hann window, radix-2 FFT power spectrum, HTK-scale
// triangular filterbank, context splicing and subsampling. The streaming
// featurizer reuses the exact per-window code path of the batch functions,
// so incremental and whole-file extraction are bit-identical.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstddef>
#include <deque>
#include <span>
#include <vector>

#include "oencsd/common.hpp"
#include "oencsd/config.hpp"

namespace oencsd {

// Spliced, subsampled features: one column per output frame.
struct FeatureSequence {
    Eigen::MatrixXf data;   // spliced_dim x T
    double frame_period = 0.0;
    double start_time = 0.0;
};

namespace detail {

inline int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

// In-place iterative radix-2 FFT; tw[k] = exp(-2*pi*i*k/n) for k < n/2.
inline void fft_inplace(std::vector<std::complex<float>>& a,
                        const std::vector<std::complex<float>>& tw) {
    const int n = static_cast<int>(a.size());
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const int stride = n / len;
        for (int base = 0; base < n; base += len) {
            for (int k = 0; k < len / 2; ++k) {
                const std::complex<float> u = a[base + k];
                const std::complex<float> v = a[base + k + len / 2] * tw[k * stride];
                a[base + k] = u + v;
                a[base + k + len / 2] = u - v;
            }
        }
    }
}

}  // namespace detail

// Precomputed window, twiddle, and filterbank tables for one FeatureConfig.
class MelExtractor {
public:
    explicit MelExtractor(const FeatureConfig& cfg) : cfg_(cfg) {
        cfg.validate();
        const int W = cfg.window_samples();
        nfft_ = detail::next_pow2(W);
        window_.resize(W);
        for (int i = 0; i < W; ++i)
            window_[i] = 0.5f - 0.5f * std::cos(2.0f * float(M_PI) * float(i) / float(W - 1));
        twiddle_.resize(nfft_ / 2);
        for (int k = 0; k < nfft_ / 2; ++k) {
            const double ang = -2.0 * M_PI * double(k) / double(nfft_);
            twiddle_[k] = std::complex<float>(float(std::cos(ang)), float(std::sin(ang)));
        }
        build_filterbank();
        scratch_.resize(nfft_);
    }

    int nfft() const { return nfft_; }
    const FeatureConfig& config() const { return cfg_; }

    // Center frequency (Hz) of each triangular filter; exposed for tests.
    const std::vector<double>& filter_centers_hz() const { return centers_hz_; }

    // One log-mel vector from window_samples() contiguous samples.
    Eigen::VectorXf log_mel_frame(const float* samples) const {
        const int W = cfg_.window_samples();
        const int bins = nfft_ / 2 + 1;
        for (int i = 0; i < W; ++i)
            scratch_[i] = std::complex<float>(samples[i] * window_[i], 0.0f);
        for (int i = W; i < nfft_; ++i) scratch_[i] = {0.0f, 0.0f};
        detail::fft_inplace(scratch_, twiddle_);

        Eigen::VectorXf mel(cfg_.n_mels);
        const float floor_v = static_cast<float>(cfg_.log_floor);
        for (int f = 0; f < cfg_.n_mels; ++f) {
            float acc = 0.0f;
            for (int k = 0; k < bins; ++k) {
                const float w = fbank_(f, k);
                if (w != 0.0f) acc += w * std::norm(scratch_[k]);
            }
            mel[f] = std::log(std::max(acc, floor_v));
        }
        return mel;
    }

private:
    static double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
    static double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

    void build_filterbank() {
        const int bins = nfft_ / 2 + 1;
        const double nyquist = cfg_.sample_rate / 2.0;
        const double mel_hi = hz_to_mel(nyquist);
        // n_mels + 2 edge points, uniformly spaced on the mel scale.
        std::vector<double> edges_hz(cfg_.n_mels + 2);
        for (int j = 0; j < cfg_.n_mels + 2; ++j)
            edges_hz[j] = mel_to_hz(mel_hi * double(j) / double(cfg_.n_mels + 1));
        centers_hz_.assign(edges_hz.begin() + 1, edges_hz.end() - 1);

        fbank_.setZero(cfg_.n_mels, bins);
        for (int f = 0; f < cfg_.n_mels; ++f) {
            const double lo = edges_hz[f], mid = edges_hz[f + 1], hi = edges_hz[f + 2];
            for (int k = 0; k < bins; ++k) {
                const double hz = double(k) * cfg_.sample_rate / double(nfft_);
                const double rise = (hz - lo) / (mid - lo);
                const double fall = (hi - hz) / (hi - mid);
                const double w = std::min(rise, fall);
                if (w > 0.0) fbank_(f, k) = static_cast<float>(w);
            }
        }
    }

    FeatureConfig cfg_;
    int nfft_ = 0;
    std::vector<float> window_;
    std::vector<std::complex<float>> twiddle_;
    std::vector<double> centers_hz_;
    Eigen::MatrixXf fbank_;  // n_mels x (nfft/2 + 1)
    mutable std::vector<std::complex<float>> scratch_;
};

// Whole-signal log-mel matrix, one column per analysis frame.
// Signals shorter than one window produce zero frames.
inline Eigen::MatrixXf logmel(std::span<const float> pcm, const FeatureConfig& cfg) {
    MelExtractor ex(cfg);
    const int W = cfg.window_samples();
    const int H = cfg.hop_samples();
    const long long n = static_cast<long long>(pcm.size());
    const long long F = n < W ? 0 : (n - W) / H + 1;
    Eigen::MatrixXf mels(cfg.n_mels, F);
    for (long long j = 0; j < F; ++j)
        mels.col(j) = ex.log_mel_frame(pcm.data() + j * H);
    return mels;
}

// Splice 2*context+1 mel frames (edges replicated) around every
// subsample-th frame. T = ceil(F / subsample).
inline FeatureSequence splice_subsample(const Eigen::MatrixXf& mels, const FeatureConfig& cfg) {
    const int F = static_cast<int>(mels.cols());
    const int s = cfg.subsample;
    const int T = (F + s - 1) / s;
    const int span = 2 * cfg.context + 1;
    FeatureSequence out;
    out.data.resize(cfg.n_mels * span, T);
    out.frame_period = cfg.frame_period_s();
    for (int t = 0; t < T; ++t) {
        const int center = t * s;
        for (int o = 0; o < span; ++o) {
            int src = center - cfg.context + o;
            src = std::max(0, std::min(src, F - 1));
            out.data.block(o * cfg.n_mels, t, cfg.n_mels, 1) = mels.col(src);
        }
    }
    return out;
}

// Incremental frontend. push() returns every spliced frame whose full mel
// context is available; finish() flushes the tail with right-edge
// replication. The concatenation of all returned columns is bit-identical
// to splice_subsample(logmel(whole signal)) regardless of push sizes.
class StreamingFeaturizer {
public:
    explicit StreamingFeaturizer(const FeatureConfig& cfg)
        : cfg_(cfg), ex_(cfg) {}

    Eigen::MatrixXf push(std::span<const float> pcm) {
        if (finished_) throw contract_error("push after finish");
        buf_.insert(buf_.end(), pcm.begin(), pcm.end());
        const int W = cfg_.window_samples();
        const int H = cfg_.hop_samples();
        size_t pos = 0;
        while (buf_.size() - pos >= static_cast<size_t>(W)) {
            mels_.push_back(ex_.log_mel_frame(buf_.data() + pos));
            pos += H;
        }
        if (pos > 0) buf_.erase(buf_.begin(), buf_.begin() + pos);
        return take_ready(false);
    }

    // Emits the remaining spliced frames; further push() calls are invalid.
    Eigen::MatrixXf finish() {
        if (finished_) return Eigen::MatrixXf(cfg_.spliced_dim(), 0);
        finished_ = true;
        return take_ready(true);
    }

    long long frames_emitted() const { return next_out_; }
    bool finished() const { return finished_; }

private:
    // Spliced frame t needs mel frames up to t*s + context; until the stream
    // ends, availability implies no right-edge clamping is ever needed.
    Eigen::MatrixXf take_ready(bool at_end) {
        const int s = cfg_.subsample;
        const int ctx = cfg_.context;
        const long long F = mel_base_ + static_cast<long long>(mels_.size());
        long long last;  // last emittable spliced frame index, inclusive
        if (at_end) {
            last = (F + s - 1) / s - 1;  // T-1
        } else {
            long long avail = F - 1 - ctx;  // highest fully-covered center
            last = avail < 0 ? -1 : avail / s;
        }
        const long long count = last - next_out_ + 1;
        Eigen::MatrixXf out(cfg_.spliced_dim(), std::max<long long>(count, 0));
        for (long long t = next_out_; t <= last; ++t) {
            const long long center = t * s;
            for (int o = 0; o < 2 * ctx + 1; ++o) {
                long long src = center - ctx + o;
                src = std::max<long long>(0, std::min(src, F - 1));
                out.block(o * cfg_.n_mels, t - next_out_, cfg_.n_mels, 1) =
                    mels_[static_cast<size_t>(src - mel_base_)];
            }
        }
        if (count > 0) next_out_ = last + 1;
        // Mel frames older than the next center's left context are done.
        const long long keep_from = next_out_ * s - ctx;
        while (mel_base_ < keep_from && !mels_.empty()) {
            mels_.pop_front();
            ++mel_base_;
        }
        return out;
    }

    FeatureConfig cfg_;
    MelExtractor ex_;
    std::vector<float> buf_;                // raw samples not yet framed
    std::deque<Eigen::VectorXf> mels_;      // mel frames >= mel_base_
    long long mel_base_ = 0;
    long long next_out_ = 0;                // next spliced frame to emit
    bool finished_ = false;
};

}  // namespace oencsd

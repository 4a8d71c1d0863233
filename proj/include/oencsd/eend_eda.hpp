// SPDX-License-Identifier: Apache-2.0
//
// Chunk backbone: latency-masked transformer encoder over spliced features,
// LSTM encoder-decoder attractor estimation with an existence stop rule, and
// attractor-embedding dot-product posteriors.
//
// Numerical policy: 32-bit floats; attention softmax uses max subtraction;
// disallowed keys are forced to weight exactly 0.0f after exponentiation, so
// causality at a given latency holds bit-exactly, not just approximately.

#pragma once

#include <Eigen/Dense>
#include <cfloat>
#include <cmath>
#include <string>

#include "oencsd/common.hpp"
#include "oencsd/config.hpp"
#include "oencsd/features.hpp"
#include "oencsd/weights.hpp"

namespace oencsd {

// Query-key admissibility for encoder self-attention.
struct AttentionMask {
    Eigen::ArrayXXf allowed01;  // T x T, 1.0 where the key is visible
    int latency_frames = 0;

    bool allowed(int t, int k) const { return allowed01(t, k) != 0.0f; }
    int size() const { return static_cast<int>(allowed01.rows()); }
};

// allowed[t][k] holds iff k <= t + latency_frames.
inline AttentionMask build_latency_mask(int T, int latency_frames) {
    if (T < 1) throw config_error("mask needs T >= 1");
    if (latency_frames < 0) throw config_error("latency_frames must be >= 0");
    AttentionMask m;
    m.latency_frames = latency_frames;
    m.allowed01.setZero(T, T);
    for (int t = 0; t < T; ++t) {
        const int hi = std::min(T - 1, t + latency_frames);
        for (int k = 0; k <= hi; ++k) m.allowed01(t, k) = 1.0f;
    }
    return m;
}

struct FrameEmbeddings {
    Eigen::MatrixXf data;  // D x T
};

struct AttractorSet {
    Eigen::MatrixXf vectors;    // D x S_n
    Eigen::VectorXf existence;  // length S_n + 1, or S_n when capped at S_max
    int count() const { return static_cast<int>(vectors.cols()); }
};

struct LocalPosteriors {
    Eigen::MatrixXf data;  // S_n x T, entries strictly inside (0,1)
};

namespace detail {

struct AttnParams {
    const Eigen::MatrixXf *Wq, *Wk, *Wv, *Wo;
    Eigen::Ref<const Eigen::VectorXf> bq, bk, bv, bo;
};

inline AttnParams attn_params(const WeightBundle& w, const std::string& prefix, int D) {
    return {&w.mat(prefix + "Wq", D, D), &w.mat(prefix + "Wk", D, D),
            &w.mat(prefix + "Wv", D, D), &w.mat(prefix + "Wo", D, D),
            w.vec(prefix + "bq", D),     w.vec(prefix + "bk", D),
            w.vec(prefix + "bv", D),     w.vec(prefix + "bo", D)};
}

// Column-wise layer norm with learned scale/shift; eps fixed at 1e-5.
inline Eigen::MatrixXf layer_norm(const Eigen::MatrixXf& x,
                                  Eigen::Ref<const Eigen::VectorXf> gamma,
                                  Eigen::Ref<const Eigen::VectorXf> beta) {
    Eigen::MatrixXf out(x.rows(), x.cols());
    const float inv_d = 1.0f / static_cast<float>(x.rows());
    for (int c = 0; c < x.cols(); ++c) {
        const float mu = x.col(c).sum() * inv_d;
        const Eigen::ArrayXf centered = x.col(c).array() - mu;
        const float var = (centered * centered).sum() * inv_d;
        const float inv_std = 1.0f / std::sqrt(var + 1e-5f);
        out.col(c) = (centered * inv_std * gamma.array() + beta.array()).matrix();
    }
    return out;
}

// Scaled dot-product multi-head attention. Queries come from xq (D x Tq),
// keys/values from xm (D x Tk). With a mask, weights of disallowed keys are
// exactly 0.0f: scores are buried at -1e30f before the max-subtracted
// softmax, and the exponentiated row is multiplied by the 0/1 mask so no
// underflow residue survives. Row normalizers therefore depend only on
// visible keys.
inline Eigen::MatrixXf multihead_attention(const AttnParams& p, int n_heads,
                                           const Eigen::MatrixXf& xq,
                                           const Eigen::MatrixXf& xm,
                                           const AttentionMask* mask = nullptr) {
    const int D = static_cast<int>(xq.rows());
    const int Tq = static_cast<int>(xq.cols());
    const int Tk = static_cast<int>(xm.cols());
    const int dh = D / n_heads;
    const float scale = 1.0f / std::sqrt(static_cast<float>(dh));

    Eigen::MatrixXf Q = (*p.Wq) * xq;
    Q.colwise() += p.bq;
    Eigen::MatrixXf K = (*p.Wk) * xm;
    K.colwise() += p.bk;
    Eigen::MatrixXf V = (*p.Wv) * xm;
    V.colwise() += p.bv;

    Eigen::MatrixXf heads(D, Tq);
    for (int h = 0; h < n_heads; ++h) {
        const auto Qh = Q.middleRows(h * dh, dh);
        const auto Kh = K.middleRows(h * dh, dh);
        const auto Vh = V.middleRows(h * dh, dh);
        Eigen::ArrayXXf scores = ((Qh.transpose() * Kh) * scale).array();  // Tq x Tk
        if (mask) scores = (mask->allowed01 != 0.0f).select(scores, -1e30f);
        Eigen::ArrayXXf weights(Tq, Tk);
        for (int t = 0; t < Tq; ++t) {
            Eigen::ArrayXf e = (scores.row(t) - scores.row(t).maxCoeff()).exp().transpose();
            if (mask) e *= mask->allowed01.row(t).transpose();
            weights.row(t) = (e / e.sum()).transpose();
        }
        heads.middleRows(h * dh, dh) = Vh * weights.matrix().transpose();
    }
    Eigen::MatrixXf out = (*p.Wo) * heads;
    out.colwise() += p.bo;
    return out;
}

inline Eigen::MatrixXf feed_forward(const WeightBundle& w, const std::string& prefix,
                                    int D, int ff, const Eigen::MatrixXf& x) {
    Eigen::MatrixXf h = w.mat(prefix + "W1", ff, D) * x;
    h.colwise() += w.vec(prefix + "b1", ff);
    h = h.cwiseMax(0.0f);
    Eigen::MatrixXf out = w.mat(prefix + "W2", D, ff) * h;
    out.colwise() += w.vec(prefix + "b2", D);
    return out;
}

}  // namespace detail

// Pre-norm transformer encoder. The caller's mask (the lookahead budget)
// applies to the first layer only; every deeper layer runs strictly causal.
// Band masks compound across layers — if each of L layers could see
// latency_frames ahead, frame t would transitively read t + L*latency_frames
// of input — so the budget is spent once to keep the whole stack's lookahead
// at exactly latency_frames.
inline FrameEmbeddings encode(const FeatureSequence& x, const AttentionMask& mask,
                              const WeightBundle& w) {
    const ModelConfig& cfg = w.config();
    const int D = cfg.d_model;
    const int T = static_cast<int>(x.data.cols());
    if (static_cast<int>(x.data.rows()) != cfg.input_dim)
        throw config_error("feature dimension does not match the model input width");
    if (mask.size() != T) throw config_error("mask size does not match frame count");

    Eigen::MatrixXf e = w.mat("encoder.input.W", D, cfg.input_dim) * x.data;
    e.colwise() += w.vec("encoder.input.b", D);

    AttentionMask causal;
    if (cfg.n_encoder_layers > 1) causal = build_latency_mask(T, 0);

    for (int l = 0; l < cfg.n_encoder_layers; ++l) {
        const std::string p = "encoder.layer" + std::to_string(l) + ".";
        const AttentionMask& layer_mask = l == 0 ? mask : causal;
        const Eigen::MatrixXf normed1 =
            detail::layer_norm(e, w.vec(p + "ln1.gamma", D), w.vec(p + "ln1.beta", D));
        e += detail::multihead_attention(detail::attn_params(w, p + "attn.", D),
                                         cfg.n_heads, normed1, normed1, &layer_mask);
        const Eigen::MatrixXf normed2 =
            detail::layer_norm(e, w.vec(p + "ln2.gamma", D), w.vec(p + "ln2.beta", D));
        e += detail::feed_forward(w, p + "ff.", D, cfg.ff_dim, normed2);
    }
    return {detail::layer_norm(e, w.vec("encoder.out_ln.gamma", D),
                               w.vec("encoder.out_ln.beta", D))};
}

namespace detail {

// One LSTM step; gates packed by rows as (input, forget, cell, output).
struct LstmState {
    Eigen::VectorXf h, c;
};

inline void lstm_step(const Eigen::MatrixXf& W, const Eigen::MatrixXf& U,
                      Eigen::Ref<const Eigen::VectorXf> b,
                      Eigen::Ref<const Eigen::VectorXf> x, LstmState& s) {
    const int D = static_cast<int>(s.h.size());
    const Eigen::VectorXf g = W * x + U * s.h + b;
    const auto slice = [&](int i) { return g.segment(i * D, D).array(); };
    const Eigen::ArrayXf in = slice(0).logistic();
    const Eigen::ArrayXf forget = slice(1).logistic();
    const Eigen::ArrayXf cand = slice(2).tanh();
    const Eigen::ArrayXf out = slice(3).logistic();
    s.c = (forget * s.c.array() + in * cand).matrix();
    s.h = (out * s.c.array().tanh()).matrix();
}

}  // namespace detail

// LSTM encoder consumes the frame embeddings in time order from a zero
// state; the decoder, seeded with the encoder's final state and fed zero
// inputs, emits one candidate attractor per step. Emission stops at the
// first existence probability below threshold (that probability is kept as
// the final vector entry) or silently at the S_max cap.
inline AttractorSet eda_attractors(const FrameEmbeddings& e, const WeightBundle& w,
                                   const ModelConfig& cfg) {
    const int D = cfg.d_model;
    const int T = static_cast<int>(e.data.cols());
    if (T < 1) throw config_error("eda needs at least one frame");

    detail::LstmState s{Eigen::VectorXf::Zero(D), Eigen::VectorXf::Zero(D)};
    {
        const auto& W = w.mat("eda.encoder.W", 4 * D, D);
        const auto& U = w.mat("eda.encoder.U", 4 * D, D);
        const auto b = w.vec("eda.encoder.b", 4 * D);
        for (int t = 0; t < T; ++t) detail::lstm_step(W, U, b, e.data.col(t), s);
    }

    const auto& Wd = w.mat("eda.decoder.W", 4 * D, D);
    const auto& Ud = w.mat("eda.decoder.U", 4 * D, D);
    const auto bd = w.vec("eda.decoder.b", 4 * D);
    const auto exist_w = w.vec("eda.exist.w", D);
    const float exist_b = w.scalar("eda.exist.b");
    const Eigen::VectorXf zero_in = Eigen::VectorXf::Zero(D);

    AttractorSet out;
    out.vectors.resize(D, cfg.max_speakers);
    std::vector<float> probs;
    int s_n = 0;
    for (int i = 0; i < cfg.max_speakers; ++i) {
        detail::lstm_step(Wd, Ud, bd, zero_in, s);
        const float p = sigmoidf(exist_w.dot(s.h) + exist_b);
        probs.push_back(p);
        if (p < cfg.existence_threshold) break;
        out.vectors.col(s_n++) = s.h;
    }
    out.vectors.conservativeResize(D, s_n);
    out.existence = Eigen::Map<const Eigen::VectorXf>(probs.data(),
                                                      static_cast<long>(probs.size()));
    return out;
}

// Posteriors from RAW attractors: sigmoid of attractor-embedding dot
// products, clamped to the open interval (0,1).
inline LocalPosteriors speaker_posteriors(const AttractorSet& a, const FrameEmbeddings& e) {
    if (a.count() > 0 && a.vectors.rows() != e.data.rows())
        throw contract_error("attractor/embedding dimension mismatch");
    constexpr float lo = FLT_MIN;
    const float hi = std::nextafter(1.0f, 0.0f);
    LocalPosteriors p;
    p.data = (-(a.vectors.transpose() * e.data).array()).exp();
    p.data = (1.0f + p.data.array()).inverse().cwiseMax(lo).cwiseMin(hi);
    return p;
}

}  // namespace oencsd

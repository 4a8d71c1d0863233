// SPDX-License-Identifier: Apache-2.0
//
// Refinement decoders. Both run the same pre-norm transformer decoder block
// (self-attention, cross-attention, feed-forward) without positional
// encodings, so query order is preserved and query count equals output count.
//
//   attractor decoder: queries = chunk attractors, memory = frame embeddings
//   centroid decoder:  queries = centroid bank,    memory = [g_spk | A']
//
// Refined centroids exist only to score assignments; the persistent bank is
// updated by the GRU on raw centroid state. Refined attractors serve both
// matching and the GRU inputs. h0 is never refined.

#pragma once

#include <Eigen/Dense>
#include <string>

#include "oencsd/common.hpp"
#include "oencsd/eend_eda.hpp"
#include "oencsd/weights.hpp"

namespace oencsd {

namespace detail {

// Pre-norm decoder stack named by prefix ("refine.attr" / "refine.cent").
inline Eigen::MatrixXf decoder_stack(const WeightBundle& w, const std::string& which,
                                     Eigen::MatrixXf q, const Eigen::MatrixXf& memory) {
    const ModelConfig& cfg = w.config();
    const int D = cfg.d_model;
    for (int l = 0; l < cfg.n_decoder_layers_refine; ++l) {
        const std::string p = "refine." + which + ".layer" + std::to_string(l) + ".";
        const Eigen::MatrixXf n1 =
            layer_norm(q, w.vec(p + "ln1.gamma", D), w.vec(p + "ln1.beta", D));
        q += multihead_attention(attn_params(w, p + "self.", D), cfg.n_heads, n1, n1);
        const Eigen::MatrixXf n2 =
            layer_norm(q, w.vec(p + "ln2.gamma", D), w.vec(p + "ln2.beta", D));
        q += multihead_attention(attn_params(w, p + "cross.", D), cfg.n_heads, n2, memory);
        const Eigen::MatrixXf n3 =
            layer_norm(q, w.vec(p + "ln3.gamma", D), w.vec(p + "ln3.beta", D));
        q += feed_forward(w, p + "ff.", D, cfg.ff_dim, n3);
    }
    const std::string o = "refine." + which + ".out_ln.";
    return layer_norm(q, w.vec(o + "gamma", D), w.vec(o + "beta", D));
}

}  // namespace detail

// Chunk-local attractor refinement against the frame embeddings.
// S_n = 0 short-circuits to an empty matrix.
inline Eigen::MatrixXf refine_attractors(const AttractorSet& a, const FrameEmbeddings& e,
                                         const WeightBundle& w) {
    if (a.count() == 0) return Eigen::MatrixXf(w.config().d_model, 0);
    return detail::decoder_stack(w, "attr", a.vectors, e.data);
}

// Centroid refinement against [g_spk | refined attractors]. The ghost
// speaker column gives inactive centroids a neutral attention target.
// Output has exactly as many columns as there are centroids; C = 0 (first
// chunk) short-circuits to an empty matrix.
inline Eigen::MatrixXf refine_centroids(const Eigen::MatrixXf& centroids,
                                        const Eigen::MatrixXf& a_plus,
                                        const WeightBundle& w) {
    const ModelConfig& cfg = w.config();
    if (a_plus.cols() < 1) throw contract_error("a_plus must include the ghost speaker");
    if (centroids.cols() == 0) return Eigen::MatrixXf(cfg.d_model, 0);
    return detail::decoder_stack(w, "cent", centroids, a_plus);
}

// Convenience: [g_spk | A'] with the ghost speaker loaded from the bundle.
inline Eigen::MatrixXf ghost_concat(const Eigen::MatrixXf& a_refined, const WeightBundle& w) {
    const int D = w.config().d_model;
    Eigen::MatrixXf a_plus(D, a_refined.cols() + 1);
    a_plus.col(0) = w.vec("refine.g_spk", D);
    if (a_refined.cols() > 0) a_plus.rightCols(a_refined.cols()) = a_refined;
    return a_plus;
}

}  // namespace oencsd

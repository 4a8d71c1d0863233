// SPDX-License-Identifier: Apache-2.0
//
// Loss stack for the diarization engine, implemented as pure evaluators
// (no gradients): binary cross-entropy, attractor-existence loss,
// permutation-invariant diarization loss, their chunk-averaged combination,
// the clustering cross-entropy, the stitched-output diarization loss, and
// the weighted total.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oencsd/assignment.hpp"
#include "oencsd/common.hpp"

namespace oencsd {

// ============================================================================
// Element losses
// ============================================================================

// Binary cross-entropy with epsilon clamping; p is clamped to
// [1e-7, 1 - 1e-7] so saturated posteriors stay finite.
inline double bce(double p, int y) {
    if (y != 0 && y != 1) throw contract_error("bce target must be 0 or 1");
    constexpr double kEps = 1e-7;
    const double q = std::min(std::max(p, kEps), 1.0 - kEps);
    return y == 1 ? -std::log(q) : -std::log(1.0 - q);
}

// Mean BCE of the existence probabilities against [1, ..., 1, 0]: the first
// S entries are active-speaker slots, the final entry is the stop slot.
inline double existence_loss(const Eigen::VectorXd& z_hat, int n_speakers) {
    if (n_speakers < 0) throw contract_error("speaker count must be >= 0");
    if (static_cast<int>(z_hat.size()) != n_speakers + 1)
        throw contract_error("existence probabilities must have length speakers + 1");
    double total = 0.0;
    for (int i = 0; i <= n_speakers; ++i) total += bce(z_hat(i), i < n_speakers ? 1 : 0);
    return total / static_cast<double>(n_speakers + 1);
}

// ============================================================================
// Permutation-invariant diarization loss
// ============================================================================

struct PitResult {
    double loss = 0.0;
    // permutation[i] = reference row matched to hypothesis row i.
    std::vector<int> permutation;
};

namespace detail {

inline void check_binary_labels(const Eigen::MatrixXi& y) {
    for (Eigen::Index i = 0; i < y.rows(); ++i)
        for (Eigen::Index t = 0; t < y.cols(); ++t)
            if (y(i, t) != 0 && y(i, t) != 1)
                throw contract_error("reference labels must be binary");
}

}  // namespace detail

// Minimum over speaker permutations of the mean per-element BCE between the
// hypothesis posteriors and the binary reference. The search runs as an exact
// linear assignment on the S x S matrix of pairwise summed BCEs, which equals
// the exhaustive minimum because the total cost of a permutation is the sum
// of its independent row-column pair costs.
inline PitResult pit_diarization_loss(const Eigen::MatrixXd& y_hat, const Eigen::MatrixXi& y) {
    if (y_hat.rows() != y.rows() || y_hat.cols() != y.cols())
        throw contract_error("hypothesis and reference shapes must match");
    detail::check_binary_labels(y);
    const int S = static_cast<int>(y_hat.rows());
    const int T = static_cast<int>(y_hat.cols());
    if (S == 0) return {0.0, {}};
    PitResult r;
    if (T == 0) {
        r.permutation.resize(static_cast<std::size_t>(S));
        for (int i = 0; i < S; ++i) r.permutation[static_cast<std::size_t>(i)] = i;
        return r;
    }
    Eigen::MatrixXd cost(S, S);
    for (int i = 0; i < S; ++i)
        for (int j = 0; j < S; ++j) {
            double c = 0.0;
            for (int t = 0; t < T; ++t) c += bce(y_hat(i, t), y(j, t));
            cost(i, j) = c;
        }
    r.permutation = min_cost_assignment(cost);
    double total = 0.0;
    for (int i = 0; i < S; ++i) total += cost(i, r.permutation[static_cast<std::size_t>(i)]);
    r.loss = total / (static_cast<double>(S) * static_cast<double>(T));
    return r;
}

// ============================================================================
// Combined chunk losses
// ============================================================================

struct EendEdaLoss {
    double diarization = 0.0;
    double existence = 0.0;
    double total = 0.0;
    std::vector<int> permutation;
};

// Diarization-plus-existence loss on one block of frames.
inline EendEdaLoss eend_eda_loss(const Eigen::MatrixXd& y_hat, const Eigen::MatrixXi& y,
                                 const Eigen::VectorXd& z_hat) {
    EendEdaLoss out;
    PitResult pit = pit_diarization_loss(y_hat, y);
    out.diarization = pit.loss;
    out.permutation = std::move(pit.permutation);
    out.existence = existence_loss(z_hat, static_cast<int>(y.rows()));
    out.total = out.diarization + out.existence;
    return out;
}

struct DiarizationChunk {
    Eigen::MatrixXd posteriors;   // S_n x T_n probabilities
    Eigen::MatrixXi labels;       // S_n x T_n binary reference
    Eigen::VectorXd existence;    // length S_n + 1
};

// Mean over chunks of the per-chunk diarization-plus-existence loss. With a
// single chunk this equals eend_eda_loss on the same data.
inline double eend_eda_chunk_loss(const std::vector<DiarizationChunk>& chunks) {
    if (chunks.empty()) throw contract_error("chunk loss needs at least one chunk");
    double total = 0.0;
    for (const DiarizationChunk& c : chunks)
        total += eend_eda_loss(c.posteriors, c.labels, c.existence).total;
    return total / static_cast<double>(chunks.size());
}

// ============================================================================
// Clustering losses
// ============================================================================

// Cross-entropy of assignment probabilities against one-hot targets over the
// C + 1 classes (existing centroids plus the new-speaker slot), averaged over
// the attractor rows of one chunk.
inline double clustering_ce(const Eigen::MatrixXd& p, const Eigen::MatrixXi& r) {
    if (p.rows() != r.rows() || p.cols() != r.cols())
        throw contract_error("assignment probabilities and targets must share a shape");
    if (p.rows() < 1) throw contract_error("clustering loss needs at least one attractor row");
    constexpr double kEps = 1e-7;
    double total = 0.0;
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
        int ones = 0;
        int target = -1;
        for (Eigen::Index j = 0; j < r.cols(); ++j) {
            if (r(i, j) == 1) {
                ++ones;
                target = static_cast<int>(j);
            } else if (r(i, j) != 0) {
                throw contract_error("assignment targets must be one-hot rows");
            }
        }
        if (ones != 1) throw contract_error("assignment targets must be one-hot rows");
        total += -std::log(std::max(p(i, target), kEps));
    }
    return total / static_cast<double>(r.rows());
}

// Mean over chunks of the per-chunk clustering cross-entropy.
inline double clustering_ce(const std::vector<Eigen::MatrixXd>& p,
                            const std::vector<Eigen::MatrixXi>& r) {
    if (p.size() != r.size()) throw contract_error("chunk counts must match");
    if (p.empty()) throw contract_error("clustering loss needs at least one chunk");
    double total = 0.0;
    for (std::size_t n = 0; n < p.size(); ++n) total += clustering_ce(p[n], r[n]);
    return total / static_cast<double>(p.size());
}

// PIT diarization loss on the stitched global output. A speaker-count
// mismatch is resolved by padding: missing hypothesis speakers become all-eps
// probability rows, missing reference speakers become all-zero label rows.
inline double cluster_diar_loss(const Eigen::MatrixXd& y_hat_global,
                                const Eigen::MatrixXi& y_global) {
    if (y_hat_global.cols() != y_global.cols())
        throw contract_error("stitched output and reference must cover the same frames");
    const Eigen::Index T = y_global.cols();
    const Eigen::Index S = std::max(y_hat_global.rows(), y_global.rows());
    Eigen::MatrixXd hyp = Eigen::MatrixXd::Constant(S, T, 1e-7);
    hyp.topRows(y_hat_global.rows()) = y_hat_global;
    Eigen::MatrixXi ref = Eigen::MatrixXi::Zero(S, T);
    ref.topRows(y_global.rows()) = y_global;
    return pit_diarization_loss(hyp, ref).loss;
}

// ============================================================================
// Weighted total
// ============================================================================

// Weighted sum of the four components; the chunk term carries weight 10.
inline double total_loss(double global_diar, double chunk, double clustering,
                         double cluster_diar) {
    for (double v : {global_diar, chunk, clustering, cluster_diar})
        if (!std::isfinite(v)) throw contract_error("loss components must be finite");
    return global_diar + 10.0 * chunk + clustering + cluster_diar;
}

}  // namespace oencsd

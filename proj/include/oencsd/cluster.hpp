// SPDX-License-Identifier: Apache-2.0
//
// Online neural clustering: softmax assignment of refined attractors to
// refined centroids (plus the shared "new speaker" embedding h0), optimal
// matching by total log-probability, GRU centroid updates, and permutation
// of chunk-local posteriors into global speaker rows.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "oencsd/assignment.hpp"
#include "oencsd/common.hpp"
#include "oencsd/eend_eda.hpp"
#include "oencsd/weights.hpp"

namespace oencsd {

// Standard GRU cell; h' = (1-z) (.) h + z (.) tanh-candidate.
inline Eigen::VectorXf gru_cell(Eigen::Ref<const Eigen::VectorXf> x,
                                Eigen::Ref<const Eigen::VectorXf> h,
                                const WeightBundle& w) {
    const int D = static_cast<int>(h.size());
    const Eigen::VectorXf zb = w.mat("gru.update.W", D, D) * x +
                               w.mat("gru.update.U", D, D) * h + w.vec("gru.update.b", D);
    const Eigen::VectorXf rb = w.mat("gru.reset.W", D, D) * x +
                               w.mat("gru.reset.U", D, D) * h + w.vec("gru.reset.b", D);
    const Eigen::ArrayXf z = zb.array().logistic();
    const Eigen::VectorXf gated = (rb.array().logistic() * h.array()).matrix();
    const Eigen::VectorXf cb = w.mat("gru.cand.W", D, D) * x +
                               w.mat("gru.cand.U", D, D) * gated + w.vec("gru.cand.b", D);
    return ((1.0f - z) * h.array() + z * cb.array().tanh()).matrix();
}

// Per-speaker GRU hidden states; one column per discovered speaker.
struct CentroidBank {
    Eigen::MatrixXf centroids;  // D x C

    explicit CentroidBank(int d_model = 0) : centroids(d_model, 0) {}
    int count() const { return static_cast<int>(centroids.cols()); }
};

// Row-stochastic S_n x (C+1) matrix; column C is the "new speaker" class.
struct AssignmentProbs {
    Eigen::MatrixXd p;
    int n_centroids() const { return static_cast<int>(p.cols()) - 1; }
};

// Chosen target per attractor; kNew marks a fresh speaker. Fresh global
// indices follow attractor order on top of n_centroids_at_match.
struct Assignment {
    static constexpr int kNew = -1;
    int n_centroids_at_match = 0;
    std::vector<int> target;

    int size() const { return static_cast<int>(target.size()); }
    int n_new() const {
        int k = 0;
        for (int t : target) k += (t == kNew) ? 1 : 0;
        return k;
    }
    // Global speaker index per attractor.
    std::vector<int> global_targets() const {
        std::vector<int> out(target.size());
        int next = n_centroids_at_match;
        for (size_t i = 0; i < target.size(); ++i)
            out[i] = target[i] == kNew ? next++ : target[i];
        return out;
    }
};

// Softmax over candidate columns [H_refined | h0] of dot products with each
// refined attractor. Logits are float dot products; the softmax itself runs
// in double so downstream log-prob matching is well conditioned.
inline AssignmentProbs assignment_probs(const Eigen::MatrixXf& h_refined,
                                        Eigen::Ref<const Eigen::VectorXf> h0,
                                        const Eigen::MatrixXf& a_refined) {
    const int S = static_cast<int>(a_refined.cols());
    const int C = static_cast<int>(h_refined.cols());
    if (S < 1) throw contract_error("assignment_probs needs at least one attractor");

    Eigen::MatrixXf logits_f(S, C + 1);
    if (C > 0) logits_f.leftCols(C) = a_refined.transpose() * h_refined;
    logits_f.col(C) = a_refined.transpose() * h0;

    AssignmentProbs out;
    out.p.resize(S, C + 1);
    for (int i = 0; i < S; ++i) {
        const Eigen::ArrayXd row = logits_f.row(i).transpose().cast<double>().array();
        const Eigen::ArrayXd e = (row - row.maxCoeff()).exp();
        out.p.row(i) = (e / e.sum()).transpose();
    }
    return out;
}

// Maximizes total log p over assignments where existing-centroid targets are
// pairwise distinct and any number of attractors may open new speakers.
// Solved as min-cost linear assignment on [-log p | S_n replicas of the
// new-speaker column]; replica columns always admit a feasible solution.
inline Assignment match(const AssignmentProbs& probs) {
    const int S = static_cast<int>(probs.p.rows());
    const int C = probs.n_centroids();
    Assignment out;
    out.n_centroids_at_match = C;
    if (S == 0) return out;

    Eigen::MatrixXd cost(S, C + S);
    for (int i = 0; i < S; ++i) {
        for (int j = 0; j < C + 1; ++j) {
            const double p = probs.p(i, j);
            const double c = p > 0.0 ? -std::log(p) : 1e18;
            if (j < C)
                cost(i, j) = std::min(c, 1e18);
            else
                for (int k = C; k < C + S; ++k) cost(i, k) = std::min(c, 1e18);
        }
    }
    const std::vector<int> cols = min_cost_assignment(cost);
    out.target.resize(S);
    for (int i = 0; i < S; ++i) out.target[i] = cols[i] < C ? cols[i] : Assignment::kNew;
    return out;
}

// Teacher-forced GRU updates with the matched attractors: an existing target
// advances its centroid, a new target founds one from h0. Unmatched
// centroids are left bit-identical.
inline void update_centroids(CentroidBank& bank, const Eigen::MatrixXf& a_refined,
                             const Assignment& asg, Eigen::Ref<const Eigen::VectorXf> h0,
                             const WeightBundle& w) {
    if (static_cast<int>(a_refined.cols()) != asg.size())
        throw contract_error("assignment size does not match attractor count");
    if (asg.n_centroids_at_match != bank.count())
        throw contract_error("assignment was computed for a different bank size");

    const int D = static_cast<int>(bank.centroids.rows());
    const int grown = bank.count() + asg.n_new();
    Eigen::MatrixXf next = bank.centroids;
    next.conservativeResize(D, grown);

    int fresh = asg.n_centroids_at_match;
    for (int i = 0; i < asg.size(); ++i) {
        if (asg.target[i] == Assignment::kNew)
            next.col(fresh++) = gru_cell(a_refined.col(i), h0, w);
        else
            next.col(asg.target[i]) = gru_cell(a_refined.col(i), bank.centroids.col(asg.target[i]), w);
    }
    bank.centroids = std::move(next);
}

// Rows of the chunk posteriors re-indexed by global speaker id; rows of
// speakers absent from this chunk are zero (silent).
inline Eigen::MatrixXf permute_local(const LocalPosteriors& y, const Assignment& asg) {
    const int S = static_cast<int>(y.data.rows());
    if (S != asg.size()) throw contract_error("posterior rows do not match assignment size");
    const int total = asg.n_centroids_at_match + asg.n_new();
    Eigen::MatrixXf out = Eigen::MatrixXf::Zero(total, y.data.cols());
    const std::vector<int> g = asg.global_targets();
    for (int i = 0; i < S; ++i) out.row(g[i]) = y.data.row(i);
    return out;
}

}  // namespace oencsd

// SPDX-License-Identifier: Apache-2.0
//
// Exact linear assignment (Hungarian method with potentials, O(n^2 m)).
// Shared by the permutation-invariant loss, attractor-centroid matching,
// and the scorer's speaker mapping.

#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "oencsd/common.hpp"

namespace oencsd {

// Minimizes sum_i cost(i, col[i]) over injective row->column maps.
// Requires rows <= cols; every row is assigned. Returns col[i] per row.
// Ties are broken toward lower column indices (first minimum scan wins),
// so results are deterministic even on degenerate cost matrices.
inline std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost) {
    const int n = static_cast<int>(cost.rows());
    const int m = static_cast<int>(cost.cols());
    if (n == 0) return {};
    if (n > m) throw contract_error("assignment needs rows <= cols");

    const double INF = std::numeric_limits<double>::infinity();
    // 1-indexed potentials; p[j] = row matched to column j (0 = free).
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    std::vector<char> used(m + 1);

    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), INF);
        std::fill(used.begin(), used.end(), char(0));
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = -1;
            double delta = INF;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        // Augment along the alternating path back to the free column.
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> col_of_row(n, -1);
    for (int j = 1; j <= m; ++j)
        if (p[j] != 0) col_of_row[p[j] - 1] = j - 1;
    return col_of_row;
}

// Maximizes sum_i score(i, col[i]); same contract as min_cost_assignment.
inline std::vector<int> max_score_assignment(const Eigen::MatrixXd& score) {
    return min_cost_assignment(-score);
}

}  // namespace oencsd

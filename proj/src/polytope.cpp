#include "simmatch/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace simmatch {

namespace {

// Dense shortest-augmenting-path assignment (Jonker-Volgenant family),
// following "A Shortest Augmenting Path Algorithm for Dense and Sparse Linear
// Assignment Problems", Computing 38, 1987. One Dijkstra pass per row over
// reduced costs, O(N^3) total. Returns col_of_row for the square matrix.
std::vector<Index> solve_assignment(const Matrix& cost) {
    const Index n = cost.rows();
    const double inf = std::numeric_limits<double>::infinity();

    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);  // row potentials
    std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);  // column potentials
    std::vector<Index> row_of_col(static_cast<std::size_t>(n) + 1, -1);  // col n is virtual
    std::vector<Index> prev_col(static_cast<std::size_t>(n) + 1, -1);

    for (Index i = 0; i < n; ++i) {
        row_of_col[static_cast<std::size_t>(n)] = i;
        Index j0 = n;
        std::vector<double> min_reduced(static_cast<std::size_t>(n) + 1, inf);
        std::vector<char> scanned(static_cast<std::size_t>(n) + 1, 0);
        do {
            scanned[static_cast<std::size_t>(j0)] = 1;
            const Index i0 = row_of_col[static_cast<std::size_t>(j0)];
            double delta = inf;
            Index j1 = -1;
            for (Index j = 0; j < n; ++j) {
                if (scanned[static_cast<std::size_t>(j)]) continue;
                const double cur = cost(i0, j) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < min_reduced[static_cast<std::size_t>(j)]) {
                    min_reduced[static_cast<std::size_t>(j)] = cur;
                    prev_col[static_cast<std::size_t>(j)] = j0;
                }
                if (min_reduced[static_cast<std::size_t>(j)] < delta) {
                    delta = min_reduced[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (Index j = 0; j <= n; ++j) {
                if (scanned[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(row_of_col[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    min_reduced[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (row_of_col[static_cast<std::size_t>(j0)] != -1);

        // Augment along the alternating path back to the virtual column.
        do {
            const Index j1 = prev_col[static_cast<std::size_t>(j0)];
            row_of_col[static_cast<std::size_t>(j0)] = row_of_col[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != n);
    }

    std::vector<Index> col_of_row(static_cast<std::size_t>(n), -1);
    for (Index j = 0; j < n; ++j) {
        const Index i = row_of_col[static_cast<std::size_t>(j)];
        if (i >= 0) col_of_row[static_cast<std::size_t>(i)] = j;
    }
    return col_of_row;
}

}  // namespace

AssignmentOracleResult lp_oracle(const Vector& g, Index m, Index n) {
    if (g.size() != m * n) {
        throw std::invalid_argument("lp_oracle: cost vector length does not equal m*n");
    }
    if (!g.allFinite()) {
        throw std::invalid_argument("lp_oracle: cost vector has non-finite entries");
    }
    const Index nn = m + n;
    const double sentinel = 1e6 * g.cwiseAbs().maxCoeff();

    Matrix cost(nn, nn);
    cost.topLeftCorner(m, n) = RowMajorMap(g.data(), m, n);
    cost.topRightCorner(m, m).setConstant(sentinel);
    cost.topRightCorner(m, m).diagonal().setZero();
    cost.bottomLeftCorner(n, n).setConstant(sentinel);
    cost.bottomLeftCorner(n, n).diagonal().setZero();
    cost.bottomRightCorner(n, m).setZero();

    const std::vector<Index> col_of_row = solve_assignment(cost);

    AssignmentOracleResult out;
    out.vertex = MatchVector::zero(m, n);
    for (Index i = 0; i < m; ++i) {
        const Index j = col_of_row[static_cast<std::size_t>(i)];
        if (j >= 0 && j < n) {
            out.vertex.values[out.vertex.index(i, j)] = 1.0;
            out.matched_pairs.emplace_back(i, j);
            out.objective += g[i * n + j];
        }
    }
    return out;
}

bool is_feasible(const MatchVector& p, double tol) {
    if (p.values.size() != p.m * p.n || !p.values.allFinite()) return false;
    if ((p.values.array() < -tol).any()) return false;
    if ((p.row_sums().array() > 1.0 + tol).any()) return false;
    if ((p.col_sums().array() > 1.0 + tol).any()) return false;
    return true;
}

AssignmentOracleResult round_to_vertex(const MatchVector& p) {
    AssignmentOracleResult r = lp_oracle(-p.values, p.m, p.n);
    // Zero-weight pairs tie with "unmatched"; drop them so vertices round to
    // themselves.
    AssignmentOracleResult out;
    out.vertex = MatchVector::zero(p.m, p.n);
    for (const auto& [i, j] : r.matched_pairs) {
        if (p.values[p.index(i, j)] > 1e-9) {
            out.vertex.values[out.vertex.index(i, j)] = 1.0;
            out.matched_pairs.emplace_back(i, j);
            out.objective += -p.values[p.index(i, j)];
        }
    }
    return out;
}

}  // namespace simmatch

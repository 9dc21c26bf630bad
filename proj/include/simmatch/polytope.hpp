#pragma once

#include "simmatch/types.hpp"

namespace simmatch {

// Output of the linear-minimization oracle over the doubly-substochastic
// polytope {P >= 0, P 1 <= 1, 1'P <= 1}. The minimizer of a linear function
// over this polytope is always a partial permutation matrix, so `vertex` is
// integral by construction and matched_pairs lists its support.
struct AssignmentOracleResult {
    MatchVector vertex;
    double objective = 0.0;  // g' q at the vertex
    std::vector<std::pair<Index, Index>> matched_pairs;
};

// argmin_q g' q over the polytope, solved as a min-cost bipartite matching on
// an (m+n) x (m+n) padded square matrix: the real g block, zero-cost dummy
// diagonals for "row/column unmatched", a large finite sentinel on the
// remaining dummy cells, and a free dummy-dummy block. Deterministic:
// equal-cost solutions are resolved by the solver's row-major scan order.
AssignmentOracleResult lp_oracle(const Vector& g, Index m, Index n);

// All three constraint families within `tol`: entries >= 0, row sums <= 1,
// column sums <= 1.
bool is_feasible(const MatchVector& p, double tol = 1e-9);

// Nearest vertex in the correlation sense: lp_oracle(-p). Pairs whose weight
// in p is zero are dropped from the returned support (they contribute nothing
// to the objective), which makes the rounding idempotent on vertices.
AssignmentOracleResult round_to_vertex(const MatchVector& p);

}  // namespace simmatch

#pragma once

#include "simmatch/types.hpp"

namespace simmatch {

// Matrix-free realization of the Kronecker-product operators that rewrite the
// matching objective in terms of the flat row-major vector p = vec(P).
//
// For a fixed cloud pair with model matrix X (m x d, points as rows) and
// scene matrix Y (n x d), the bundle evaluates, without materializing any
// d^2 x mn operator:
//
//   cross_matrix(p)        = X' P Y                    (the d x d cross term)
//   model_moment(p)        = X' P 1                    (d)
//   scene_moment(p)        = Y' P' 1                   (d)
//   model_sq_moment(p)     = xsq' P 1                  (scalar)
//   scene_sq_moment(p)     = 1' P ysq                  (scalar)
//   mass(p)                = 1' p                      (scalar)
//
// and the adjoints needed by the envelope gradient, all as length-mn vectors
// in the same row-major layout:
//
//   cross_adjoint(W)         with (i,j) entry  (X W Y')_{ij}
//   model_moment_adjoint(w)  with (i,j) entry  (X w)_i
//   scene_moment_adjoint(w)  with (i,j) entry  (Y w)_j
//
// These agree entry-for-entry with the explicit Kronecker forms
// X' (x) Y', X' (x) 1', 1' (x) Y', xsq (x) 1, 1 (x) ysq under row-major
// vectorization; the unit tests check exactly that.
class PairOperators {
public:
    PairOperators(PointCloud model, PointCloud scene);

    Index m() const { return model_.size(); }
    Index n() const { return scene_.size(); }
    Index d() const { return model_.dim(); }
    const Matrix& X() const { return model_.points(); }
    const Matrix& Y() const { return scene_.points(); }
    const Vector& x_sq() const { return model_.sq_norms(); }
    const Vector& y_sq() const { return scene_.sq_norms(); }

    Matrix cross_matrix(const Vector& p) const;
    Vector model_moment(const Vector& p) const;
    Vector scene_moment(const Vector& p) const;
    double model_sq_moment(const Vector& p) const;
    double scene_sq_moment(const Vector& p) const;
    double mass(const Vector& p) const { return p.sum(); }

    Vector cross_adjoint(const Eigen::Ref<const Matrix>& w) const;
    Vector model_moment_adjoint(const Vector& w) const;
    Vector scene_moment_adjoint(const Vector& w) const;

private:
    RowMajorMap as_matrix(const Vector& p) const;

    PointCloud model_;
    PointCloud scene_;
};

// Joint closed-form minimization of the objective over scale and rotation at
// a fixed matching p.
struct RotationScaleSolution {
    double scale = 1.0;       // optimal s, clamped to [s_lo, s_hi]
    Matrix rotation;          // optimal proper rotation
    Vector rotation_vec;      // row-major flattening of rotation', length d^2
    Matrix cross;             // the centered cross matrix the rotation solver consumed
    double trace_value = 0.0; // tr(rotation * cross)
    double curvature = 0.0;   // coefficient of s^2 (nonnegative up to rounding)
    double value = 0.0;       // min_s,R of the s-dependent part: curvature*s^2 - 2*trace_value*s
};

// Full objective at an explicit transform:
//   sum_ij p_ij ||y_j - s R x_i - t||^2 - mu * sum_ij p_ij,
// evaluated through the expanded moment form (no per-pair loop). p = 0 gives 0.
double objective_full(const MatchVector& p, const SimilarityTransform& t,
                      const PairOperators& ops, double mu);

// Closed-form optimal translation (Y'P'1 - s R X'P 1) / (1'p).
// Throws EmptyMatching when mass(p) <= denom_guard.
Vector optimal_translation(const MatchVector& p, double scale, const Eigen::Ref<const Matrix>& rotation,
                           const PairOperators& ops, double denom_guard = 1e-8);

// Centered cross matrix  X'PY - (X'P1)(Y'P'1)' / (1'p).
// Throws EmptyMatching when mass(p) <= denom_guard.
Matrix cross_covariance(const MatchVector& p, const PairOperators& ops, double denom_guard = 1e-8);

// Proper rotation maximizing tr(R * cross) over SO(d), via the SVD of cross'
// with determinant correction on the smallest singular direction. Returns the
// rotation and the achieved trace. For (near) rank-deficient inputs the
// maximizer is not unique; the result is made deterministic by flipping each
// left singular vector so its largest-magnitude entry is positive.
std::pair<Matrix, double> optimal_rotation(const Eigen::Ref<const Matrix>& cross);

// Principal-frame alignment hypotheses for a cloud pair: rotations mapping
// the model's covariance eigenframe onto the scene's, one per admissible
// axis-flip (4 for d = 3, 2 for d = 2). At the uniform matching the cross
// matrix vanishes and carries no orientation signal at all, so the homotopy
// paths are seeded with these hypotheses instead.
std::vector<Matrix> principal_alignment_rotations(const PointCloud& model,
                                                  const PointCloud& scene);

// Minimizer of curvature*s^2 - 2*linear*s over [s_lo, s_hi]: the interior
// stationary point when curvature > 0 and it lies in range, otherwise the
// better boundary. Ties break toward the smaller s. Handles nonpositive
// curvature (boundary comparison); |curvature| < 1e-12 is treated as 0 to
// absorb rounding on the mathematically nonnegative coefficient.
double optimal_scale(double curvature, double linear, double s_lo, double s_hi);

// Joint (s, R) minimization at fixed p: rotation first (it is optimal for any
// positive scale), then the bounded scalar quadratic in s. When s_lo = 0 and
// the optimal scale is 0, rotation is reported as identity.
// Throws EmptyMatching when mass(p) <= config.denom_guard.
RotationScaleSolution solve_scale_rotation(const MatchVector& p, const PairOperators& ops,
                                           const MatchConfig& config);

// The concave envelope: the objective with translation, scale and rotation
// minimized out. Defined as 0 at (and below the guard near) p = 0, its limit
// value.
double envelope_value(const MatchVector& p, const PairOperators& ops, const MatchConfig& config);

// Gradient of envelope_value at p, by Danskin's theorem: the gradient of the
// p-linear objective evaluated at the minimizing (s, R, t). Where the
// minimizer is not unique this is one subgradient.
// Throws EmptyMatching when mass(p) <= config.denom_guard.
Vector envelope_gradient(const MatchVector& p, const PairOperators& ops, const MatchConfig& config);

// The same expression evaluated at a caller-chosen scale and rotation (with
// the translation still eliminated in closed form): the gradient of the
// majorant min_t objective(p, scale, rotation, t) >= envelope_value(p).
// Used to steer early homotopy steps toward a specific alignment hypothesis.
Vector envelope_gradient_at(const MatchVector& p, const PairOperators& ops,
                            const MatchConfig& config, double scale,
                            const Eigen::Ref<const Matrix>& rotation);

// Row-major vec / mat helpers shared with tests.
Vector vec_row_major(const Eigen::Ref<const Matrix>& m);
Matrix mat_row_major(const Vector& v, Index rows, Index cols);

}  // namespace simmatch

#include "simmatch/objective.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace simmatch {

Vector vec_row_major(const Eigen::Ref<const Matrix>& m) {
    Vector v(m.rows() * m.cols());
    for (Index i = 0; i < m.rows(); ++i) {
        v.segment(i * m.cols(), m.cols()) = m.row(i).transpose();
    }
    return v;
}

Matrix mat_row_major(const Vector& v, Index rows, Index cols) {
    if (v.size() != rows * cols) {
        throw std::invalid_argument("mat_row_major: size mismatch");
    }
    return RowMajorMap(v.data(), rows, cols);
}

PairOperators::PairOperators(PointCloud model, PointCloud scene)
    : model_(std::move(model)), scene_(std::move(scene)) {
    if (model_.dim() != scene_.dim()) {
        throw std::invalid_argument("point clouds have different dimensions");
    }
}

RowMajorMap PairOperators::as_matrix(const Vector& p) const {
    if (p.size() != m() * n()) {
        throw std::invalid_argument("match vector length does not equal m*n");
    }
    return RowMajorMap(p.data(), m(), n());
}

Matrix PairOperators::cross_matrix(const Vector& p) const {
    return X().transpose() * (as_matrix(p) * Y());
}

Vector PairOperators::model_moment(const Vector& p) const {
    return X().transpose() * as_matrix(p).rowwise().sum();
}

Vector PairOperators::scene_moment(const Vector& p) const {
    return Y().transpose() * as_matrix(p).colwise().sum().transpose();
}

double PairOperators::model_sq_moment(const Vector& p) const {
    return x_sq().dot(as_matrix(p).rowwise().sum());
}

double PairOperators::scene_sq_moment(const Vector& p) const {
    return y_sq().dot(as_matrix(p).colwise().sum());
}

Vector PairOperators::cross_adjoint(const Eigen::Ref<const Matrix>& w) const {
    return vec_row_major(X() * w * Y().transpose());
}

Vector PairOperators::model_moment_adjoint(const Vector& w) const {
    // (i, j) entry is (X w)_i: columns replicate X w.
    Matrix g = (X() * w).replicate(1, n());
    return vec_row_major(g);
}

Vector PairOperators::scene_moment_adjoint(const Vector& w) const {
    // (i, j) entry is (Y w)_j: rows replicate (Y w)'.
    Matrix g = (Y() * w).transpose().replicate(m(), 1);
    return vec_row_major(g);
}

double objective_full(const MatchVector& p, const SimilarityTransform& t,
                      const PairOperators& ops, double mu) {
    const double sigma = ops.mass(p.values);
    const double s = t.scale;
    const Matrix cross = ops.cross_matrix(p.values);
    const Vector mm = ops.model_moment(p.values);
    const Vector sm = ops.scene_moment(p.values);
    return ops.scene_sq_moment(p.values) + s * s * ops.model_sq_moment(p.values) -
           2.0 * s * (t.rotation * cross).trace() + sigma * t.translation.squaredNorm() -
           2.0 * t.translation.dot(sm - s * (t.rotation * mm)) - mu * sigma;
}

Vector optimal_translation(const MatchVector& p, double scale, const Eigen::Ref<const Matrix>& rotation,
                           const PairOperators& ops, double denom_guard) {
    const double sigma = ops.mass(p.values);
    if (!(sigma > denom_guard)) {
        throw EmptyMatching("empty matching: total match mass below guard");
    }
    return (ops.scene_moment(p.values) - scale * (rotation * ops.model_moment(p.values))) / sigma;
}

Matrix cross_covariance(const MatchVector& p, const PairOperators& ops, double denom_guard) {
    const double sigma = ops.mass(p.values);
    if (!(sigma > denom_guard)) {
        throw EmptyMatching("empty matching: total match mass below guard");
    }
    return ops.cross_matrix(p.values) -
           ops.model_moment(p.values) * ops.scene_moment(p.values).transpose() / sigma;
}

std::pair<Matrix, double> optimal_rotation(const Eigen::Ref<const Matrix>& cross) {
    const Index d = cross.rows();
    if (cross.cols() != d) {
        throw std::invalid_argument("optimal_rotation: square input required");
    }
    if (!cross.allFinite()) {
        throw std::invalid_argument("optimal_rotation: non-finite input");
    }
    Eigen::JacobiSVD<Matrix> svd(cross.transpose(), Eigen::ComputeFullU | Eigen::ComputeFullV);
    Matrix u = svd.matrixU();
    Matrix v = svd.matrixV();

    // Deterministic sign convention; flipping matched (u, v) column pairs
    // leaves the reconstructed rotation invariant except in rank-deficient
    // ties, which is exactly where a convention is needed.
    for (Index k = 0; k < d; ++k) {
        Index imax = 0;
        u.col(k).cwiseAbs().maxCoeff(&imax);
        if (u(imax, k) < 0.0) {
            u.col(k) = -u.col(k);
            v.col(k) = -v.col(k);
        }
    }

    Vector corr = Vector::Ones(d);
    corr[d - 1] = ((u * v.transpose()).determinant() < 0.0) ? -1.0 : 1.0;
    Matrix rotation = u * corr.asDiagonal() * v.transpose();
    return {rotation, (rotation * cross).trace()};
}

double optimal_scale(double curvature, double linear, double s_lo, double s_hi) {
    if (!(s_lo <= s_hi)) {
        throw std::invalid_argument("optimal_scale: s_lo must not exceed s_hi");
    }
    if (std::abs(curvature) < 1e-12) {
        curvature = std::max(curvature, 0.0);
    }
    const auto f = [&](double s) { return curvature * s * s - 2.0 * linear * s; };
    double best = s_lo;
    double best_val = f(s_lo);
    const auto consider = [&](double s) {
        const double val = f(s);
        if (val < best_val || (val == best_val && s < best)) {
            best = s;
            best_val = val;
        }
    };
    if (curvature > 0.0) {
        const double stat = linear / curvature;
        if (stat >= s_lo && stat <= s_hi) consider(stat);
    }
    consider(s_hi);
    return best;
}

std::vector<Matrix> principal_alignment_rotations(const PointCloud& model,
                                                  const PointCloud& scene) {
    const Index d = model.dim();
    const auto frame = [d](const PointCloud& c) {
        const Matrix centered = c.points().rowwise() - c.points().colwise().mean();
        const Matrix cov = centered.transpose() * centered / static_cast<double>(c.size());
        Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
        Matrix e = eig.eigenvectors();  // ascending eigenvalues
        // Deterministic signs, then force a right-handed frame.
        for (Index k = 0; k < d; ++k) {
            Index imax = 0;
            e.col(k).cwiseAbs().maxCoeff(&imax);
            if (e(imax, k) < 0.0) e.col(k) = -e.col(k);
        }
        if (e.determinant() < 0.0) e.col(0) = -e.col(0);
        return e;
    };
    const Matrix ex = frame(model);
    const Matrix ey = frame(scene);

    std::vector<Matrix> out;
    for (int mask = (1 << d) - 1; mask >= 0; --mask) {
        Vector signs(d);
        double prod = 1.0;
        for (Index k = 0; k < d; ++k) {
            signs[k] = (mask >> k) & 1 ? 1.0 : -1.0;
            prod *= signs[k];
        }
        if (prod > 0.0) out.push_back(ey * signs.asDiagonal() * ex.transpose());
    }
    return out;
}

RotationScaleSolution solve_scale_rotation(const MatchVector& p, const PairOperators& ops,
                                           const MatchConfig& config) {
    const double sigma = ops.mass(p.values);
    if (!(sigma > config.denom_guard)) {
        throw EmptyMatching("empty matching: total match mass below guard");
    }
    RotationScaleSolution sol;
    sol.cross = cross_covariance(p, ops, config.denom_guard);
    auto [rotation, trace_value] = optimal_rotation(sol.cross);
    sol.rotation = std::move(rotation);
    sol.trace_value = trace_value;
    sol.curvature =
        ops.model_sq_moment(p.values) - ops.model_moment(p.values).squaredNorm() / sigma;
    sol.scale = optimal_scale(sol.curvature, sol.trace_value, config.s_lo, config.s_hi);
    if (sol.scale == 0.0) {
        // Rotation is immaterial at zero scale.
        sol.rotation = Matrix::Identity(ops.d(), ops.d());
        sol.trace_value = sol.cross.trace();
    }
    sol.value = sol.curvature * sol.scale * sol.scale - 2.0 * sol.trace_value * sol.scale;
    sol.rotation_vec = vec_row_major(sol.rotation.transpose());
    return sol;
}

double envelope_value(const MatchVector& p, const PairOperators& ops, const MatchConfig& config) {
    const double sigma = ops.mass(p.values);
    if (!(sigma > config.denom_guard)) {
        return 0.0;  // limit value at vanishing match mass
    }
    const RotationScaleSolution sol = solve_scale_rotation(p, ops, config);
    return ops.scene_sq_moment(p.values) - config.mu * sigma -
           ops.scene_moment(p.values).squaredNorm() / sigma + sol.value;
}

namespace {

Vector gradient_at_transform(const MatchVector& p, const PairOperators& ops, double mu,
                             double s, const Eigen::Ref<const Matrix>& rot, double sigma) {
    const Vector u = ops.model_moment(p.values);   // X'P1
    const Vector v = ops.scene_moment(p.values);   // Y'P'1
    const Index mn = ops.m() * ops.n();
    const Vector ones = Vector::Ones(mn);

    // The two Kronecker vectors xsq (x) 1 and 1 (x) ysq, realized by replication.
    const Vector a = vec_row_major(ops.x_sq().replicate(1, ops.n()));
    const Vector b = vec_row_major(ops.y_sq().transpose().replicate(ops.m(), 1));

    Vector grad = b - mu * ones;
    grad -= (2.0 / sigma) * ops.scene_moment_adjoint(v);
    grad += (v.squaredNorm() / (sigma * sigma)) * ones;
    grad += s * s * (a - (2.0 / sigma) * ops.model_moment_adjoint(u) +
                     (u.squaredNorm() / (sigma * sigma)) * ones);
    grad -= 2.0 * s * (ops.cross_adjoint(rot.transpose()) -
                       (ops.scene_moment_adjoint(rot * u) +
                        ops.model_moment_adjoint(rot.transpose() * v)) /
                           sigma +
                       (v.dot(rot * u) / (sigma * sigma)) * ones);
    return grad;
}

}  // namespace

Vector envelope_gradient(const MatchVector& p, const PairOperators& ops, const MatchConfig& config) {
    const double sigma = ops.mass(p.values);
    if (!(sigma > config.denom_guard)) {
        throw EmptyMatching("empty matching: total match mass below guard");
    }
    const RotationScaleSolution sol = solve_scale_rotation(p, ops, config);
    return gradient_at_transform(p, ops, config.mu, sol.scale, sol.rotation, sigma);
}

Vector envelope_gradient_at(const MatchVector& p, const PairOperators& ops,
                            const MatchConfig& config, double scale,
                            const Eigen::Ref<const Matrix>& rotation) {
    const double sigma = ops.mass(p.values);
    if (!(sigma > config.denom_guard)) {
        throw EmptyMatching("empty matching: total match mass below guard");
    }
    return gradient_at_transform(p, ops, config.mu, scale, rotation, sigma);
}

}  // namespace simmatch

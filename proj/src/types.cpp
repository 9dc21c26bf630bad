#include "simmatch/types.hpp"

#include <cmath>

namespace simmatch {

PointCloud::PointCloud(Matrix pts) : pts_(std::move(pts)) {
    if (pts_.rows() < 1) {
        throw std::invalid_argument("point cloud needs at least one point");
    }
    if (pts_.cols() != 2 && pts_.cols() != 3) {
        throw std::invalid_argument("point cloud dimension must be 2 or 3, got " +
                                    std::to_string(pts_.cols()));
    }
    if (!pts_.allFinite()) {
        throw std::invalid_argument("point cloud has non-finite coordinates");
    }
    sq_norms_ = pts_.rowwise().squaredNorm();
}

SimilarityTransform SimilarityTransform::identity(Index d) {
    SimilarityTransform t;
    t.scale = 1.0;
    t.rotation = Matrix::Identity(d, d);
    t.translation = Vector::Zero(d);
    return t;
}

Matrix SimilarityTransform::apply(const Eigen::Ref<const Matrix>& pts) const {
    // Points as rows: x' = s R x + t  becomes  P' = s P R^T + 1 t^T.
    return (scale * pts * rotation.transpose()).rowwise() + translation.transpose();
}

bool SimilarityTransform::is_valid(double tol) const {
    if (!(scale > 0.0) || !std::isfinite(scale)) return false;
    if (rotation.rows() != rotation.cols() || rotation.rows() == 0) return false;
    if (!rotation.allFinite() || !translation.allFinite()) return false;
    const Index d = rotation.rows();
    const double ortho = (rotation.transpose() * rotation - Matrix::Identity(d, d)).norm();
    if (ortho > tol) return false;
    return std::abs(rotation.determinant() - 1.0) <= tol;
}

MatchVector::MatchVector(Vector v, Index m_, Index n_) : values(std::move(v)), m(m_), n(n_) {
    if (values.size() != m * n) {
        throw std::invalid_argument("match vector length does not equal m*n");
    }
}

MatchVector MatchVector::uniform(Index m, Index n) {
    const double v = 1.0 / static_cast<double>(std::max(m, n));
    return MatchVector(Vector::Constant(m * n, v), m, n);
}

MatchVector MatchVector::zero(Index m, Index n) {
    return MatchVector(Vector::Zero(m * n), m, n);
}

MatchVector MatchVector::from_pairs(Index m, Index n,
                                    const std::vector<std::pair<Index, Index>>& pairs) {
    MatchVector p = zero(m, n);
    for (const auto& [i, j] : pairs) {
        if (i < 0 || i >= m || j < 0 || j >= n) {
            throw std::invalid_argument("match pair out of range");
        }
        p.values[p.index(i, j)] = 1.0;
    }
    return p;
}

bool MatchVector::is_vertex(double tol) const {
    std::vector<int> row_count(static_cast<std::size_t>(m), 0);
    std::vector<int> col_count(static_cast<std::size_t>(n), 0);
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < n; ++j) {
            const double v = values[index(i, j)];
            if (std::abs(v) <= tol) continue;
            if (std::abs(v - 1.0) <= tol) {
                if (++row_count[static_cast<std::size_t>(i)] > 1) return false;
                if (++col_count[static_cast<std::size_t>(j)] > 1) return false;
                continue;
            }
            return false;
        }
    }
    return true;
}

std::vector<std::pair<Index, Index>> MatchVector::matched_pairs() const {
    std::vector<std::pair<Index, Index>> out;
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < n; ++j) {
            if (values[index(i, j)] > 0.5) out.emplace_back(i, j);
        }
    }
    return out;
}

void MatchConfig::validate() const {
    if (!(s_lo >= 0.0) || !(s_lo <= s_hi) || !std::isfinite(s_hi)) {
        throw std::invalid_argument("scale bounds must satisfy 0 <= s_lo <= s_hi, finite");
    }
    if (!(mu >= 0.0) || !std::isfinite(mu)) {
        throw std::invalid_argument("mu must be nonnegative and finite");
    }
    if (!(lambda_step > 0.0) || !(lambda_step <= 1.0)) {
        throw std::invalid_argument("lambda_step must lie in (0, 1]");
    }
    if (!(fw_tol > 0.0)) {
        throw std::invalid_argument("fw_tol must be positive");
    }
    if (fw_max_iters < 1) {
        throw std::invalid_argument("fw_max_iters must be at least 1");
    }
    if (!(denom_guard > 0.0)) {
        throw std::invalid_argument("denom_guard must be positive");
    }
}

NormalizedCloud normalize_cloud(const PointCloud& c) {
    const Matrix& pts = c.points();
    Vector centroid = pts.colwise().mean().transpose();
    Matrix centered = pts.rowwise() - centroid.transpose();
    const double rms = std::sqrt(centered.rowwise().squaredNorm().mean());
    if (!(rms > 0.0)) {
        throw DegenerateCloud("degenerate cloud: zero RMS radius (all points coincide)");
    }
    NormalizedCloud out;
    out.cloud = PointCloud(centered / rms);
    out.centroid = std::move(centroid);
    out.rms = rms;
    return out;
}

Matrix denormalize_points(const Eigen::Ref<const Matrix>& pts, const Vector& centroid, double rms) {
    return (pts * rms).rowwise() + centroid.transpose();
}

SimilarityTransform denormalize_transform(const SimilarityTransform& t,
                                          const Vector& model_centroid, double model_rms,
                                          const Vector& scene_centroid, double scene_rms) {
    // With xn = (x - cx)/rx and yn = (y - cy)/ry, the normalized-space map
    // yn = s R xn + tn lifts to y = (ry/rx) s R x + (ry tn + cy - (ry/rx) s R cx).
    SimilarityTransform out;
    out.scale = t.scale * scene_rms / model_rms;
    out.rotation = t.rotation;
    out.translation = scene_rms * t.translation + scene_centroid -
                      out.scale * (t.rotation * model_centroid);
    return out;
}

}  // namespace simmatch

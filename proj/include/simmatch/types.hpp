#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace simmatch {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Row-major map of a flat match vector onto its m x n matrix form.
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMajorMap = Eigen::Map<const RowMajorMatrix>;

// All points of a cloud coincide; no scale can be recovered.
struct DegenerateCloud : std::runtime_error {
    explicit DegenerateCloud(const std::string& what) : std::runtime_error(what) {}
};

// Total match mass fell to (or below) the denominator guard.
struct EmptyMatching : std::runtime_error {
    explicit EmptyMatching(const std::string& what) : std::runtime_error(what) {}
};

// Syntax error in a point or config file. `line` is 1-based, 0 if not applicable.
struct ParseError : std::runtime_error {
    ParseError(const std::string& what, std::string path_, int line_)
        : std::runtime_error(what), path(std::move(path_)), line(line_) {}
    std::string path;
    int line;
};

// An ordered set of 2D or 3D points. Rows of points() are the points; the
// per-point squared norms are cached because the matching objective consumes
// them constantly.
class PointCloud {
public:
    PointCloud() = default;

    // `pts` has one point per row. Throws std::invalid_argument on
    // non-finite coordinates, empty input, or dimension outside {2, 3}.
    explicit PointCloud(Matrix pts);

    Index size() const { return pts_.rows(); }
    Index dim() const { return pts_.cols(); }
    const Matrix& points() const { return pts_; }
    const Vector& sq_norms() const { return sq_norms_; }

private:
    Matrix pts_;
    Vector sq_norms_;
};

// x -> scale * rotation * x + translation, with rotation proper.
struct SimilarityTransform {
    double scale = 1.0;
    Matrix rotation;     // d x d, orthogonal, det +1
    Vector translation;  // d

    static SimilarityTransform identity(Index d);

    Index dim() const { return rotation.rows(); }

    // Applies the map to every row of `pts` (points as rows).
    Matrix apply(const Eigen::Ref<const Matrix>& pts) const;

    // True when rotation is proper within `tol` (Frobenius) and scale is
    // positive and finite.
    bool is_valid(double tol = 1e-10) const;
};

// The relaxed matching variable: values is the row-major flattening of the
// m x n matching matrix P, entry (i, j) at index i * n + j. Fractional during
// optimization, integral at polytope vertices.
struct MatchVector {
    Vector values;
    Index m = 0;
    Index n = 0;

    MatchVector() = default;
    MatchVector(Vector v, Index m_, Index n_);

    // Feasible interior start: every entry 1 / max(m, n).
    static MatchVector uniform(Index m, Index n);
    static MatchVector zero(Index m, Index n);
    static MatchVector from_pairs(Index m, Index n,
                                  const std::vector<std::pair<Index, Index>>& pairs);

    Index index(Index i, Index j) const { return i * n + j; }
    double operator()(Index i, Index j) const { return values[index(i, j)]; }

    RowMajorMap reshaped() const { return RowMajorMap(values.data(), m, n); }
    Vector row_sums() const { return reshaped().rowwise().sum(); }
    Vector col_sums() const { return reshaped().colwise().sum().transpose(); }
    double total() const { return values.sum(); }

    // Partial permutation predicate: every entry within `tol` of {0, 1} and
    // row/column sums at most 1 (counted on the rounded entries).
    bool is_vertex(double tol = 1e-9) const;

    // Pairs (i, j) with entry > 0.5, in row-major order.
    std::vector<std::pair<Index, Index>> matched_pairs() const;
};

struct MatchConfig {
    double mu = 0.15;           // match reward, in normalized squared-distance units
    double s_lo = 0.5;          // scale lower bound
    double s_hi = 1.5;          // scale upper bound
    double lambda_step = 0.05;  // homotopy increment
    double fw_tol = 1e-6;       // relative Frank-Wolfe gap tolerance
    int fw_max_iters = 200;     // per homotopy step
    double denom_guard = 1e-8;  // minimum admissible total match mass
    bool normalize = true;      // pre-normalize both clouds
    std::uint64_t seed = 0;     // benchmark RNG seed

    // Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

struct NormalizedCloud {
    PointCloud cloud;  // zero centroid, unit RMS radius
    Vector centroid;
    double rms = 1.0;
};

// Centers the cloud and rescales it to unit root-mean-square radius.
// Throws DegenerateCloud when all points coincide.
NormalizedCloud normalize_cloud(const PointCloud& c);

// Inverse of normalize_cloud as an affine map applied to points-as-rows.
Matrix denormalize_points(const Eigen::Ref<const Matrix>& pts, const Vector& centroid, double rms);

// Lifts a transform solved between two normalized clouds back to the original
// data frame, so that scene ~ T(model) holds for the raw inputs.
SimilarityTransform denormalize_transform(const SimilarityTransform& t,
                                          const Vector& model_centroid, double model_rms,
                                          const Vector& scene_centroid, double scene_rms);

}  // namespace simmatch

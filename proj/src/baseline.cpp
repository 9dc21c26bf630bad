#include "simmatch/baseline.hpp"

#include "simmatch/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace simmatch {

namespace {

double transform_delta(const SimilarityTransform& a, const SimilarityTransform& b) {
    return std::abs(a.scale - b.scale) + (a.rotation - b.rotation).norm() +
           (a.translation - b.translation).norm();
}

}  // namespace

MatchResult icp_baseline(const PointCloud& model, const PointCloud& scene,
                         const MatchConfig& config, const IcpParams& params) {
    config.validate();
    if (params.max_iters < 1 || !(params.rejection_factor > 0.0)) {
        throw std::invalid_argument("bad ICP parameters");
    }
    if (model.dim() != scene.dim()) {
        throw std::invalid_argument("model and scene dimensions differ");
    }
    const Index d = model.dim();

    Vector model_centroid = Vector::Zero(d);
    Vector scene_centroid = Vector::Zero(d);
    double model_rms = 1.0;
    double scene_rms = 1.0;
    PointCloud model_solv = model;
    PointCloud scene_solv = scene;
    if (config.normalize) {
        NormalizedCloud nm = normalize_cloud(model);
        NormalizedCloud ns = normalize_cloud(scene);
        model_solv = std::move(nm.cloud);
        scene_solv = std::move(ns.cloud);
        model_centroid = std::move(nm.centroid);
        scene_centroid = std::move(ns.centroid);
        model_rms = nm.rms;
        scene_rms = ns.rms;
    }

    const PairOperators ops(model_solv, scene_solv);
    const Index m = ops.m();
    const Index n = ops.n();
    const Matrix& xs = ops.X();
    const Matrix& ys = ops.Y();

    SimilarityTransform t = SimilarityTransform::identity(d);
    std::vector<std::pair<Index, Index>> pairs;

    for (int iter = 0; iter < params.max_iters; ++iter) {
        const Matrix moved = t.apply(xs);

        // Brute-force nearest scene point per model point; ties keep the
        // lowest index.
        std::vector<Index> nearest(static_cast<std::size_t>(m), 0);
        Vector dist(m);
        for (Index i = 0; i < m; ++i) {
            double best = std::numeric_limits<double>::infinity();
            Index best_j = 0;
            for (Index j = 0; j < n; ++j) {
                const double dd = (moved.row(i) - ys.row(j)).squaredNorm();
                if (dd < best) {
                    best = dd;
                    best_j = j;
                }
            }
            nearest[static_cast<std::size_t>(i)] = best_j;
            dist[i] = std::sqrt(best);
        }

        Vector sorted = dist;
        std::sort(sorted.data(), sorted.data() + sorted.size());
        const double median = sorted[sorted.size() / 2];
        const double cutoff = median > 0.0 ? params.rejection_factor * median
                                           : std::numeric_limits<double>::infinity();

        // Accept pairs within the cutoff, keeping only the closest model
        // point per scene point so the correspondence stays injective.
        std::vector<Index> owner(static_cast<std::size_t>(n), -1);
        for (Index i = 0; i < m; ++i) {
            if (dist[i] > cutoff) continue;
            const Index j = nearest[static_cast<std::size_t>(i)];
            Index& cur = owner[static_cast<std::size_t>(j)];
            if (cur < 0 || dist[i] < dist[cur]) cur = i;
        }
        pairs.clear();
        for (Index j = 0; j < n; ++j) {
            const Index i = owner[static_cast<std::size_t>(j)];
            if (i >= 0) pairs.emplace_back(i, j);
        }
        std::sort(pairs.begin(), pairs.end());
        if (pairs.empty()) break;

        const MatchVector p = MatchVector::from_pairs(m, n, pairs);
        const RotationScaleSolution sol = solve_scale_rotation(p, ops, config);
        SimilarityTransform next;
        next.scale = sol.scale;
        next.rotation = sol.rotation;
        next.translation = optimal_translation(p, sol.scale, sol.rotation, ops, config.denom_guard);
        const double delta = transform_delta(next, t);
        t = std::move(next);
        if (delta < params.convergence_tol) break;
    }

    MatchResult result;
    result.matches = pairs;
    result.vertex = MatchVector::from_pairs(m, n, pairs);
    result.objective = envelope_value(result.vertex, ops, config);
    result.warning_empty = pairs.empty();
    if (pairs.empty()) {
        result.transform = SimilarityTransform::identity(d);
    } else {
        result.transform = config.normalize
                               ? denormalize_transform(t, model_centroid, model_rms,
                                                       scene_centroid, scene_rms)
                               : t;
    }
    return result;
}

}  // namespace simmatch

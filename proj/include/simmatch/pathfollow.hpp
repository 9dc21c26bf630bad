#pragma once

#include "simmatch/objective.hpp"
#include "simmatch/polytope.hpp"
#include "simmatch/types.hpp"

namespace simmatch {

// Snapshot of one homotopy step of the blended objective
// (1 - lambda) ||p||^2 + lambda * envelope_value(p).
struct PathState {
    double lambda = 0.0;
    MatchVector p;
    double value = 0.0;  // blended objective at p
    double gap = 0.0;    // last Frank-Wolfe duality gap
    int iters = 0;
    bool pinned = false;  // no admissible step kept the match mass above the guard
};

struct MatchResult {
    std::vector<std::pair<Index, Index>> matches;
    MatchVector vertex;            // final integral matching
    SimilarityTransform transform; // in the original data frame
    double objective = 0.0;        // envelope value at the final vertex (solver frame)
    std::vector<PathState> path_trace;
    bool warning_empty = false;    // solver ended with no matches at all
};

// (1 - lambda) ||p||^2 + lambda * envelope_value(p).
double homotopy_value(const MatchVector& p, double lambda, const PairOperators& ops,
                      const MatchConfig& config);

// Evaluator for the blended objective restricted to the segment p + g * dir.
// Every envelope ingredient (mass, moments, the d x d cross matrix) is linear
// in the match vector, so after one O(m n d) sweep per endpoint a sample
// along the segment costs only the d x d rotation/scale solve. Line searches
// use this instead of re-deriving the ingredients from scratch per sample.
class HomotopySegment {
public:
    HomotopySegment(const MatchVector& p, const Vector& dir, double lambda,
                    const PairOperators& ops, const MatchConfig& config);

    double operator()(double gamma) const;

private:
    double lambda_;
    const MatchConfig& config_;
    double sigma_p_, sigma_d_;
    double model_sq_p_, model_sq_d_;
    double scene_sq_p_, scene_sq_d_;
    double p_dot_p_, p_dot_d_, d_dot_d_;
    Matrix cross_p_, cross_d_;
    Vector mm_p_, mm_d_;
    Vector sm_p_, sm_d_;
};

// Local minimization of the blended objective over the matching polytope by
// Frank-Wolfe: linearize, call the assignment oracle for a descent vertex,
// then take the best step on the segment toward it (golden-section refinement
// with the endpoints always candidates; the step range is capped so the match
// mass stays above the denominator guard). Stops when the duality gap drops
// below fw_tol * (1 + |value|) or after fw_max_iters iterations. The value
// sequence is non-increasing.
//
// A non-null `seed_rotation` linearizes through the majorant at (unit scale,
// that rotation) instead of the exact envelope minimizer; steps are still
// accepted only when they lower the true blended objective.
PathState frank_wolfe_minimize(const MatchVector& p0, double lambda, const PairOperators& ops,
                               const MatchConfig& config, const Matrix* seed_rotation = nullptr);

// Full pipeline: optional normalization of both clouds, then one homotopy
// path per principal-frame alignment hypothesis (the hypotheses only steer
// the first few steps, where the cross matrix is too weak to pick an
// alignment basin), each sweeping lambda from near 0 to 1 with warm starts,
// vertex rounding plus a final refinement at lambda = 1. The path whose final
// vertex has the lowest envelope value wins; its closed-form transform fit is
// lifted back to the data frame.
MatchResult match(const PointCloud& model, const PointCloud& scene, const MatchConfig& config);

}  // namespace simmatch

#pragma once

#include "simmatch/pathfollow.hpp"
#include "simmatch/types.hpp"

namespace simmatch {

struct IcpParams {
    int max_iters = 50;
    double rejection_factor = 2.0;   // pairs beyond this multiple of the median distance are dropped
    double convergence_tol = 1e-7;   // on the transform change between iterations
};

// Classic iterative-closest-point with a similarity fit: alternate brute-force
// nearest-neighbor correspondence (deduplicated so each scene point keeps only
// its closest model point), median-based pair rejection, and the closed-form
// scale/rotation/translation solve. Sanity baseline only; shares the matching
// result type with the main solver.
MatchResult icp_baseline(const PointCloud& model, const PointCloud& scene,
                         const MatchConfig& config, const IcpParams& params = {});

}  // namespace simmatch

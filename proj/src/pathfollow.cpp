#include "simmatch/pathfollow.hpp"

#include <algorithm>
#include <cmath>

namespace simmatch {

namespace {

constexpr double kLambda0 = 0.01;
constexpr int kLineSearchBudget = 40;  // objective evaluations per line search

struct LineSearchResult {
    double gamma = 0.0;
    double value = 0.0;
};

double blended_value(const Vector& values, Index m, Index n, double lambda,
                     const PairOperators& ops, const MatchConfig& config) {
    return (1.0 - lambda) * values.squaredNorm() +
           lambda * envelope_value(MatchVector(values, m, n), ops, config);
}

// Best step on [0, gamma_max] for the 1-D restriction h. The restriction is a
// convex quadratic plus a concave part, so it can have interior and boundary
// minima; a coarse scan locates the basin, golden-section refines it, and the
// best sample seen wins. Evaluation count stays within kLineSearchBudget.
LineSearchResult line_search(const HomotopySegment& h, double gamma_max) {
    constexpr int kCoarse = 9;
    double best_g = 0.0;
    double best_v = h(0.0);
    int evals = 1;

    double coarse_g[kCoarse];
    double coarse_v[kCoarse];
    coarse_g[0] = 0.0;
    coarse_v[0] = best_v;
    for (int k = 1; k < kCoarse; ++k) {
        coarse_g[k] = gamma_max * static_cast<double>(k) / (kCoarse - 1);
        coarse_v[k] = h(coarse_g[k]);
        ++evals;
        if (coarse_v[k] < best_v) {
            best_v = coarse_v[k];
            best_g = coarse_g[k];
        }
    }

    // Bracket around the best coarse sample.
    int k_best = 0;
    for (int k = 1; k < kCoarse; ++k) {
        if (coarse_v[k] < coarse_v[k_best]) k_best = k;
    }
    double lo = coarse_g[std::max(0, k_best - 1)];
    double hi = coarse_g[std::min(kCoarse - 1, k_best + 1)];

    constexpr double kInvPhi = 0.6180339887498949;
    double c = hi - kInvPhi * (hi - lo);
    double d = lo + kInvPhi * (hi - lo);
    double fc = h(c);
    double fd = h(d);
    evals += 2;
    if (fc < best_v) { best_v = fc; best_g = c; }
    if (fd < best_v) { best_v = fd; best_g = d; }
    while (evals < kLineSearchBudget && (hi - lo) > 1e-6 * std::max(1.0, gamma_max)) {
        if (fc < fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - kInvPhi * (hi - lo);
            fc = h(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + kInvPhi * (hi - lo);
            fd = h(d);
        }
        ++evals;
        if (fc < best_v) { best_v = fc; best_g = c; }
        if (fd < best_v) { best_v = fd; best_g = d; }
    }
    return {best_g, best_v};
}

}  // namespace

double homotopy_value(const MatchVector& p, double lambda, const PairOperators& ops,
                      const MatchConfig& config) {
    return blended_value(p.values, p.m, p.n, lambda, ops, config);
}

HomotopySegment::HomotopySegment(const MatchVector& p, const Vector& dir, double lambda,
                                 const PairOperators& ops, const MatchConfig& config)
    : lambda_(lambda),
      config_(config),
      sigma_p_(ops.mass(p.values)),
      sigma_d_(ops.mass(dir)),
      model_sq_p_(ops.model_sq_moment(p.values)),
      model_sq_d_(ops.model_sq_moment(dir)),
      scene_sq_p_(ops.scene_sq_moment(p.values)),
      scene_sq_d_(ops.scene_sq_moment(dir)),
      p_dot_p_(p.values.squaredNorm()),
      p_dot_d_(p.values.dot(dir)),
      d_dot_d_(dir.squaredNorm()),
      cross_p_(ops.cross_matrix(p.values)),
      cross_d_(ops.cross_matrix(dir)),
      mm_p_(ops.model_moment(p.values)),
      mm_d_(ops.model_moment(dir)),
      sm_p_(ops.scene_moment(p.values)),
      sm_d_(ops.scene_moment(dir)) {}

double HomotopySegment::operator()(double gamma) const {
    const double quad = p_dot_p_ + 2.0 * gamma * p_dot_d_ + gamma * gamma * d_dot_d_;
    const double sigma = sigma_p_ + gamma * sigma_d_;
    double env = 0.0;
    if (sigma > config_.denom_guard) {
        const Vector mm = mm_p_ + gamma * mm_d_;
        const Vector sm = sm_p_ + gamma * sm_d_;
        const Matrix cross = (cross_p_ + gamma * cross_d_) - mm * sm.transpose() / sigma;
        const double trace_value = optimal_rotation(cross).second;
        const double curvature = (model_sq_p_ + gamma * model_sq_d_) - mm.squaredNorm() / sigma;
        const double scale = optimal_scale(curvature, trace_value, config_.s_lo, config_.s_hi);
        env = (scene_sq_p_ + gamma * scene_sq_d_) - config_.mu * sigma -
              sm.squaredNorm() / sigma + curvature * scale * scale - 2.0 * trace_value * scale;
    }
    return (1.0 - lambda_) * quad + lambda_ * env;
}

PathState frank_wolfe_minimize(const MatchVector& p0, double lambda, const PairOperators& ops,
                               const MatchConfig& config, const Matrix* seed_rotation) {
    const Index m = p0.m;
    const Index n = p0.n;
    if (!(ops.mass(p0.values) > config.denom_guard)) {
        throw EmptyMatching("empty matching: start point has no mass");
    }
    const double seed_scale = std::clamp(1.0, config.s_lo, config.s_hi);

    PathState st;
    st.lambda = lambda;
    st.p = p0;
    st.value = homotopy_value(st.p, lambda, ops, config);

    int stalled = 0;
    for (int iter = 0; iter < config.fw_max_iters; ++iter) {
        st.iters = iter + 1;
        const Vector env_grad =
            seed_rotation ? envelope_gradient_at(st.p, ops, config, seed_scale, *seed_rotation)
                          : envelope_gradient(st.p, ops, config);
        const Vector grad = 2.0 * (1.0 - lambda) * st.p.values + lambda * env_grad;
        const AssignmentOracleResult target = lp_oracle(grad, m, n);
        st.gap = grad.dot(st.p.values - target.vertex.values);
        if (st.gap < config.fw_tol * (1.0 + std::abs(st.value))) {
            break;
        }

        const Vector dir = target.vertex.values - st.p.values;
        const double mass_p = st.p.total();
        const double mass_q = target.vertex.total();

        // At the concave endpoint the envelope is positively homogeneous, so
        // when the oracle proposes the empty vertex and the current value is
        // positive, shrinking all the way to zero is the exact optimum of the
        // restriction. Land there instead of crawling against the mass guard.
        if (lambda == 1.0 && mass_q == 0.0 && st.value > 0.0) {
            st.p.values.setZero();
            st.value = 0.0;
            st.gap = 0.0;
            break;
        }

        double gamma_max = 1.0;
        if (mass_q < mass_p) {
            // Keep the match mass strictly above the guard along the segment.
            gamma_max = std::min(1.0, (mass_p - 2.0 * config.denom_guard) / (mass_p - mass_q));
        }
        if (!(gamma_max > 0.0)) {
            st.pinned = true;
            break;
        }

        const HomotopySegment restriction(st.p, dir, lambda, ops, config);
        const LineSearchResult ls = line_search(restriction, gamma_max);
        if (ls.gamma <= 0.0 || !(ls.value < st.value)) {
            break;  // no improving step along this direction
        }
        if (ls.gamma == 1.0) {
            st.p.values = target.vertex.values;  // land exactly on the vertex
        } else {
            st.p.values += ls.gamma * dir;
        }
        const double prev = st.value;
        st.value = blended_value(st.p.values, m, n, lambda, ops, config);

        // Plain Frank-Wolfe closes its duality gap only sublinearly, so the
        // gap test alone can leave the loop grinding out negligible steps
        // until the iteration cap. Stop once actual progress has stalled.
        if (prev - st.value < 0.01 * config.fw_tol * (1.0 + std::abs(st.value))) {
            if (++stalled >= 2) break;
        } else {
            stalled = 0;
        }
    }
    return st;
}

namespace {

// Alignment-hypothesis seeding applies while lambda is at or below this
// value; beyond it the cross matrix has enough signal and every path switches
// to the exact linearization.
constexpr double kSeedLambdaMax = 0.2;

std::vector<double> lambda_schedule(double step) {
    std::vector<double> out;
    for (int k = 0;; ++k) {
        const double l = kLambda0 + step * k;
        if (l >= 1.0 - 1e-12) break;
        out.push_back(l);
    }
    out.push_back(1.0);
    return out;
}

struct PathOutcome {
    MatchVector vertex;
    double value = 0.0;  // envelope at the final vertex
    std::vector<PathState> trace;
};

// Continues a warm-started path over the remaining lambda schedule, then
// discretizes and lets the concave endpoint polish the vertex choice.
PathOutcome finish_path(MatchVector p, std::vector<PathState> trace,
                        const std::vector<double>& lambdas, std::size_t from,
                        const PairOperators& ops, const MatchConfig& config) {
    PathOutcome out;
    out.trace = std::move(trace);
    for (std::size_t k = from; k < lambdas.size(); ++k) {
        PathState st = frank_wolfe_minimize(p, lambdas[k], ops, config);
        p = st.p;
        out.trace.push_back(std::move(st));
    }

    AssignmentOracleResult rounded = round_to_vertex(p);
    p = rounded.vertex;
    if (!p.matched_pairs().empty()) {
        PathState st = frank_wolfe_minimize(p, 1.0, ops, config);
        p = st.p;
        out.trace.push_back(std::move(st));
        if (!p.is_vertex()) {
            p = round_to_vertex(p).vertex;
        }
    }
    out.vertex = std::move(p);
    out.value = envelope_value(out.vertex, ops, config);
    return out;
}

}  // namespace

MatchResult match(const PointCloud& model, const PointCloud& scene, const MatchConfig& config) {
    config.validate();
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
    const std::vector<double> lambdas = lambda_schedule(config.lambda_step);
    std::size_t n_seeded = 0;
    while (n_seeded < lambdas.size() && lambdas[n_seeded] <= kSeedLambdaMax) ++n_seeded;

    // One candidate path per alignment hypothesis plus an unseeded one,
    // advanced through the seeding window only; the two most promising
    // continue to lambda = 1. Ties resolve to the earliest path so reruns are
    // bit-identical.
    std::vector<Matrix> hypotheses = principal_alignment_rotations(model_solv, scene_solv);
    for (std::size_t a = 0; a < hypotheses.size(); ++a) {
        for (std::size_t b = hypotheses.size(); b-- > a + 1;) {
            if ((hypotheses[a] - hypotheses[b]).norm() < 1e-6) {
                hypotheses.erase(hypotheses.begin() + static_cast<std::ptrdiff_t>(b));
            }
        }
    }

    struct Candidate {
        MatchVector p;
        std::vector<PathState> trace;
        double value = 0.0;
    };
    std::vector<Candidate> candidates;
    for (std::size_t h = 0; h <= hypotheses.size(); ++h) {
        const Matrix* seed = h == 0 ? nullptr : &hypotheses[h - 1];
        Candidate cand;
        cand.p = MatchVector::uniform(ops.m(), ops.n());
        for (std::size_t k = 0; k < n_seeded; ++k) {
            PathState st = frank_wolfe_minimize(cand.p, lambdas[k], ops, config, seed);
            cand.p = st.p;
            cand.value = st.value;
            cand.trace.push_back(std::move(st));
        }
        candidates.push_back(std::move(cand));
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.value < b.value; });
    const std::size_t keep = std::min<std::size_t>(2, candidates.size());

    PathOutcome best;
    bool have_best = false;
    for (std::size_t c = 0; c < keep; ++c) {
        PathOutcome out = finish_path(std::move(candidates[c].p), std::move(candidates[c].trace),
                                      lambdas, n_seeded, ops, config);
        if (!have_best || out.value < best.value) {
            best = std::move(out);
            have_best = true;
        }
    }

    MatchResult result;
    const MatchVector& p = best.vertex;
    result.path_trace = std::move(best.trace);
    result.vertex = p;
    result.matches = p.matched_pairs();
    result.objective = best.value;
    if (result.matches.empty()) {
        result.warning_empty = true;
        result.transform = SimilarityTransform::identity(d);
        return result;
    }

    const RotationScaleSolution sol = solve_scale_rotation(p, ops, config);
    SimilarityTransform fitted;
    fitted.scale = sol.scale;
    fitted.rotation = sol.rotation;
    fitted.translation = optimal_translation(p, sol.scale, sol.rotation, ops, config.denom_guard);
    result.transform = config.normalize
                           ? denormalize_transform(fitted, model_centroid, model_rms,
                                                   scene_centroid, scene_rms)
                           : fitted;
    return result;
}

}  // namespace simmatch

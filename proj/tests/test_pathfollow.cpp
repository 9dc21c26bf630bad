#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "simmatch/pathfollow.hpp"
#include "simmatch/polytope.hpp"
#include "simmatch/rng.hpp"
#include "simmatch/synthbench.hpp"
#include "test_util.hpp"

using namespace simmatch;
using testutil::random_cloud;
using testutil::random_interior;

namespace {

PointCloud similarity_image(const PointCloud& base, double s, const Matrix& r, const Vector& t) {
    SimilarityTransform tr;
    tr.scale = s;
    tr.rotation = r;
    tr.translation = t;
    return PointCloud(Matrix(tr.apply(base.points())));
}

}  // namespace

TEST_CASE("homotopy value endpoints") {
    RngStream rng(20);
    MatchConfig cfg;
    const Index m = 4;
    const PairOperators ops{random_cloud(rng, m, 3), random_cloud(rng, m, 3)};

    const MatchVector p = random_interior(rng, m, m);
    CHECK(homotopy_value(p, 0.0, ops, cfg) == doctest::Approx(p.values.squaredNorm()));
    CHECK(homotopy_value(p, 1.0, ops, cfg) ==
          doctest::Approx(envelope_value(p, ops, cfg)));
    CHECK(homotopy_value(p, 0.5, ops, cfg) ==
          doctest::Approx(0.5 * p.values.squaredNorm() + 0.5 * envelope_value(p, ops, cfg)));

    // Perfect-match vertex at lambda = 1 scores -mu per matched pair.
    const PointCloud xc = random_cloud(rng, m, 3);
    const PairOperators self_ops(xc, xc);
    std::vector<std::pair<Index, Index>> ident;
    for (Index i = 0; i < m; ++i) ident.emplace_back(i, i);
    CHECK(homotopy_value(MatchVector::from_pairs(m, m, ident), 1.0, self_ops, cfg) ==
          doctest::Approx(-cfg.mu * m));
}

TEST_CASE("segment evaluator agrees with direct evaluation") {
    RngStream rng(35);
    MatchConfig cfg;
    const Index m = 5, n = 6;
    const PairOperators ops{random_cloud(rng, m, 3), random_cloud(rng, n, 3)};
    for (int rep = 0; rep < 20; ++rep) {
        const MatchVector p = random_interior(rng, m, n);
        const MatchVector q = random_interior(rng, m, n);
        const Vector dir = q.values - p.values;
        const double lambda = rng.uniform(0.0, 1.0);
        const HomotopySegment seg(p, dir, lambda, ops, cfg);
        for (double gamma : {0.0, 0.2, 0.5, 0.9, 1.0}) {
            const MatchVector blend{Vector(p.values + gamma * dir), m, n};
            CHECK(seg(gamma) ==
                  doctest::Approx(homotopy_value(blend, lambda, ops, cfg)).epsilon(1e-12));
        }
    }
}

TEST_CASE("frank-wolfe at lambda 0 decreases the norm") {
    RngStream rng(21);
    MatchConfig cfg;
    const Index m = 4;
    const PairOperators ops{random_cloud(rng, m, 3), random_cloud(rng, m, 3)};
    const MatchVector p0 = MatchVector::uniform(m, m);
    const PathState st = frank_wolfe_minimize(p0, 0.0, ops, cfg);
    CHECK(st.value <= p0.values.squaredNorm() + 1e-12);
    CHECK(is_feasible(st.p));
}

TEST_CASE("frank-wolfe at lambda 1 lands on a vertex") {
    RngStream rng(22);
    MatchConfig cfg;
    const Index m = 4;
    // Clean instance: scene is a similarity image of the model.
    const PointCloud xc = random_cloud(rng, m, 3);
    const PointCloud yc = similarity_image(xc, 1.1, testutil::random_rotation_full(rng, 3),
                                           Vector::Random(3));
    const PairOperators ops(xc, yc);

    for (int rep = 0; rep < 20; ++rep) {
        const MatchVector p0 = random_interior(rng, m, m);
        const PathState st = frank_wolfe_minimize(p0, 1.0, ops, cfg);
        CHECK(st.p.is_vertex());
        CHECK(is_feasible(st.p));
        CHECK(st.value <= envelope_value(p0, ops, cfg) + 1e-9);

        // The terminal value can be no better than the exhaustive optimum.
        double best = 0.0;
        testutil::for_each_partial_matching(m, m, [&](const auto& pairs) {
            best = std::min(best,
                            envelope_value(MatchVector::from_pairs(m, m, pairs), ops, cfg));
        });
        CHECK(st.value >= best - 1e-9);
    }
}

TEST_CASE("frank-wolfe trace invariants") {
    RngStream rng(23);
    MatchConfig cfg;
    const Index m = 5;
    const PairOperators ops{random_cloud(rng, m, 3), random_cloud(rng, m, 3)};
    for (const double lambda : {0.05, 0.4, 0.8}) {
        const MatchVector p0 = random_interior(rng, m, m);
        const double start = homotopy_value(p0, lambda, ops, cfg);
        const PathState st = frank_wolfe_minimize(p0, lambda, ops, cfg);
        CHECK(st.value <= start + 1e-9);  // non-increasing within the step
        CHECK(is_feasible(st.p));
        const bool converged = st.gap < cfg.fw_tol * (1.0 + std::abs(st.value));
        CHECK((converged || st.iters == cfg.fw_max_iters || st.pinned));
        if (converged) CHECK(st.gap >= -1e-9);
    }
}

TEST_CASE("frank-wolfe pins when the guard blocks every step") {
    RngStream rng(36);
    MatchConfig cfg;
    cfg.normalize = false;
    const Index m = 3;
    const PointCloud xc = random_cloud(rng, m, 3);
    // Scene far out of reach of the bounded scale: every pair cost is
    // positive, so the only descent direction is toward the empty matching.
    const PointCloud yc{Matrix(100.0 * xc.points() + Matrix::Constant(m, 3, 500.0))};
    const PairOperators ops(xc, yc);

    MatchVector p = MatchVector::uniform(m, m);
    p.values *= 1.5 * cfg.denom_guard / p.total();  // barely above the guard
    const PathState st = frank_wolfe_minimize(p, 0.5, ops, cfg);
    CHECK(st.pinned);
    CHECK(st.p.values == p.values);  // returned unchanged
}

TEST_CASE("match recovers an exact similarity instance") {
    RngStream rng(24);
    const Index m = 20;
    const PointCloud model = random_cloud(rng, m, 3);
    const Matrix r0 = random_rotation_bounded(rng, 3, 45.0 * M_PI / 180.0);
    Vector t0(3);
    for (int c = 0; c < 3; ++c) t0[c] = rng.uniform(-1.0, 1.0);
    const PointCloud scene = similarity_image(model, 1.3, r0, t0);

    const MatchConfig cfg;
    const MatchResult res = match(model, scene, cfg);
    REQUIRE(res.matches.size() == static_cast<std::size_t>(m));
    for (const auto& [i, j] : res.matches) CHECK(i == j);
    CHECK(res.transform.scale == doctest::Approx(1.3).epsilon(1e-3));
    CHECK((res.transform.rotation - r0).norm() < 1e-3);
    CHECK((res.transform.translation - t0).norm() < 1e-3);
    CHECK(res.vertex.is_vertex());
    CHECK(res.objective == doctest::Approx(-cfg.mu * m).epsilon(1e-6));
}

TEST_CASE("match on identical clouds is the identity") {
    RngStream rng(25);
    const Index m = 10;
    const PointCloud model = random_cloud(rng, m, 3);
    const MatchResult res = match(model, model, MatchConfig{});
    REQUIRE(res.matches.size() == static_cast<std::size_t>(m));
    for (const auto& [i, j] : res.matches) CHECK(i == j);
    CHECK(res.transform.scale == doctest::Approx(1.0).epsilon(1e-6));
    CHECK((res.transform.rotation - Matrix::Identity(3, 3)).norm() < 1e-6);
    CHECK(res.transform.translation.norm() < 1e-6);
}

TEST_CASE("match trace is feasible and per-step monotone") {
    RngStream rng(26);
    const Index m = 8;
    const PointCloud model = random_cloud(rng, m, 3);
    const PointCloud scene = similarity_image(model, 0.8, testutil::random_rotation_full(rng, 3),
                                              Vector::Random(3));
    MatchConfig cfg;
    const MatchResult res = match(model, scene, cfg);
    CHECK(!res.path_trace.empty());
    for (const auto& st : res.path_trace) {
        CHECK(is_feasible(st.p));
    }
    CHECK(res.vertex.is_vertex());

    // Warm-started monotonicity: each step leaves its own blended objective
    // no higher than at its warm start (the refinement entry restarts from a
    // rounded vertex, so only schedule-advancing pairs are comparable).
    const NormalizedCloud nm = normalize_cloud(model);
    const NormalizedCloud ns = normalize_cloud(scene);
    const PairOperators ops(nm.cloud, ns.cloud);
    for (std::size_t k = 1; k < res.path_trace.size(); ++k) {
        const auto& prev = res.path_trace[k - 1];
        const auto& cur = res.path_trace[k];
        if (cur.lambda <= prev.lambda) continue;
        CHECK(cur.value <= homotopy_value(prev.p, cur.lambda, ops, cfg) + 1e-9);
    }
}

TEST_CASE("match is deterministic") {
    RngStream rng(27);
    const PointCloud model = random_cloud(rng, 9, 3);
    const PointCloud scene = random_cloud(rng, 11, 3);
    const MatchResult a = match(model, scene, MatchConfig{});
    const MatchResult b = match(model, scene, MatchConfig{});
    CHECK(a.matches == b.matches);
    CHECK(a.vertex.values == b.vertex.values);
    CHECK(a.objective == b.objective);
    CHECK(a.transform.scale == b.transform.scale);
    CHECK(a.transform.rotation == b.transform.rotation);
    CHECK(a.transform.translation == b.transform.translation);
}

TEST_CASE("match propagates dimension and degeneracy errors") {
    RngStream rng(28);
    const PointCloud m3 = random_cloud(rng, 5, 3);
    const PointCloud m2 = random_cloud(rng, 5, 2);
    CHECK_THROWS_AS(match(m3, m2, MatchConfig{}), std::invalid_argument);

    Matrix same(4, 3);
    same.setOnes();
    CHECK_THROWS_AS(match(PointCloud(same), m3, MatchConfig{}), DegenerateCloud);
}

TEST_CASE("2d matching works end to end") {
    RngStream rng(29);
    const Index m = 15;
    const PointCloud model = random_cloud(rng, m, 2);
    const Matrix r0 = random_rotation_bounded(rng, 2, 60.0 * M_PI / 180.0);
    const PointCloud scene = similarity_image(model, 0.7, r0, Vector::Random(2));
    const MatchResult res = match(model, scene, MatchConfig{});
    REQUIRE(res.matches.size() == static_cast<std::size_t>(m));
    for (const auto& [i, j] : res.matches) CHECK(i == j);
    CHECK(res.transform.scale == doctest::Approx(0.7).epsilon(1e-3));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "simmatch/polytope.hpp"
#include "simmatch/rng.hpp"
#include "test_util.hpp"

using namespace simmatch;

namespace {

// Exhaustive linear minimization over every partial permutation matrix.
double brute_force_min(const Vector& g, Index m, Index n) {
    double best = 0.0;  // the empty matching
    testutil::for_each_partial_matching(m, n, [&](const auto& pairs) {
        double v = 0.0;
        for (const auto& [i, j] : pairs) v += g[i * n + j];
        if (v < best) best = v;
    });
    return best;
}

}  // namespace

TEST_CASE("partial matching counts") {
    CHECK(testutil::count_partial_matchings(4, 4) == 209);
    CHECK(testutil::count_partial_matchings(3, 5) == 136);
}

TEST_CASE("oracle on trivial costs") {
    SUBCASE("all positive: empty matching") {
        Vector g = Vector::Constant(9, 1.0);
        const auto r = lp_oracle(g, 3, 3);
        CHECK(r.objective == 0.0);
        CHECK(r.matched_pairs.empty());
        CHECK(r.vertex.total() == 0.0);
    }
    SUBCASE("single profitable edge") {
        Vector g = Vector::Constant(9, 1.0);
        g[0] = -1.0;  // entry (0, 0)
        const auto r = lp_oracle(g, 3, 3);
        CHECK(r.objective == -1.0);
        CHECK(r.matched_pairs == std::vector<std::pair<Index, Index>>{{0, 0}});
    }
}

TEST_CASE("oracle equals exhaustive enumeration") {
    RngStream rng(100);
    for (const auto& [m, n] : std::vector<std::pair<Index, Index>>{{4, 4}, {3, 5}, {5, 3}, {6, 6}}) {
        for (int trial = 0; trial < 200; ++trial) {
            Vector g(m * n);
            for (Index k = 0; k < g.size(); ++k) g[k] = rng.uniform(-1.0, 1.0);
            const auto r = lp_oracle(g, m, n);
            CHECK(r.vertex.is_vertex());
            CHECK(r.objective == doctest::Approx(g.dot(r.vertex.values)).epsilon(1e-12));
            CHECK(r.objective <= brute_force_min(g, m, n) + 1e-9);
        }
    }
}

TEST_CASE("oracle lower-bounds feasible points") {
    RngStream rng(200);
    const Index m = 5, n = 4;
    for (int trial = 0; trial < 100; ++trial) {
        Vector g(m * n);
        for (Index k = 0; k < g.size(); ++k) g[k] = rng.uniform(-2.0, 2.0);
        const auto r = lp_oracle(g, m, n);
        const MatchVector p = testutil::random_interior(rng, m, n);
        CHECK(r.objective <= g.dot(p.values) + 1e-9);
    }
}

TEST_CASE("shifting costs up cannot add matches") {
    RngStream rng(300);
    const Index m = 5, n = 5;
    for (int trial = 0; trial < 100; ++trial) {
        Vector g(m * n);
        for (Index k = 0; k < g.size(); ++k) g[k] = rng.uniform(-1.0, 1.0);
        const auto before = lp_oracle(g, m, n);
        const auto after = lp_oracle(g.array() + rng.uniform(0.05, 0.5), m, n);
        CHECK(after.matched_pairs.size() <= before.matched_pairs.size());
    }
}

TEST_CASE("feasibility predicate") {
    CHECK(is_feasible(MatchVector::from_pairs(3, 3, {{0, 0}, {1, 1}, {2, 2}})));
    CHECK(is_feasible(MatchVector::uniform(4, 7)));
    CHECK(is_feasible(MatchVector::uniform(7, 4)));

    MatchVector bad = MatchVector::zero(2, 2);
    bad.values << 0.9, 0.6, 0.0, 0.0;  // row 0 sums to 1.5
    CHECK_FALSE(is_feasible(bad));

    MatchVector neg = MatchVector::zero(2, 2);
    neg.values[0] = -0.1;
    CHECK_FALSE(is_feasible(neg));
}

TEST_CASE("rounding is idempotent on vertices") {
    RngStream rng(400);
    for (int trial = 0; trial < 50; ++trial) {
        const Index m = 3 + static_cast<Index>(rng.below(4));
        const Index n = 3 + static_cast<Index>(rng.below(4));
        // Random partial permutation.
        std::vector<std::pair<Index, Index>> pairs;
        std::vector<char> used(static_cast<std::size_t>(n), 0);
        for (Index i = 0; i < m; ++i) {
            if (rng.uniform() < 0.4) continue;
            const Index j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
            if (used[static_cast<std::size_t>(j)]) continue;
            used[static_cast<std::size_t>(j)] = 1;
            pairs.emplace_back(i, j);
        }
        const MatchVector v = MatchVector::from_pairs(m, n, pairs);
        const auto r = round_to_vertex(v);
        CHECK(r.vertex.values == v.values);
    }
}

TEST_CASE("rounding picks the dominant vertex") {
    // Two full permutations with disjoint supports: any mixture of their
    // cells collides on a row or column, so the oracle must commit to one,
    // and the heavier one wins.
    const MatchVector v1 = MatchVector::from_pairs(4, 4, {{0, 0}, {1, 1}, {2, 2}, {3, 3}});
    const MatchVector v2 = MatchVector::from_pairs(4, 4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
    MatchVector blend = MatchVector::zero(4, 4);
    blend.values = 0.6 * v1.values + 0.4 * v2.values;
    const auto r = round_to_vertex(blend);
    CHECK(r.vertex.values == v1.values);

    // Complementary-weight blend rounds to the other vertex.
    blend.values = 0.4 * v1.values + 0.6 * v2.values;
    CHECK(round_to_vertex(blend).vertex.values == v2.values);
}

TEST_CASE("rounding uniform gives a full permutation") {
    const auto r = round_to_vertex(MatchVector::uniform(4, 4));
    CHECK(r.vertex.is_vertex());
    CHECK(r.matched_pairs.size() == 4);
    // Deterministic: run twice, same vertex.
    const auto r2 = round_to_vertex(MatchVector::uniform(4, 4));
    CHECK(r.vertex.values == r2.vertex.values);
}

#include <doctest.h>

#include <array>
#include <cmath>
#include <set>
#include <vector>

#include "helpers.hpp"
#include "sepsim/test_function.hpp"
#include "sepsim/torus.hpp"

using namespace sepsim;

TEST_CASE("torus construction and neighbours") {
    const TorusGeometry g(1, 4);
    CHECK(g.site_count() == 4);
    std::array<double, 1> pos{};
    g.position(g.neighbour(0, 0, 0), pos);
    CHECK(pos[0] == doctest::Approx(0.25));
    g.position(g.neighbour(0, 0, 1), pos);
    CHECK(pos[0] == doctest::Approx(0.75));

    const TorusGeometry g2(2, 3);
    CHECK(g2.site_count() == 9);
    for (Site s = 0; s < g2.site_count(); ++s) {
        std::set<Site> nbrs;
        for (int axis = 0; axis < 2; ++axis)
            for (int sign = 0; sign < 2; ++sign) nbrs.insert(g2.neighbour(s, axis, sign));
        CHECK(nbrs.size() == 4);
        std::set<Site> positive;
        for (int axis = 0; axis < 2; ++axis) positive.insert(g2.neighbour(s, axis, 0));
        CHECK(positive.size() == 2);
    }

    CHECK_THROWS_AS(build_torus(1, 2), DegenerateLattice);
    CHECK_THROWS_AS(build_torus(1, 0), DegenerateLattice);
    CHECK_THROWS_AS(build_torus(8, 1000), OverflowError);
}

TEST_CASE("site index codec round trips") {
    const TorusGeometry g(3, 5);
    std::array<std::int64_t, 3> c{};
    for (Site s = 0; s < g.site_count(); ++s) {
        g.coords(s, c);
        for (auto v : c) {
            CHECK(v >= 0);
            CHECK(v < 5);
        }
        CHECK(g.site_of(c) == s);
    }
    // negative coordinates wrap
    const std::array<std::int64_t, 3> neg{-1, 0, 4};
    const std::array<std::int64_t, 3> wrapped{4, 0, 4};
    CHECK(g.site_of(neg) == g.site_of(wrapped));
}

TEST_CASE("neighbour relation is symmetric with 2d neighbours") {
    for (auto [d, L] : std::vector<std::pair<int, std::int64_t>>{{1, 5}, {2, 4}, {3, 3}}) {
        const TorusGeometry g(d, L);
        for (Site s = 0; s < g.site_count(); ++s) {
            std::set<Site> nbrs;
            for (int axis = 0; axis < d; ++axis) {
                for (int sign = 0; sign < 2; ++sign) {
                    const Site y = g.neighbour(s, axis, sign);
                    nbrs.insert(y);
                    CHECK(g.neighbour(y, axis, 1 - sign) == s);
                }
            }
            CHECK(nbrs.size() == static_cast<std::size_t>(2 * d));
        }
    }
}

TEST_CASE("directed edge enumeration") {
    const TorusGeometry g1(1, 4);
    CHECK(g1.enumerate_directed_edges().size() == 8);
    const TorusGeometry g2(2, 3);
    CHECK(g2.enumerate_directed_edges().size() == 36);

    // deterministic order: site-major, axis, then + before -
    const auto edges = g2.enumerate_directed_edges();
    for (std::size_t i = 0; i < edges.size(); ++i)
        CHECK(g2.edge_id(edges[i]) == static_cast<EdgeId>(i));
}

TEST_CASE("edge reversal and midpoints are involutive and bit-exact") {
    for (auto [d, L] : std::vector<std::pair<int, std::int64_t>>{{1, 3}, {1, 4}, {2, 5}}) {
        const TorusGeometry g(d, L);
        std::vector<double> m1(static_cast<std::size_t>(d));
        std::vector<double> m2(static_cast<std::size_t>(d));
        for (const auto& e : g.enumerate_directed_edges()) {
            const DirectedEdge r = g.reverse(e);
            const DirectedEdge rr = g.reverse(r);
            CHECK(rr.source == e.source);
            CHECK(rr.axis == e.axis);
            CHECK(rr.sign == e.sign);
            g.edge_midpoint(e, m1);
            g.edge_midpoint(r, m2);
            for (int i = 0; i < d; ++i) CHECK(m1[static_cast<std::size_t>(i)] == m2[static_cast<std::size_t>(i)]);
        }
    }
}

TEST_CASE("each unordered pair appears as exactly two directed edges") {
    const TorusGeometry g(1, 3);
    std::set<std::pair<Site, Site>> pairs;
    for (const auto& e : g.enumerate_directed_edges()) {
        const Site a = e.source;
        const Site b = g.edge_target(e);
        pairs.insert({std::min(a, b), std::max(a, b)});
    }
    CHECK(pairs.size() == 3);  // 2dL^d / 2 unordered bonds
}

TEST_CASE("test function evaluation") {
    const TestFunction cosfn = testing::phi_cos();
    const std::array<double, 1> quarter{0.25};
    const std::array<double, 1> half{0.5};
    CHECK(std::abs(eval_test_function(cosfn, quarter)) < 1e-15);
    CHECK(eval_test_function(cosfn, half) == doctest::Approx(-1.0));

    const TestFunction one = testing::phi_one();
    CHECK(eval_test_function(one, quarter) == doctest::Approx(1.0));
    // constants ignore a stray component request
    CHECK(eval_test_function(one, quarter, 0, 0) == doctest::Approx(1.0));
    // non-constant scalars do not
    CHECK_THROWS_AS(eval_test_function(cosfn, quarter, 0, 0), UsageError);

    TestFunction comp = TestFunction::per_axis_sign(1);
    comp.set_axis_sign_comp(0, 0, ScalarFunction::constant_fn(1, 2.0));
    CHECK(eval_test_function(comp, quarter, 0, 0) == doctest::Approx(2.0));
    CHECK(eval_test_function(comp, quarter, 0, 1) == doctest::Approx(0.0));
    CHECK_THROWS_AS(eval_test_function(comp, quarter), UsageError);
}

TEST_CASE("reported sup norm bounds a dense grid scan") {
    Rng rng(99, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::int64_t L = 8;
        ScalarFunction f(1, rng.uniform() - 0.5);
        for (int k = 1; k <= 3; ++k) {
            f = f.plus(ScalarFunction::axis_wave(1, 0, k, rng.bernoulli(0.5) ? Phase::cos : Phase::sin,
                                                 rng.uniform() - 0.5));
        }
        const double bound = f.sup_norm_bound();
        for (int i = 0; i < 4 * L; ++i) {
            const std::array<double, 1> x{static_cast<double>(i) / (4.0 * L)};
            CHECK(std::abs(f(x)) <= bound + 1e-12);
        }
    }
}

TEST_CASE("test function JSON round trip") {
    const nlohmann::json j = {
        {"kind", "trig"},
        {"terms", {{{"axis", 0}, {"freq", 1}, {"phase", "cos"}, {"amp", 0.25}}}},
        {"component", {{"axis", 0}, {"sign", "+"}}}};
    const TestFunction t = test_function_from_json(j, 1);
    CHECK(t.shape() == FnShape::per_axis_sign);
    const std::array<double, 1> x{0.0};
    CHECK(eval_test_function(t, x, 0, 0) == doctest::Approx(0.25));

    const nlohmann::json back = test_function_to_json(t);
    const TestFunction t2 = test_function_from_json(back, 1);
    for (int i = 0; i < 16; ++i) {
        const std::array<double, 1> p{i / 16.0};
        CHECK(eval_test_function(t, p, 0, 0) == doctest::Approx(eval_test_function(t2, p, 0, 0)));
        CHECK(eval_test_function(t, p, 0, 1) == doctest::Approx(eval_test_function(t2, p, 0, 1)));
    }

    const TestFunction c = test_function_from_json({{"kind", "const"}, {"c", 1.5}}, 1);
    CHECK(eval_test_function(c, x) == doctest::Approx(1.5));
}

#include <doctest.h>

#include <array>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "helpers.hpp"
#include "sepsim/dual.hpp"
#include "sepsim/engine.hpp"
#include "sepsim/stats.hpp"
#include "sepsim/limits.hpp"

using namespace sepsim;
using namespace sepsim::testing;

TEST_CASE("stirring keeps positions distinct and the site set exclusion-like") {
    const TorusGeometry g(1, 4);
    Rng rng(41, 0);
    StirringState s{{0, 1}, 0.0};
    for (int i = 0; i < 500; ++i) {
        const std::set<Site> before(s.positions.begin(), s.positions.end());
        const double t_before = s.time;
        stirring_step(s, g, rng);
        CHECK(s.time > t_before);
        const std::set<Site> after(s.positions.begin(), s.positions.end());
        CHECK(after.size() == 2);  // pairwise distinct
        // one event moves the unordered set by at most one site swap/move
        std::vector<Site> diff;
        std::set_symmetric_difference(before.begin(), before.end(), after.begin(), after.end(),
                                      std::back_inserter(diff));
        CHECK(diff.size() <= 2);
    }
}

TEST_CASE("single dual particle walks") {
    const TorusGeometry g(1, 8);
    Rng rng(42, 0);
    StirringState s{{3}, 0.0};
    for (int i = 0; i < 100; ++i) {
        const Site before = s.positions[0];
        stirring_step(s, g, rng);
        const Site after = s.positions[0];
        const bool neighbour = after == g.neighbour(before, 0, 0) || after == g.neighbour(before, 0, 1);
        CHECK(neighbour);
    }
}

TEST_CASE("constant profiles are stationary for the estimator") {
    const TorusGeometry g(1, 4);
    const DensityProfile half = DensityProfile::constant(1, 0.5);
    Rng rng(43, 0);
    const auto est = estimate_kpoint({1}, 0.3, half, 2, g, 200, rng);
    CHECK(est.estimate == doctest::Approx(0.25));
    CHECK(est.stderr_est == doctest::Approx(0.0));
}

TEST_CASE("no motion at t=0") {
    const TorusGeometry g(1, 8);
    const DensityProfile rho0 = standard_profile();
    Rng rng(44, 0);
    const std::vector<Site> pts{0, 3};
    const auto est = estimate_kpoint(pts, 0.0, rho0, 4, g, 50, rng);
    const double expected = bernoulli_parameter(rho0, 4, g, 0) * bernoulli_parameter(rho0, 4, g, 3);
    CHECK(est.estimate == doctest::Approx(expected));
    CHECK(exact_kpoint(pts, 0.0, rho0, 4, g) == doctest::Approx(expected));
}

TEST_CASE("guards") {
    const TorusGeometry g(1, 8);
    const DensityProfile rho0 = standard_profile();
    Rng rng(45, 0);
    CHECK_THROWS_AS(estimate_kpoint({2, 2}, 0.1, rho0, 4, g, 10, rng), DuplicatePoints);
    CHECK_THROWS_AS(exact_kpoint({1, 1}, 0.1, rho0, 4, g), DuplicatePoints);
    try {
        exact_kpoint({0, 1, 2}, 0.1, rho0, 4, g);
        FAIL("expected StateSpaceTooLarge");
    } catch (const StateSpaceTooLarge& e) {
        CHECK(e.state_count == 8 * 7 * 6);
    }
}

TEST_CASE("uniform stationary law for one walker") {
    const TorusGeometry g(1, 4);
    const DensityProfile c = DensityProfile::constant(1, 0.3);
    const std::int64_t n = 3;
    // constant field: every contraction equals n eps^d c at any horizon
    CHECK(exact_kpoint({2}, 1.5, c, n, g) == doctest::Approx(n * 0.25 * 0.3).epsilon(1e-10));
}

TEST_CASE("uniformization against a 10^7-path walk simulation") {
    // one walker, L=8, t=0.1: two independent oracles must agree
    const TorusGeometry g(1, 8);
    const DensityProfile rho0 = standard_profile();
    const std::int64_t n = 8;
    const double t = 0.1;
    const double exact = exact_kpoint({0}, t, rho0, n, g);

    Rng rng(46, 0);
    const std::int64_t paths = 10000000;
    const auto est = estimate_kpoint({0}, t, rho0, n, g, paths, rng);
    INFO("exact ", exact, " walk estimate ", est.estimate, " +- ", est.stderr_est);
    CHECK(std::abs(est.estimate - exact) <= 3.0 * est.stderr_est);
    // freeze the uniformization value itself
    CHECK(exact == doctest::Approx(0.505735025482).epsilon(1e-9));
}

TEST_CASE("exact correlations respect the product bound") {
    const TorusGeometry g(1, 8);
    const DensityProfile rho0 = standard_profile();
    const std::int64_t n = 8;
    const double bound1 = (static_cast<double>(n) / 8.0) * rho0.sup_bound();
    for (double t : {0.01, 0.05, 0.2}) {
        CHECK(exact_kpoint({0}, t, rho0, n, g) <= bound1 + 1e-12);
        CHECK(exact_kpoint({0, 4}, t, rho0, n, g) <= bound1 * bound1 + 1e-12);
    }
}

TEST_CASE("monte carlo estimate matches the exact two-point value") {
    const TorusGeometry g(1, 8);
    const DensityProfile rho0 = standard_profile();
    const std::int64_t n = 8;  // eps n = 1
    const double t = 0.05;
    const std::vector<Site> pts{0, 4};
    const double exact = exact_kpoint(pts, t, rho0, n, g);
    CHECK(exact == doctest::Approx(0.244516853498).epsilon(1e-9));
    Rng rng(47, 0);
    const auto est = estimate_kpoint(pts, t, rho0, n, g, 20000, rng);
    CHECK(std::abs(est.estimate - exact) <= 3.0 * est.stderr_est);
}

TEST_CASE("rescaled correlations approach the product of limit densities") {
    const DensityProfile rho0 = standard_profile();
    const LimitField limit(rho0, 0.5);
    const double t = 0.05;
    auto deviation = [&](std::int64_t L) {
        const TorusGeometry g(1, L);
        const std::int64_t n = L;  // eps n = 1 along the family
        const std::vector<Site> pts{0, L / 2};
        const double eps_d_n = static_cast<double>(n) / static_cast<double>(L);
        const double rescaled = exact_kpoint(pts, t, rho0, n, g) / (eps_d_n * eps_d_n);
        const std::array<double, 1> x1{0.0};
        const std::array<double, 1> x2{0.5};
        return std::abs(rescaled - limit.eval_rho(x1, t) * limit.eval_rho(x2, t));
    };
    CHECK(deviation(16) < deviation(8));
}

TEST_CASE("engine statistics reproduce the duality oracle") {
    // E[eta(x,t) eta(y,t)] measured from full simulations must match the
    // uniformized dual computation: three independent routes to one number.
    const TorusGeometry g(1, 8);
    const DensityProfile rho0 = standard_profile();
    const std::int64_t n = 8;
    const double t = 0.05;
    const Site x = 0, y = 4;

    RunningMoments prod, single;
    for (int r = 0; r < 4000; ++r) {
        Rng rng(515151, static_cast<std::uint64_t>(r));
        Engine eng(g, sample_initial(rho0, n, g, rng), n, rng);
        eng.advance_to(t);
        prod.add(eng.state().occupied(x) && eng.state().occupied(y) ? 1.0 : 0.0);
        single.add(eng.state().occupied(x) ? 1.0 : 0.0);
    }
    const SummaryStats sp = summarize(prod);
    const double exact2 = exact_kpoint({x, y}, t, rho0, n, g);
    INFO("simulated ", sp.mean, " +- ", sp.stderr_mean, " exact ", exact2);
    CHECK(std::abs(sp.mean - exact2) <= 3.0 * sp.stderr_mean);

    const SummaryStats s1 = summarize(single);
    const double exact1 = exact_kpoint({x}, t, rho0, n, g);
    CHECK(std::abs(s1.mean - exact1) <= 3.0 * s1.stderr_mean);
}

TEST_CASE("two-dimensional oracle agrees with its estimator") {
    const TorusGeometry g(2, 4);
    const DensityProfile rho0(ScalarFunction::constant_fn(2, 0.4).plus(
        ScalarFunction::wave_fn(2, 0.2, {1, 0}, Phase::cos)));
    const std::int64_t n = 10;
    const double t = 0.03;
    const std::vector<Site> pts{g.site_of(std::array<std::int64_t, 2>{0, 0}),
                                g.site_of(std::array<std::int64_t, 2>{2, 1})};
    const double exact = exact_kpoint(pts, t, rho0, n, g);
    Rng rng(48, 0);
    const auto est = estimate_kpoint(pts, t, rho0, n, g, 30000, rng);
    CHECK(std::abs(est.estimate - exact) <= 3.0 * est.stderr_est);
    CHECK(exact <= std::pow((10.0 / 16.0) * rho0.sup_bound(), 2) + 1e-12);
}

TEST_CASE("unlabelled stirring pair has the two-particle exclusion law") {
    const TorusGeometry g(1, 6);
    const std::int64_t S = g.site_count();
    const double t = 0.08;

    // exclusion pair chain on unordered {a,b}: moves to free neighbours only
    SparseChain sep;
    sep.states = S * S;
    sep.out.resize(static_cast<std::size_t>(sep.states));
    const double rate = g.inv_eps_sq();
    auto idx = [&](Site a, Site b) { return std::min(a, b) * S + std::max(a, b); };
    for (Site a = 0; a < S; ++a) {
        for (Site b = a + 1; b < S; ++b) {
            auto& row = sep.out[static_cast<std::size_t>(idx(a, b))];
            for (int sign = 0; sign < 2; ++sign) {
                const Site ya = g.neighbour(a, 0, sign);
                if (ya != b) row.emplace_back(idx(ya, b), rate);
                const Site yb = g.neighbour(b, 0, sign);
                if (yb != a) row.emplace_back(idx(a, yb), rate);
            }
        }
    }
    const std::vector<double> sep_dist = transient_distribution(sep, idx(1, 2), t);

    const SparseChain stir = stirring_chain(g, 2);
    const std::vector<double> stir_dist = transient_distribution(stir, 1 * S + 2, t);

    for (Site a = 0; a < S; ++a) {
        for (Site b = a + 1; b < S; ++b) {
            const double unordered = stir_dist[static_cast<std::size_t>(a * S + b)] +
                                     stir_dist[static_cast<std::size_t>(b * S + a)];
            CHECK(unordered ==
                  doctest::Approx(sep_dist[static_cast<std::size_t>(idx(a, b))]).epsilon(1e-10));
        }
    }
}

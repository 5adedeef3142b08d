#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "sepsim/density.hpp"
#include "sepsim/engine.hpp"
#include "sepsim/rng.hpp"
#include "sepsim/state.hpp"
#include "sepsim/test_function.hpp"
#include "sepsim/torus.hpp"
#include "sepsim/trig.hpp"

namespace sepsim::testing {

// rho0 = 0.5 + 0.25 cos(2 pi x), the standard one-mode fixture.
inline DensityProfile standard_profile() {
    return DensityProfile(ScalarFunction::constant_fn(1, 0.5).plus(
        ScalarFunction::axis_wave(1, 0, 1, Phase::cos, 0.25)));
}

inline TestFunction phi_one() { return TestFunction::scalar(ScalarFunction::constant_fn(1, 1.0)); }

inline TestFunction phi_cos() {
    return TestFunction::scalar(ScalarFunction::axis_wave(1, 0, 1, Phase::cos, 1.0));
}

inline TestFunction phi_sin() {
    return TestFunction::scalar(ScalarFunction::axis_wave(1, 0, 1, Phase::sin, 1.0));
}

// phi == 1 on the requested (axis, sign) component only.
inline TestFunction phi_axis_sign_one(int dim, int axis, int sign) {
    TestFunction t = TestFunction::per_axis_sign(dim);
    t.set_axis_sign_comp(axis, sign, ScalarFunction::constant_fn(dim, 1.0));
    return t;
}

inline TestFunction phi_axis_sign_all_one(int dim) {
    TestFunction t = TestFunction::per_axis_sign(dim);
    for (int axis = 0; axis < dim; ++axis)
        for (int sign = 0; sign < 2; ++sign)
            t.set_axis_sign_comp(axis, sign, ScalarFunction::constant_fn(dim, 1.0));
    return t;
}

inline TestFunction phi_axis_one(int dim) {
    TestFunction t = TestFunction::per_axis(dim);
    for (int axis = 0; axis < dim; ++axis)
        t.set_axis_comp(axis, ScalarFunction::constant_fn(dim, 1.0));
    return t;
}

// sin(2 pi x) on the first axis component, zero elsewhere.
inline TestFunction phi_axis_sin(int dim) {
    TestFunction t = TestFunction::per_axis(dim);
    t.set_axis_comp(0, ScalarFunction::axis_wave(dim, 0, 1, Phase::sin, 1.0));
    return t;
}

// Uniformly random configuration with a given occupation probability.
inline Configuration random_configuration(const TorusGeometry& geom, double p, Rng& rng) {
    Configuration cfg(geom);
    for (Site s = 0; s < geom.site_count(); ++s)
        if (rng.bernoulli(p)) cfg.add_particle(s);
    return cfg;
}

// Independent oracle for generator expressions: enumerate every transition of
// the current configuration at its exact rate and sum rate * (F(after) -
// F(before))^power over the resulting states.
inline double brute_force_gamma(
    const TorusGeometry& geom, const Configuration& state, int power,
    const std::function<double(const Configuration&, const CounterField&)>& F) {
    const double rate = geom.inv_eps_sq();
    CounterField zero(geom);
    const double f_before = F(state, zero);
    double acc = 0.0;
    for (std::int64_t slot = 0; slot < state.particle_count(); ++slot) {
        for (int axis = 0; axis < geom.dim(); ++axis) {
            for (int sign = 0; sign < 2; ++sign) {
                Configuration next = state;
                CounterField counters(geom);
                const Site from = state.particle_site(slot);
                const Site to = geom.neighbour(from, axis, sign);
                const EdgeId e = geom.edge_id(from, axis, sign);
                const bool blocked = state.occupied(to);
                counters.record_attempt(e, !blocked);
                if (!blocked) next.move_particle(slot, to);
                const double delta = F(next, counters) - f_before;
                double term = rate;
                for (int i = 0; i < power; ++i) term *= delta;
                acc += term;
            }
        }
    }
    return acc;
}

}  // namespace sepsim::testing

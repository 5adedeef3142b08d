#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "sepsim/density.hpp"
#include "sepsim/errors.hpp"
#include "sepsim/rng.hpp"
#include "sepsim/state.hpp"
#include "sepsim/torus.hpp"

namespace sepsim {

// Bernoulli parameter n * integral of rho0 over the cell around `site`,
// computed in closed form per Fourier mode. Values above 1 mean the requested
// initial law does not exist; that is a hard error, never a clamp.
inline double bernoulli_parameter(const DensityProfile& rho0, std::int64_t n,
                                  const TorusGeometry& geom, Site site) {
    double p = static_cast<double>(n) * rho0.cell_integral(geom, site);
    if (p > 1.0)
        throw ParameterExceedsOne("site parameter " + std::to_string(p) +
                                  " > 1: initial law infeasible");
    if (p < 0.0) p = 0.0;  // guard against rounding of a certified-nonnegative profile
    return p;
}

inline std::vector<double> bernoulli_parameter_field(const DensityProfile& rho0, std::int64_t n,
                                                     const TorusGeometry& geom) {
    std::vector<double> field(static_cast<std::size_t>(geom.site_count()));
    for (Site s = 0; s < geom.site_count(); ++s) field[static_cast<std::size_t>(s)] =
        bernoulli_parameter(rho0, n, geom, s);
    return field;
}

// Independent Bernoulli draw per site; all cumulative counters start at zero
// by construction of a fresh CounterField.
inline Configuration sample_initial(const DensityProfile& rho0, std::int64_t n,
                                    const TorusGeometry& geom, Rng& rng) {
    const std::vector<double> field = bernoulli_parameter_field(rho0, n, geom);
    Configuration cfg(geom);
    for (Site s = 0; s < geom.site_count(); ++s)
        if (rng.bernoulli(field[static_cast<std::size_t>(s)])) cfg.add_particle(s);
    return cfg;
}

inline Configuration sample_initial(const std::vector<double>& field, const TorusGeometry& geom,
                                    Rng& rng) {
    Configuration cfg(geom);
    for (Site s = 0; s < geom.site_count(); ++s)
        if (rng.bernoulli(field[static_cast<std::size_t>(s)])) cfg.add_particle(s);
    return cfg;
}

}  // namespace sepsim

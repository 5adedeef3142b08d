#pragma once

#include <cmath>
#include <string>

#include <json.hpp>

#include "sepsim/density.hpp"
#include "sepsim/errors.hpp"
#include "sepsim/initcond.hpp"
#include "sepsim/torus.hpp"

namespace sepsim {

// Joint scaling of particle number and lattice size. Classic keeps the
// expected occupancy fraction alpha in (0,1); sparse sends eps^d n -> 0
// along n = ceil(L^{gamma d}) while keeping n well above eps^{-d/2}.
struct ScalingRegime {
    enum class Type { classic, sparse } type = Type::classic;
    double alpha = 0.5;  // classic
    double gamma = 0.6;  // sparse; default keeps the finite-size correction small

    // Expected occupancy fraction in the limit: alpha for classic, 0 sparse.
    double limit_alpha() const { return type == Type::classic ? alpha : 0.0; }

    std::string name() const {
        return type == Type::classic ? "classic(alpha=" + std::to_string(alpha) + ")"
                                     : "sparse(gamma=" + std::to_string(gamma) + ")";
    }
};

// Particle-number parameter for a given lattice, with the initial-law
// feasibility verified by a full site scan.
inline std::int64_t resolve_regime(const ScalingRegime& regime, std::int64_t L, int d,
                                   const DensityProfile& rho0) {
    std::int64_t n = 0;
    const double sites = std::pow(static_cast<double>(L), d);
    if (regime.type == ScalingRegime::Type::classic) {
        if (!(regime.alpha > 0.0 && regime.alpha < 1.0))
            throw RangeError("classic regime needs alpha in (0,1)");
        n = static_cast<std::int64_t>(std::llround(regime.alpha * sites / rho0.l1_norm()));
    } else {
        if (!(regime.gamma > 0.5 && regime.gamma < 1.0))
            throw RangeError("sparse regime needs gamma in (1/2,1)");
        n = static_cast<std::int64_t>(
            std::ceil(std::pow(static_cast<double>(L), regime.gamma * d) - 1e-9));
    }
    if (n < 1) throw InfeasibleRegime("regime resolves to zero particles");

    const TorusGeometry geom(d, L);
    double max_p = 0.0;
    Site argmax = 0;
    for (Site s = 0; s < geom.site_count(); ++s) {
        const double p = static_cast<double>(n) * rho0.cell_integral(geom, s);
        if (p > max_p) {
            max_p = p;
            argmax = s;
        }
    }
    if (max_p > 1.0)
        throw InfeasibleRegime("site " + std::to_string(argmax) + " needs Bernoulli parameter " +
                               std::to_string(max_p) + " > 1");
    return n;
}

// JSON: {"type":"classic","alpha":0.4} | {"type":"sparse","gamma":0.6}
inline ScalingRegime regime_from_json(const nlohmann::json& j) {
    ScalingRegime r;
    const std::string type = j.at("type").get<std::string>();
    if (type == "classic") {
        r.type = ScalingRegime::Type::classic;
        r.alpha = j.at("alpha").get<double>();
    } else if (type == "sparse") {
        r.type = ScalingRegime::Type::sparse;
        r.gamma = j.value("gamma", 0.6);
    } else {
        throw ConfigError("regime type must be classic or sparse");
    }
    return r;
}

inline nlohmann::json regime_to_json(const ScalingRegime& r) {
    if (r.type == ScalingRegime::Type::classic) return {{"type", "classic"}, {"alpha", r.alpha}};
    return {{"type", "sparse"}, {"gamma", r.gamma}};
}

}  // namespace sepsim

#pragma once

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sepsim/errors.hpp"
#include "sepsim/test_function.hpp"
#include "sepsim/torus.hpp"
#include "sepsim/trig.hpp"

namespace sepsim {

// Initial density rho0 as a finite Fourier series a0 + sum_j a_j trig(2 pi
// k_j.x). Nonnegativity is certified by a0 >= sum |a_j|, which also makes
// a0 the L1 norm on the unit torus.
class DensityProfile {
public:
    explicit DensityProfile(ScalarFunction f) : f_(std::move(f)) {
        double amp_sum = 0.0;
        for (const auto& w : f_.waves()) amp_sum += std::abs(w.amp);
        if (f_.constant_part() < amp_sum)
            throw ConfigError("density profile not certified nonnegative: a0 < sum |a_j|");
        if (f_.constant_part() <= 0.0) throw ConfigError("density profile must have positive mass");
    }

    static DensityProfile constant(int dim, double c) {
        return DensityProfile(ScalarFunction::constant_fn(dim, c));
    }

    const ScalarFunction& fn() const { return f_; }
    int dim() const { return f_.dim(); }

    double l1_norm() const { return f_.constant_part(); }
    double sup_bound() const { return f_.sup_norm_bound(); }

    double operator()(std::span<const double> x) const { return f_(x); }

    // Exact integral over the cell B_eps(x): the side-eps box centred at the
    // site, evaluated mode by mode.
    double cell_integral(const TorusGeometry& geom, Site site) const {
        std::vector<double> pos(static_cast<std::size_t>(geom.dim()));
        geom.position(site, pos);
        return f_.box_integral(pos, geom.eps());
    }

private:
    ScalarFunction f_;
};

// JSON: {"a0":0.5,"terms":[{"axis":0,"freq":1,"phase":"cos","amp":0.25}]}
inline DensityProfile density_profile_from_json(const nlohmann::json& j, int dim) {
    ScalarFunction f(dim, j.at("a0").get<double>());
    if (j.contains("terms")) {
        nlohmann::json trig = {{"kind", "trig"}, {"terms", j.at("terms")}};
        if (!j.at("terms").empty()) f = f.plus(scalar_function_from_json(trig, dim));
    }
    return DensityProfile(std::move(f));
}

inline nlohmann::json density_profile_to_json(const DensityProfile& p) {
    nlohmann::json j;
    j["a0"] = p.fn().constant_part();
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& w : p.fn().waves()) {
        int axis = -1;
        for (int i = 0; i < p.dim(); ++i)
            if (w.freq[static_cast<std::size_t>(i)] != 0) axis = i;
        terms.push_back({{"axis", axis},
                         {"freq", w.freq[static_cast<std::size_t>(axis)]},
                         {"phase", w.phase == Phase::cos ? "cos" : "sin"},
                         {"amp", w.amp}});
    }
    j["terms"] = terms;
    return j;
}

}  // namespace sepsim

#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "sepsim/density.hpp"
#include "sepsim/observables.hpp"
#include "sepsim/test_function.hpp"
#include "sepsim/trig.hpp"

namespace sepsim {

// Trigonometric polynomial whose every term carries an exponential decay in
// time: sum of amp * e^{-rate t} * trig(2 pi k.x). Heat evolution, products
// and time integrals all stay inside this family, so the reference values
// below are closed form.
class DecayingTrigPoly {
public:
    struct Term {
        double amp;
        std::vector<int> freq;  // all zero means a space-constant term
        Phase phase;
        double rate;
    };

    explicit DecayingTrigPoly(int dim) : dim_(dim) {}

    // The heat semigroup applied to rho0: mode k decays at 4 pi^2 |k|^2.
    static DecayingTrigPoly heat_solution(const ScalarFunction& rho0) {
        DecayingTrigPoly p(rho0.dim());
        if (rho0.constant_part() != 0.0)
            p.add_term(rho0.constant_part(), std::vector<int>(static_cast<std::size_t>(rho0.dim()), 0),
                       Phase::cos, 0.0);
        for (const auto& w : rho0.waves()) {
            int k2 = 0;
            for (int k : w.freq) k2 += k * k;
            p.add_term(w.amp, w.freq, w.phase, 4.0 * std::numbers::pi * std::numbers::pi * k2);
        }
        return p;
    }

    static DecayingTrigPoly from_static(const ScalarFunction& f) {
        DecayingTrigPoly p(f.dim());
        if (f.constant_part() != 0.0)
            p.add_term(f.constant_part(), std::vector<int>(static_cast<std::size_t>(f.dim()), 0),
                       Phase::cos, 0.0);
        for (const auto& w : f.waves()) p.add_term(w.amp, w.freq, w.phase, 0.0);
        return p;
    }

    int dim() const { return dim_; }
    const std::vector<Term>& terms() const { return terms_; }

    void add_term(double amp, std::vector<int> freq, Phase phase, double rate) {
        if (amp == 0.0) return;
        bool zero = true;
        for (int k : freq) zero &= (k == 0);
        if (zero && phase == Phase::sin) return;
        if (!zero) {
            for (int k : freq) {
                if (k > 0) break;
                if (k < 0) {
                    for (int& ki : freq) ki = -ki;
                    if (phase == Phase::sin) amp = -amp;
                    break;
                }
            }
        } else {
            phase = Phase::cos;
        }
        for (auto& t : terms_) {
            if (t.phase == phase && t.rate == rate && t.freq == freq) {
                t.amp += amp;
                return;
            }
        }
        terms_.push_back(Term{amp, std::move(freq), phase, rate});
    }

    double eval(std::span<const double> x, double t) const {
        double v = 0.0;
        for (const auto& term : terms_) {
            double arg = 0.0;
            for (int i = 0; i < dim_; ++i)
                arg += term.freq[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
            arg *= 2.0 * std::numbers::pi;
            const double wave = term.phase == Phase::cos ? std::cos(arg) : std::sin(arg);
            v += term.amp * std::exp(-term.rate * t) * wave;
        }
        return v;
    }

    DecayingTrigPoly times(const DecayingTrigPoly& o) const {
        DecayingTrigPoly r(dim_);
        for (const auto& a : terms_) {
            for (const auto& b : o.terms_) {
                const double rate = a.rate + b.rate;
                std::vector<int> sum(static_cast<std::size_t>(dim_));
                std::vector<int> diff(static_cast<std::size_t>(dim_));
                for (std::size_t i = 0; i < sum.size(); ++i) {
                    sum[i] = a.freq[i] + b.freq[i];
                    diff[i] = a.freq[i] - b.freq[i];
                }
                const double half = 0.5 * a.amp * b.amp;
                if (a.phase == Phase::cos && b.phase == Phase::cos) {
                    r.add_term(half, diff, Phase::cos, rate);
                    r.add_term(half, sum, Phase::cos, rate);
                } else if (a.phase == Phase::sin && b.phase == Phase::sin) {
                    r.add_term(half, diff, Phase::cos, rate);
                    r.add_term(-half, sum, Phase::cos, rate);
                } else if (a.phase == Phase::sin && b.phase == Phase::cos) {
                    r.add_term(half, sum, Phase::sin, rate);
                    r.add_term(half, diff, Phase::sin, rate);
                } else {
                    r.add_term(half, sum, Phase::sin, rate);
                    r.add_term(-half, diff, Phase::sin, rate);
                }
            }
        }
        return r;
    }

    DecayingTrigPoly plus(const DecayingTrigPoly& o) const {
        DecayingTrigPoly r = *this;
        for (const auto& t : o.terms_) r.add_term(t.amp, t.freq, t.phase, t.rate);
        return r;
    }

    DecayingTrigPoly scaled(double a) const {
        DecayingTrigPoly r(dim_);
        for (const auto& t : terms_) r.add_term(t.amp * a, t.freq, t.phase, t.rate);
        return r;
    }

    DecayingTrigPoly derivative(int axis) const {
        DecayingTrigPoly r(dim_);
        for (const auto& t : terms_) {
            const double factor = 2.0 * std::numbers::pi * t.freq[static_cast<std::size_t>(axis)];
            if (factor == 0.0) continue;
            if (t.phase == Phase::cos)
                r.add_term(-t.amp * factor, t.freq, Phase::sin, t.rate);
            else
                r.add_term(t.amp * factor, t.freq, Phase::cos, t.rate);
        }
        return r;
    }

    // integral over [0,T] in time: (1 - e^{-rate T})/rate per term.
    ScalarFunction time_integral(double T) const {
        ScalarFunction r(dim_, 0.0);
        for (const auto& t : terms_) {
            const double weight = t.rate == 0.0 ? T : (1.0 - std::exp(-t.rate * T)) / t.rate;
            bool zero = true;
            for (int k : t.freq) zero &= (k == 0);
            if (zero)
                r.add_constant(t.amp * weight);
            else
                r.add_wave(t.amp * weight, t.freq, t.phase);
        }
        return r;
    }

    // integral over the torus in space: only space-constant terms survive.
    // Returned as pairs (amp, rate) of a decaying scalar in t.
    std::vector<std::pair<double, double>> spatial_integral() const {
        std::vector<std::pair<double, double>> out;
        for (const auto& t : terms_) {
            bool zero = true;
            for (int k : t.freq) zero &= (k == 0);
            if (!zero) continue;
            bool merged = false;
            for (auto& [amp, rate] : out)
                if (rate == t.rate) {
                    amp += t.amp;
                    merged = true;
                    break;
                }
            if (!merged) out.emplace_back(t.amp, t.rate);
        }
        return out;
    }

private:
    int dim_;
    std::vector<Term> terms_;
};

// Closed-form references for the hydrodynamic limits of a given initial
// profile, at occupancy fraction alpha (0 in the sparse regime).
class LimitField {
public:
    LimitField(const DensityProfile& rho0, double alpha)
        : rho_(DecayingTrigPoly::heat_solution(rho0.fn())),
          alpha_(alpha),
          l1_(rho0.l1_norm()),
          dim_(rho0.dim()) {}

    double alpha() const { return alpha_; }
    double l1_norm() const { return l1_; }
    int dim() const { return dim_; }
    const DecayingTrigPoly& rho_series() const { return rho_; }

    double eval_rho(std::span<const double> x, double t) const { return rho_.eval(x, t); }

    // integral_0^T (rho - (alpha/||rho0||_1) rho^2)(x,t) dt
    double limit_uniflux(std::span<const double> x, double T) const {
        return limit_uniflux_with_alpha(x, T, alpha_);
    }

    double limit_uniflux_with_alpha(std::span<const double> x, double T, double alpha) const {
        DecayingTrigPoly integrand = rho_.plus(rho_.times(rho_).scaled(-alpha / l1_));
        return integrand.time_integral(T)(x);
    }

    // integral_0^T rho^2(x,t) dt
    double limit_unicol(std::span<const double> x, double T) const {
        return rho_.times(rho_).time_integral(T)(x);
    }

    // -integral_0^T d_axis rho(x,t) dt
    double limit_netflux(std::span<const double> x, double T, int axis) const {
        return -rho_.derivative(axis).time_integral(T)(x);
    }

    // 2 sum_l integral_0^T <phi_l^2, rho^2(t)> dt: the quadratic-variation
    // target for the net collision pairing.
    double netcol_variance_target(const TestFunction& phi, double T) const {
        if (phi.shape() != FnShape::per_axis) throw UsageError("variance target needs axis-indexed phi");
        const DecayingTrigPoly rho2 = rho_.times(rho_);
        double total = 0.0;
        for (int axis = 0; axis < dim_; ++axis) {
            const auto& comp = phi.axis_comp(axis);
            if (comp.is_zero()) continue;
            const DecayingTrigPoly phi2 = DecayingTrigPoly::from_static(comp.times(comp));
            for (const auto& [amp, rate] : phi2.times(rho2).spatial_integral())
                total += rate == 0.0 ? amp * T : amp * (1.0 - std::exp(-rate * T)) / rate;
        }
        return 2.0 * total;
    }

    // Reference for a mean pairing at time t, per observable kind.
    double reference(ObservableKind kind, const TestFunction& phi, double t) const {
        switch (kind) {
            case ObservableKind::Empirical: {
                const DecayingTrigPoly f = DecayingTrigPoly::from_static(phi.scalar_comp());
                double v = 0.0;
                for (const auto& [amp, rate] : f.times(rho_).spatial_integral())
                    v += amp * std::exp(-rate * t);
                return v;
            }
            case ObservableKind::UniFlux:
                return counter_reference(phi, t, rho_.plus(rho_.times(rho_).scaled(-alpha_ / l1_)));
            case ObservableKind::UniCollision:
                return counter_reference(phi, t, rho_.times(rho_));
            case ObservableKind::NetFlux: {
                double v = 0.0;
                for (int axis = 0; axis < dim_; ++axis) {
                    const auto& comp = phi.axis_comp(axis);
                    if (comp.is_zero()) continue;
                    const ScalarFunction wbar = rho_.derivative(axis).time_integral(t).scaled(-1.0);
                    v += comp.times(wbar).torus_integral();
                }
                return v;
            }
            case ObservableKind::NetCollision:
                return 0.0;  // mean-zero fluctuation limit
            case ObservableKind::NearestNeighbour: {
                const DecayingTrigPoly rho2 = rho_.times(rho_);
                double v = 0.0;
                for (int axis = 0; axis < dim_; ++axis) {
                    const auto& comp = phi.axis_comp(axis);
                    if (comp.is_zero()) continue;
                    for (const auto& [amp, rate] :
                         DecayingTrigPoly::from_static(comp).times(rho2).spatial_integral())
                        v += amp * std::exp(-rate * t);
                }
                return v;
            }
        }
        return 0.0;
    }

private:
    // sum over enabled (axis,sign) components of integral phi * u(T) dx where
    // du/dt is the given integrand.
    double counter_reference(const TestFunction& phi, double t,
                             const DecayingTrigPoly& rate_series) const {
        if (phi.shape() != FnShape::per_axis_sign)
            throw UsageError("unidirectional reference needs (axis,sign)-indexed phi");
        const ScalarFunction accumulated = rate_series.time_integral(t);
        double v = 0.0;
        for (int axis = 0; axis < dim_; ++axis)
            for (int sign = 0; sign < 2; ++sign) {
                const auto& comp = phi.axis_sign_comp(axis, sign);
                if (comp.is_zero()) continue;
                v += comp.times(accumulated).torus_integral();
            }
        return v;
    }

    DecayingTrigPoly rho_;
    double alpha_;
    double l1_;
    int dim_;
};

// Composite-Simpson quadrature helpers, retained as an independent
// cross-check of the closed forms.
inline double simpson_1d(const std::function<double(double)>& f, double a, double b, int cells) {
    const double h = (b - a) / (2.0 * cells);
    double acc = f(a) + f(b);
    for (int i = 1; i < 2 * cells; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// integral over [0,T] x torus of f(x,t), one spatial axis (d = 1 checks).
inline double simpson_time_space(const std::function<double(double, double)>& f, double T,
                                 int cells) {
    return simpson_1d(
        [&](double t) {
            return simpson_1d([&](double x) { return f(x, t); }, 0.0, 1.0, cells);
        },
        0.0, T, cells);
}

}  // namespace sepsim

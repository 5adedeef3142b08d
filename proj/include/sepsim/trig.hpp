#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "sepsim/errors.hpp"

namespace sepsim {

enum class Phase : std::uint8_t { cos, sin };

// amp * cos/sin(2*pi k.x) for an integer frequency vector k.
struct Wave {
    double amp = 0.0;
    std::vector<int> freq;
    Phase phase = Phase::cos;
};

inline double sinc(double z) { return std::abs(z) < 1e-8 ? 1.0 - z * z / 6.0 : std::sin(z) / z; }

// Finite trigonometric polynomial on the unit torus: constant + sum of plane
// waves. Closed under sums, products, axis derivatives and box integrals,
// which keeps every reference quantity in closed form.
class ScalarFunction {
public:
    explicit ScalarFunction(int dim = 1, double constant = 0.0)
        : dim_(dim), constant_(constant) {}

    static ScalarFunction constant_fn(int dim, double c) { return ScalarFunction(dim, c); }

    static ScalarFunction wave_fn(int dim, double amp, std::vector<int> freq, Phase phase) {
        ScalarFunction f(dim);
        f.add_wave(amp, std::move(freq), phase);
        return f;
    }

    // Single-axis convenience: amp * trig(2 pi freq x_axis).
    static ScalarFunction axis_wave(int dim, int axis, int freq, Phase phase, double amp) {
        std::vector<int> k(static_cast<std::size_t>(dim), 0);
        k[static_cast<std::size_t>(axis)] = freq;
        return wave_fn(dim, amp, std::move(k), phase);
    }

    int dim() const { return dim_; }
    double constant_part() const { return constant_; }
    const std::vector<Wave>& waves() const { return waves_; }

    void add_constant(double c) { constant_ += c; }

    void add_wave(double amp, std::vector<int> freq, Phase phase) {
        if (static_cast<int>(freq.size()) != dim_) throw UsageError("frequency vector has wrong dimension");
        if (amp == 0.0) return;
        if (std::all_of(freq.begin(), freq.end(), [](int k) { return k == 0; })) {
            if (phase == Phase::cos) constant_ += amp;  // sin(0) contributes nothing
            return;
        }
        // Canonical sign: first nonzero component positive.
        for (int k : freq) {
            if (k > 0) break;
            if (k < 0) {
                for (int& ki : freq) ki = -ki;
                if (phase == Phase::sin) amp = -amp;
                break;
            }
        }
        for (auto& w : waves_) {
            if (w.phase == phase && w.freq == freq) {
                w.amp += amp;
                return;
            }
        }
        waves_.push_back(Wave{amp, std::move(freq), phase});
    }

    double operator()(std::span<const double> x) const {
        double v = constant_;
        for (const auto& w : waves_) {
            double arg = 0.0;
            for (int i = 0; i < dim_; ++i) arg += w.freq[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
            arg *= 2.0 * std::numbers::pi;
            v += w.amp * (w.phase == Phase::cos ? std::cos(arg) : std::sin(arg));
        }
        return v;
    }

    ScalarFunction scaled(double a) const {
        ScalarFunction r(dim_, constant_ * a);
        for (const auto& w : waves_) r.add_wave(w.amp * a, w.freq, w.phase);
        return r;
    }

    ScalarFunction plus(const ScalarFunction& o) const {
        ScalarFunction r(dim_, constant_ + o.constant_);
        for (const auto& w : waves_) r.add_wave(w.amp, w.freq, w.phase);
        for (const auto& w : o.waves_) r.add_wave(w.amp, w.freq, w.phase);
        return r;
    }

    // Product-to-sum expansion; the result is again a trig polynomial.
    ScalarFunction times(const ScalarFunction& o) const {
        ScalarFunction r(dim_, constant_ * o.constant_);
        for (const auto& w : o.waves_) r.add_wave(constant_ * w.amp, w.freq, w.phase);
        for (const auto& w : waves_) r.add_wave(o.constant_ * w.amp, w.freq, w.phase);
        for (const auto& a : waves_) {
            for (const auto& b : o.waves_) {
                std::vector<int> sum(static_cast<std::size_t>(dim_));
                std::vector<int> diff(static_cast<std::size_t>(dim_));
                for (std::size_t i = 0; i < sum.size(); ++i) {
                    sum[i] = a.freq[i] + b.freq[i];
                    diff[i] = a.freq[i] - b.freq[i];
                }
                const double half = 0.5 * a.amp * b.amp;
                if (a.phase == Phase::cos && b.phase == Phase::cos) {
                    r.add_wave(half, diff, Phase::cos);
                    r.add_wave(half, sum, Phase::cos);
                } else if (a.phase == Phase::sin && b.phase == Phase::sin) {
                    r.add_wave(half, diff, Phase::cos);
                    r.add_wave(-half, sum, Phase::cos);
                } else if (a.phase == Phase::sin && b.phase == Phase::cos) {
                    r.add_wave(half, sum, Phase::sin);
                    r.add_wave(half, diff, Phase::sin);
                } else {  // cos * sin
                    r.add_wave(half, sum, Phase::sin);
                    r.add_wave(-half, diff, Phase::sin);
                }
            }
        }
        return r;
    }

    ScalarFunction derivative(int axis) const {
        ScalarFunction r(dim_, 0.0);
        for (const auto& w : waves_) {
            const double factor = 2.0 * std::numbers::pi * w.freq[static_cast<std::size_t>(axis)];
            if (factor == 0.0) continue;
            if (w.phase == Phase::cos)
                r.add_wave(-w.amp * factor, w.freq, Phase::sin);
            else
                r.add_wave(w.amp * factor, w.freq, Phase::cos);
        }
        return r;
    }

    // Integral over the whole torus; plane waves average to zero.
    double torus_integral() const { return constant_; }

    // Integral over the axis-aligned box of side `side` centred at `center`.
    // Each wave picks up a product of sinc factors.
    double box_integral(std::span<const double> center, double side) const {
        double vol = 1.0;
        for (int i = 0; i < dim_; ++i) vol *= side;
        double v = constant_ * vol;
        for (const auto& w : waves_) {
            double arg = 0.0;
            double damp = 1.0;
            for (int i = 0; i < dim_; ++i) {
                const int k = w.freq[static_cast<std::size_t>(i)];
                arg += k * center[static_cast<std::size_t>(i)];
                damp *= sinc(std::numbers::pi * k * side);
            }
            arg *= 2.0 * std::numbers::pi;
            v += w.amp * vol * damp * (w.phase == Phase::cos ? std::cos(arg) : std::sin(arg));
        }
        return v;
    }

    // |c| + sum |amp|: an upper bound for the sup norm, tight for constants
    // and single waves.
    double sup_norm_bound() const {
        double v = std::abs(constant_);
        for (const auto& w : waves_) v += std::abs(w.amp);
        return v;
    }

    bool is_zero() const { return constant_ == 0.0 && waves_.empty(); }

    int freq_norm_sq(const Wave& w) const {
        int s = 0;
        for (int k : w.freq) s += k * k;
        return s;
    }

private:
    int dim_;
    double constant_;
    std::vector<Wave> waves_;
};

}  // namespace sepsim

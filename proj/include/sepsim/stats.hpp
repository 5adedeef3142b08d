#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>

#include "sepsim/errors.hpp"

namespace sepsim {

// One-pass central moments up to fourth order, mergeable so that replica
// summaries can be reduced in any grouping without changing the result
// beyond rounding.
class RunningMoments {
public:
    void add(double x) { merge(RunningMoments(x)); }

    void merge(const RunningMoments& o) {
        if (o.n_ == 0) return;
        if (n_ == 0) {
            *this = o;
            return;
        }
        const double na = static_cast<double>(n_);
        const double nb = static_cast<double>(o.n_);
        const double n = na + nb;
        const double delta = o.mean_ - mean_;
        const double d2 = delta * delta;

        const double m4 = m4_ + o.m4_ + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n) +
                          6.0 * d2 * (na * na * o.m2_ + nb * nb * m2_) / (n * n) +
                          4.0 * delta * (na * o.m3_ - nb * m3_) / n;
        const double m3 = m3_ + o.m3_ + delta * d2 * na * nb * (na - nb) / (n * n) +
                          3.0 * delta * (na * o.m2_ - nb * m2_) / n;
        const double m2 = m2_ + o.m2_ + d2 * na * nb / n;

        mean_ += delta * nb / n;
        m2_ = m2;
        m3_ = m3;
        m4_ = m4;
        n_ += o.n_;
    }

    std::int64_t count() const { return n_; }
    double mean() const { return mean_; }
    double sum_sq_dev() const { return m2_; }
    double central2() const { return n_ ? m2_ / static_cast<double>(n_) : 0.0; }
    double central3() const { return n_ ? m3_ / static_cast<double>(n_) : 0.0; }
    double central4() const { return n_ ? m4_ / static_cast<double>(n_) : 0.0; }

private:
    explicit RunningMoments(double x) : n_(1), mean_(x) {}

public:
    RunningMoments() = default;

private:
    std::int64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
    double m3_ = 0.0;
    double m4_ = 0.0;
};

struct SummaryStats {
    std::int64_t count = 0;
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    double stderr_mean = 0.0;
    double stderr_variance = 0.0;  // via the fourth central moment
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
    double skew_z = 0.0;
    double kurt_z = 0.0;
};

inline SummaryStats summarize(const RunningMoments& m) {
    if (m.count() < 2) throw InsufficientSamples("need at least 2 samples");
    SummaryStats s;
    s.count = m.count();
    const double r = static_cast<double>(m.count());
    s.mean = m.mean();
    s.variance = m.sum_sq_dev() / (r - 1.0);
    s.stderr_mean = std::sqrt(s.variance / r);
    const double m2 = m.central2();
    const double m4 = m.central4();
    const double var_of_var = (m4 - (r - 3.0) / (r - 1.0) * s.variance * s.variance) / r;
    s.stderr_variance = std::sqrt(std::max(0.0, var_of_var));
    if (m2 > 0.0) {
        s.skewness = m.central3() / std::pow(m2, 1.5);
        s.excess_kurtosis = m4 / (m2 * m2) - 3.0;
        s.skew_z = s.skewness / std::sqrt(6.0 / r);
        s.kurt_z = s.excess_kurtosis / std::sqrt(24.0 / r);
    }
    return s;
}

inline SummaryStats summarize(std::span<const double> values) {
    RunningMoments m;
    for (double v : values) m.add(v);
    return summarize(m);
}

struct GaussianityResult {
    double skew_z = 0.0;
    double kurt_z = 0.0;
    bool pass = false;
};

// Moment-based normality screen: z-scores of sample skewness and excess
// kurtosis against their null standard errors sqrt(6/R), sqrt(24/R).
inline GaussianityResult gaussianity_check(const SummaryStats& s, double z_limit = 4.0) {
    if (s.count < 100) throw InsufficientSamples("gaussianity check needs R >= 100");
    if (s.variance <= 0.0) throw DegenerateSample("gaussianity check needs positive variance");
    GaussianityResult g;
    g.skew_z = s.skew_z;
    g.kurt_z = s.kurt_z;
    g.pass = std::abs(g.skew_z) < z_limit && std::abs(g.kurt_z) < z_limit;
    return g;
}

inline GaussianityResult gaussianity_check(std::span<const double> values, double z_limit = 4.0) {
    return gaussianity_check(summarize(values), z_limit);
}

// A single pass/fail comparison with all operands kept for reporting.
struct CheckRecord {
    std::string name;
    double observed = 0.0;
    double reference = 0.0;
    double tolerance = 0.0;  // the effective allowance
    double margin = 0.0;     // |observed - reference|
    bool pass = false;
    std::string detail;
};

inline CheckRecord compare_to_reference(const SummaryStats& s, double reference, double atol,
                                        double z) {
    CheckRecord c;
    c.observed = s.mean;
    c.reference = reference;
    c.margin = std::abs(s.mean - reference);
    c.tolerance = std::max(atol, z * s.stderr_mean);
    c.pass = c.margin <= c.tolerance;
    return c;
}

// |mean - reference| <= max(atol, rtol |reference|, z stderr)
inline CheckRecord mean_check(const SummaryStats& s, double reference, double atol, double rtol,
                              double z) {
    CheckRecord c = compare_to_reference(s, reference, std::max(atol, rtol * std::abs(reference)), z);
    return c;
}

inline CheckRecord variance_check(const SummaryStats& s, double target, double rtol) {
    CheckRecord c;
    c.observed = s.variance;
    c.reference = target;
    c.margin = std::abs(s.variance - target);
    c.tolerance = rtol * std::abs(target);
    c.pass = c.margin <= c.tolerance;
    return c;
}

// Passes when the sample mean is at least min_z standard errors away from
// the (wrong) alternative value.
inline CheckRecord mean_rejects(const SummaryStats& s, double alternative, double min_z) {
    CheckRecord c;
    c.observed = s.mean;
    c.reference = alternative;
    c.margin = std::abs(s.mean - alternative);
    c.tolerance = min_z * s.stderr_mean;
    c.pass = c.margin >= c.tolerance;
    return c;
}

inline CheckRecord variance_rejects(const SummaryStats& s, double alternative, double min_z) {
    CheckRecord c;
    c.observed = s.variance;
    c.reference = alternative;
    c.margin = std::abs(s.variance - alternative);
    c.tolerance = min_z * s.stderr_variance;
    c.pass = c.margin >= c.tolerance;
    return c;
}

}  // namespace sepsim

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sepsim/density.hpp"
#include "sepsim/errors.hpp"
#include "sepsim/initcond.hpp"
#include "sepsim/rng.hpp"
#include "sepsim/stats.hpp"
#include "sepsim/torus.hpp"

namespace sepsim {

// Labelled dual particles. Unlike the exclusion dynamics, an attempt onto an
// occupied position exchanges the two labels, so the positions stay pairwise
// distinct and the unlabelled site set follows the exclusion law.
struct StirringState {
    std::vector<Site> positions;
    double time = 0.0;
};

inline double stirring_total_rate(const StirringState& s, const TorusGeometry& geom) {
    return static_cast<double>(s.positions.size()) * 2.0 * geom.dim() * geom.inv_eps_sq();
}

// One event: exponential waiting time, uniform (particle, direction), then
// either a free move or a label exchange.
inline void stirring_step(StirringState& s, const TorusGeometry& geom, Rng& rng) {
    const auto k = static_cast<std::int64_t>(s.positions.size());
    s.time += rng.exponential(stirring_total_rate(s, geom));
    const auto i = static_cast<std::size_t>(rng.bounded(static_cast<std::uint64_t>(k)));
    const auto dir = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(2 * geom.dim())));
    const Site target = geom.neighbour(s.positions[i], dir >> 1, dir & 1);
    for (std::size_t j = 0; j < s.positions.size(); ++j) {
        if (s.positions[j] == target) {
            s.positions[j] = s.positions[i];
            s.positions[i] = target;
            return;
        }
    }
    s.positions[i] = target;
}

inline void stirring_advance_to(StirringState& s, double t_target, const TorusGeometry& geom,
                                Rng& rng) {
    if (s.positions.empty()) {
        s.time = t_target;
        return;
    }
    const double rate = stirring_total_rate(s, geom);
    while (true) {
        const double dt = rng.exponential(rate);
        if (s.time + dt > t_target) {
            s.time = t_target;
            return;
        }
        s.time += dt;
        const auto i = static_cast<std::size_t>(
            rng.bounded(static_cast<std::uint64_t>(s.positions.size())));
        const auto dir = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(2 * geom.dim())));
        const Site target = geom.neighbour(s.positions[i], dir >> 1, dir & 1);
        bool swapped = false;
        for (std::size_t j = 0; j < s.positions.size(); ++j) {
            if (s.positions[j] == target) {
                s.positions[j] = s.positions[i];
                s.positions[i] = target;
                swapped = true;
                break;
            }
        }
        if (!swapped) s.positions[i] = target;
    }
}

struct KPointEstimate {
    double estimate = 0.0;
    double stderr_est = 0.0;
    std::int64_t replicas = 0;
};

namespace detail {

inline void require_distinct(const std::vector<Site>& x) {
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j)
            if (x[i] == x[j]) throw DuplicatePoints("correlation points must be distinct");
}

}  // namespace detail

// Monte-Carlo k-point correlation: run R stirring paths from x to time t and
// average the product of the initial-law parameters at the final positions.
// Evaluating the product field analytically instead of sampling initial
// configurations removes all initial-condition variance from the estimator.
inline KPointEstimate estimate_kpoint(const std::vector<Site>& x, double t,
                                      const DensityProfile& rho0, std::int64_t n,
                                      const TorusGeometry& geom, std::int64_t replicas, Rng& rng) {
    detail::require_distinct(x);
    const std::vector<double> field = bernoulli_parameter_field(rho0, n, geom);
    RunningMoments acc;
    for (std::int64_t r = 0; r < replicas; ++r) {
        StirringState s{x, 0.0};
        stirring_advance_to(s, t, geom, rng);
        double prod = 1.0;
        for (Site y : s.positions) prod *= field[static_cast<std::size_t>(y)];
        acc.add(prod);
    }
    KPointEstimate out;
    out.replicas = replicas;
    out.estimate = acc.mean();
    out.stderr_est =
        replicas > 1 ? std::sqrt(acc.sum_sq_dev() / (static_cast<double>(replicas) - 1.0) /
                                 static_cast<double>(replicas))
                     : 0.0;
    return out;
}

// A sparse continuous-time Markov chain given by out-transition lists.
struct SparseChain {
    std::int64_t states = 0;
    std::vector<std::vector<std::pair<std::int64_t, double>>> out;
};

// Transient distribution at time t by uniformization: Poisson-weighted powers
// of P = I + Q/lambda, truncated once the accumulated Poisson mass leaves a
// tail below `tail_tol`. The truncation error in total variation is at most
// the discarded mass.
inline std::vector<double> transient_distribution(const SparseChain& chain, std::int64_t start,
                                                  double t, double tail_tol = 1e-12) {
    const auto ns = static_cast<std::size_t>(chain.states);
    double lambda = 0.0;
    for (const auto& row : chain.out) {
        double total = 0.0;
        for (const auto& [to, rate] : row) total += rate;
        lambda = std::max(lambda, total);
    }
    std::vector<double> result(ns, 0.0);
    std::vector<double> v(ns, 0.0);
    v[static_cast<std::size_t>(start)] = 1.0;
    if (lambda == 0.0 || t == 0.0) return v;
    if (lambda * t > 600.0) throw UsageError("uniformization horizon too large");

    double weight = std::exp(-lambda * t);
    double used = weight;
    for (std::size_t s = 0; s < ns; ++s) result[s] += weight * v[s];
    std::vector<double> next(ns, 0.0);
    const std::int64_t max_steps =
        static_cast<std::int64_t>(lambda * t + 60.0 * std::sqrt(lambda * t + 10.0)) + 100;
    for (std::int64_t m = 1; used < 1.0 - tail_tol && m <= max_steps; ++m) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t s = 0; s < ns; ++s) {
            const double mass = v[s];
            if (mass == 0.0) continue;
            double moved = 0.0;
            for (const auto& [to, rate] : chain.out[s]) {
                const double p = rate / lambda;
                next[static_cast<std::size_t>(to)] += mass * p;
                moved += p;
            }
            if (moved < 1.0) next[s] += mass * (1.0 - moved);  // uniformization self-loop
        }
        v.swap(next);
        weight *= lambda * t / static_cast<double>(m);
        used += weight;
        for (std::size_t s = 0; s < ns; ++s) result[s] += weight * v[s];
    }
    return result;
}

// Labelled stirring generator on ordered distinct k-tuples, k in {1,2}.
inline SparseChain stirring_chain(const TorusGeometry& geom, int k) {
    const std::int64_t S = geom.site_count();
    const double rate = geom.inv_eps_sq();
    SparseChain chain;
    if (k == 1) {
        chain.states = S;
        chain.out.resize(static_cast<std::size_t>(S));
        for (Site a = 0; a < S; ++a)
            for (int axis = 0; axis < geom.dim(); ++axis)
                for (int sign = 0; sign < 2; ++sign)
                    chain.out[static_cast<std::size_t>(a)].emplace_back(
                        geom.neighbour(a, axis, sign), rate);
        return chain;
    }
    chain.states = S * S;  // (a,b) -> a*S + b; the diagonal is unreachable
    chain.out.resize(static_cast<std::size_t>(chain.states));
    for (Site a = 0; a < S; ++a) {
        for (Site b = 0; b < S; ++b) {
            if (a == b) continue;
            auto& row = chain.out[static_cast<std::size_t>(a * S + b)];
            for (int axis = 0; axis < geom.dim(); ++axis) {
                for (int sign = 0; sign < 2; ++sign) {
                    const Site ya = geom.neighbour(a, axis, sign);
                    row.emplace_back(ya == b ? b * S + a : ya * S + b, rate);
                    const Site yb = geom.neighbour(b, axis, sign);
                    row.emplace_back(yb == a ? b * S + a : a * S + yb, rate);
                }
            }
        }
    }
    return chain;
}

// Exact k-point correlation E[prod eta(x_i, t)] for k in {1,2}: uniformized
// stirring distribution contracted against the product initial field.
inline double exact_kpoint(const std::vector<Site>& x, double t, const DensityProfile& rho0,
                           std::int64_t n, const TorusGeometry& geom) {
    detail::require_distinct(x);
    const auto k = static_cast<int>(x.size());
    const std::int64_t S = geom.site_count();
    if (k < 1 || k > 2) {
        std::int64_t states = 1;
        for (int i = 0; i < k; ++i) states *= std::max<std::int64_t>(S - i, 1);
        throw StateSpaceTooLarge("exact correlation supports k in {1,2}; ordered state count " +
                                     std::to_string(states),
                                 states);
    }
    const std::int64_t logical_states = k == 1 ? S : S * (S - 1);
    if (logical_states > 100000)
        throw StateSpaceTooLarge(
            "state space too large: " + std::to_string(logical_states) + " ordered tuples",
            logical_states);

    const std::vector<double> field = bernoulli_parameter_field(rho0, n, geom);
    const SparseChain chain = stirring_chain(geom, k);
    const std::int64_t start = k == 1 ? x[0] : x[0] * S + x[1];
    const std::vector<double> dist = transient_distribution(chain, start, t);

    double value = 0.0;
    if (k == 1) {
        for (Site a = 0; a < S; ++a)
            value += dist[static_cast<std::size_t>(a)] * field[static_cast<std::size_t>(a)];
    } else {
        for (Site a = 0; a < S; ++a)
            for (Site b = 0; b < S; ++b) {
                const double p = dist[static_cast<std::size_t>(a * S + b)];
                if (p == 0.0) continue;
                value += p * field[static_cast<std::size_t>(a)] * field[static_cast<std::size_t>(b)];
            }
    }
    return value;
}

}  // namespace sepsim

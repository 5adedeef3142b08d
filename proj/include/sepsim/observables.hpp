#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "sepsim/errors.hpp"
#include "sepsim/state.hpp"
#include "sepsim/test_function.hpp"
#include "sepsim/torus.hpp"

namespace sepsim {

// The five macroscopic variables plus the nearest-neighbour pair measure.
enum class ObservableKind : std::uint8_t {
    Empirical,         // (1/n) sum eta(x) delta_x
    UniFlux,           // (eps^2/n) sum W~ per directed edge
    UniCollision,      // (eps^2/(eps^d n^2)) sum C~ per directed edge
    NetFlux,           // (eps/n) signed W~ difference per bond
    NetCollision,      // (eps/(sqrt(eps^d) n)) signed C~ difference per bond
    NearestNeighbour,  // (1/(eps^d n^2)) occupied adjacent pairs
};

inline const char* observable_name(ObservableKind k) {
    switch (k) {
        case ObservableKind::Empirical: return "empirical";
        case ObservableKind::UniFlux: return "uni_flux";
        case ObservableKind::UniCollision: return "uni_collision";
        case ObservableKind::NetFlux: return "net_flux";
        case ObservableKind::NetCollision: return "net_collision";
        case ObservableKind::NearestNeighbour: return "nearest_neighbour";
    }
    return "?";
}

inline ObservableKind observable_from_name(const std::string& s) {
    for (auto k : {ObservableKind::Empirical, ObservableKind::UniFlux, ObservableKind::UniCollision,
                   ObservableKind::NetFlux, ObservableKind::NetCollision,
                   ObservableKind::NearestNeighbour})
        if (s == observable_name(k)) return k;
    throw ConfigError("unknown observable: " + s);
}

// Index shape the observable pairs against.
inline FnShape observable_shape(ObservableKind k) {
    switch (k) {
        case ObservableKind::Empirical: return FnShape::scalar;
        case ObservableKind::UniFlux:
        case ObservableKind::UniCollision: return FnShape::per_axis_sign;
        default: return FnShape::per_axis;
    }
}

// Single source of truth for the rescaling prefactors.
inline double observable_prefactor(ObservableKind k, const TorusGeometry& geom, std::int64_t n) {
    const double eps = geom.eps();
    const double eps_d = 1.0 / static_cast<double>(geom.site_count());
    const double nd = static_cast<double>(n);
    switch (k) {
        case ObservableKind::Empirical: return 1.0 / nd;
        case ObservableKind::UniFlux: return eps * eps / nd;
        case ObservableKind::UniCollision: return eps * eps / (eps_d * nd * nd);
        case ObservableKind::NetFlux: return eps / nd;
        case ObservableKind::NetCollision: return eps / (std::sqrt(eps_d) * nd);
        case ObservableKind::NearestNeighbour: return 1.0 / (eps_d * nd * nd);
    }
    return 0.0;
}

namespace detail {

inline void require_shape(const TestFunction& phi, FnShape s, const char* what) {
    if (phi.shape() != s) throw UsageError(std::string("test function shape mismatch for ") + what);
}

}  // namespace detail

// <phi, rho^n>: average of phi over particle positions, rescaled by 1/n.
inline double pair_empirical(const TestFunction& phi, const Configuration& state, std::int64_t n,
                             const TorusGeometry& geom) {
    detail::require_shape(phi, FnShape::scalar, "empirical pairing");
    const auto& f = phi.scalar_comp();
    std::vector<double> pos(static_cast<std::size_t>(geom.dim()));
    double acc = 0.0;
    for (Site s : state.particle_sites()) {
        geom.position(s, pos);
        acc += f(pos);
    }
    return acc / static_cast<double>(n);
}

// Counter pairings. Unidirectional kinds sum every directed edge; net kinds
// sum each bond once with the signed counter difference, evaluated at the
// bond midpoint.
inline double pair_counters(ObservableKind kind, const TestFunction& phi,
                            const CounterField& counters, std::int64_t n,
                            const TorusGeometry& geom) {
    const double pref = observable_prefactor(kind, geom, n);
    std::vector<double> mid(static_cast<std::size_t>(geom.dim()));
    double acc = 0.0;
    switch (kind) {
        case ObservableKind::UniFlux:
        case ObservableKind::UniCollision: {
            detail::require_shape(phi, FnShape::per_axis_sign, "unidirectional pairing");
            const auto& field =
                kind == ObservableKind::UniFlux ? counters.jumps : counters.collisions;
            for (Site s = 0; s < geom.site_count(); ++s) {
                for (int axis = 0; axis < geom.dim(); ++axis) {
                    for (int sign = 0; sign < 2; ++sign) {
                        const EdgeId e = geom.edge_id(s, axis, sign);
                        const auto c = field[static_cast<std::size_t>(e)];
                        if (c == 0) continue;
                        geom.edge_midpoint({s, axis, sign}, mid);
                        acc += static_cast<double>(c) * phi.axis_sign_comp(axis, sign)(mid);
                    }
                }
            }
            return pref * acc;
        }
        case ObservableKind::NetFlux:
        case ObservableKind::NetCollision: {
            detail::require_shape(phi, FnShape::per_axis, "net pairing");
            const auto& field =
                kind == ObservableKind::NetFlux ? counters.jumps : counters.collisions;
            for (Site s = 0; s < geom.site_count(); ++s) {
                for (int axis = 0; axis < geom.dim(); ++axis) {
                    const DirectedEdge fw{s, axis, 0};
                    const EdgeId e_fw = geom.edge_id(fw);
                    const EdgeId e_bw = geom.edge_id(geom.reverse(fw));
                    const auto diff = static_cast<double>(field[static_cast<std::size_t>(e_fw)]) -
                                      static_cast<double>(field[static_cast<std::size_t>(e_bw)]);
                    if (diff == 0.0) continue;
                    geom.edge_midpoint(fw, mid);
                    acc += diff * phi.axis_comp(axis)(mid);
                }
            }
            return pref * acc;
        }
        default:
            throw UsageError("pair_counters only handles flux/collision kinds");
    }
}

// <phi, Lambda^n>: each occupied nearest pair counted once from its source
// in positive direction.
inline double pair_nn_measure(const TestFunction& phi, const Configuration& state, std::int64_t n,
                              const TorusGeometry& geom) {
    detail::require_shape(phi, FnShape::per_axis, "nearest-neighbour pairing");
    const double pref = observable_prefactor(ObservableKind::NearestNeighbour, geom, n);
    std::vector<double> mid(static_cast<std::size_t>(geom.dim()));
    double acc = 0.0;
    for (Site s : state.particle_sites()) {
        for (int axis = 0; axis < geom.dim(); ++axis) {
            if (!state.occupied(geom.neighbour(s, axis, 0))) continue;
            geom.edge_midpoint({s, axis, 0}, mid);
            acc += phi.axis_comp(axis)(mid);
        }
    }
    return pref * acc;
}

// Generator drift of <phi, W^n> evaluated on the configuration:
// (1/n) sum over particles and (axis,sign) of (1 - eta(target)) phi at the
// bond midpoint. Equals <phi,rho^n> - eps^d n <phi,Lambda^n> when Lambda's
// axis component is paired against both signs.
inline double drift_uniflux(const TestFunction& phi, const Configuration& state, std::int64_t n,
                            const TorusGeometry& geom) {
    detail::require_shape(phi, FnShape::per_axis_sign, "unidirectional flux drift");
    std::vector<double> mid(static_cast<std::size_t>(geom.dim()));
    double acc = 0.0;
    for (Site s : state.particle_sites()) {
        for (int axis = 0; axis < geom.dim(); ++axis) {
            for (int sign = 0; sign < 2; ++sign) {
                if (state.occupied(geom.neighbour(s, axis, sign))) continue;
                geom.edge_midpoint({s, axis, sign}, mid);
                acc += phi.axis_sign_comp(axis, sign)(mid);
            }
        }
    }
    return acc / static_cast<double>(n);
}

// Generator drift of <phi, C^n>: (1/(eps^d n^2)) sum of phi over blocked
// attempts. Each adjacent pair drives both orientations, so pairing an
// all-ones phi over every component yields twice the pair count times the
// Lambda prefactor.
inline double drift_unicol(const TestFunction& phi, const Configuration& state, std::int64_t n,
                           const TorusGeometry& geom) {
    detail::require_shape(phi, FnShape::per_axis_sign, "unidirectional collision drift");
    const double pref = observable_prefactor(ObservableKind::NearestNeighbour, geom, n);
    std::vector<double> mid(static_cast<std::size_t>(geom.dim()));
    double acc = 0.0;
    for (Site s : state.particle_sites()) {
        for (int axis = 0; axis < geom.dim(); ++axis) {
            for (int sign = 0; sign < 2; ++sign) {
                if (!state.occupied(geom.neighbour(s, axis, sign))) continue;
                geom.edge_midpoint({s, axis, sign}, mid);
                acc += phi.axis_sign_comp(axis, sign)(mid);
            }
        }
    }
    return pref * acc;
}

// Gamma_k fields of <phi, Cbar^n> on the current configuration:
//   k=2: 2 <phi^2, Lambda^n>
//   k=3: 0 (the +/- increments cancel at odd order)
//   k=4: (2 eps^2/(eps^d n^2)) <phi^4, Lambda^n>
inline double gamma_k_netcol(const TestFunction& phi, const Configuration& state, std::int64_t n,
                             const TorusGeometry& geom, int k) {
    detail::require_shape(phi, FnShape::per_axis, "net collision Gamma_k");
    switch (k) {
        case 2:
            return 2.0 * pair_nn_measure(phi.pow(2), state, n, geom);
        case 3:
            return 0.0;
        case 4: {
            const double eps2 = geom.eps() * geom.eps();
            const double eps_d = 1.0 / static_cast<double>(geom.site_count());
            const double nd = static_cast<double>(n);
            return 2.0 * eps2 / (eps_d * nd * nd) * pair_nn_measure(phi.pow(4), state, n, geom);
        }
        default:
            throw UsageError("gamma_k_netcol needs k in {2,3,4}");
    }
}

}  // namespace sepsim

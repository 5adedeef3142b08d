#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sepsim/errors.hpp"
#include "sepsim/observables.hpp"
#include "sepsim/rng.hpp"
#include "sepsim/state.hpp"
#include "sepsim/test_function.hpp"
#include "sepsim/torus.hpp"

namespace sepsim {

struct EventRecord {
    double time = 0.0;
    std::uint32_t edge = 0;
    std::uint8_t kind = 0;  // 0 jump, 1 collision
};

// Exact continuous-time simulation of the exclusion dynamics. The total
// attempt rate is N_p * 2d / eps^2 and depends on the configuration only
// through the conserved particle count, so a single exponential clock with
// uniform (particle, direction) selection reproduces the generator with O(1)
// work per event.
//
// Registered functionals F get their Dynkin integrals accumulated exactly:
// QF and Gamma_2 F are constant between events, and every event only touches
// edges incident to the two affected sites, so the running values are
// maintained incrementally.
class Engine {
public:
    Engine(const TorusGeometry& geom, Configuration initial, std::int64_t n, Rng rng)
        : geom_(&geom),
          state_(std::move(initial)),
          counters_(geom),
          rng_(rng),
          n_(n),
          initial_occupancy_(state_.occupancy()),
          initial_particles_(state_.particle_count()) {}

    const TorusGeometry& geometry() const { return *geom_; }
    const Configuration& state() const { return state_; }
    const CounterField& counters() const { return counters_; }
    std::int64_t scaling_n() const { return n_; }
    std::uint64_t event_count() const { return events_; }
    const std::vector<std::uint8_t>& initial_occupancy() const { return initial_occupancy_; }

    double total_rate() const {
        return static_cast<double>(state_.particle_count()) * 2.0 * geom_->dim() *
               geom_->inv_eps_sq();
    }

    void set_event_budget(std::uint64_t budget) { budget_ = budget; }

    void set_trace(std::vector<EventRecord>* sink, std::size_t cap) {
        trace_ = sink;
        trace_cap_ = cap;
    }

    // --- Dynkin functionals -------------------------------------------------

    std::size_t register_functional(ObservableKind kind, const TestFunction& phi, std::string id) {
        Functional f;
        f.kind = kind;
        f.phi = phi;
        f.id = std::move(id);
        build_deltas(f);
        f.f0 = functional_value_of(f);
        functionals_.push_back(std::move(f));
        recompute_current(functionals_.back());
        return functionals_.size() - 1;
    }

    std::size_t functional_count() const { return functionals_.size(); }
    const std::string& functional_id(std::size_t i) const { return functionals_[i].id; }
    ObservableKind functional_kind(std::size_t i) const { return functionals_[i].kind; }

    double functional_value(std::size_t i) const { return functional_value_of(functionals_[i]); }
    double functional_initial(std::size_t i) const { return functionals_[i].f0; }
    double functional_drift_integral(std::size_t i) const { return functionals_[i].int_q; }
    double functional_qv_integral(std::size_t i) const { return functionals_[i].int_g2; }
    double functional_drift_now(std::size_t i) const {
        return functionals_[i].q_raw * geom_->inv_eps_sq();
    }
    double functional_gamma2_now(std::size_t i) const {
        return functionals_[i].g2_raw * geom_->inv_eps_sq();
    }

    // F(t) - F(0) - int_0^t QF ds
    double martingale(std::size_t i) const {
        const auto& f = functionals_[i];
        return functional_value_of(f) - f.f0 - f.int_q;
    }

    // --- dynamics -----------------------------------------------------------

    EventRecord step_event() {
        if (state_.particle_count() == 0) throw EmptySystem("no particles to move");
        const double dt = rng_.exponential(total_rate());
        integrate(dt);
        state_.time += dt;
        return emit_random_event();
    }

    // Forced attempt for a chosen (particle, direction); no time elapses.
    EventRecord apply_attempt(std::int64_t slot, int axis, int sign) {
        return apply(slot, axis, sign);
    }

    // Run events up to t_target; the final partial waiting interval
    // contributes to the time integrals but produces no event.
    void advance_to(double t_target) {
        if (t_target < state_.time) throw UsageError("advance_to into the past");
        for (auto& f : functionals_) recompute_current(f);
        if (state_.particle_count() == 0) {
            integrate(t_target - state_.time);
            state_.time = t_target;
            return;
        }
        const double rate = total_rate();
        while (true) {
            const double dt = rng_.exponential(rate);
            if (state_.time + dt > t_target) {
                integrate(t_target - state_.time);
                state_.time = t_target;
                return;
            }
            integrate(dt);
            state_.time += dt;
            emit_random_event();
        }
    }

    // --- pathwise audits ------------------------------------------------

    // attempts == jumps + collisions on every directed edge, the net-jump
    // continuity identity per site, conservation of the particle count, and
    // the attempt total against the event count. Throws AuditFailure.
    void audit() const {
        const std::int64_t edges = geom_->directed_edge_count();
        std::uint64_t attempt_total = 0;
        for (std::int64_t e = 0; e < edges; ++e) {
            const auto i = static_cast<std::size_t>(e);
            attempt_total += counters_.attempts[i];
            if (counters_.attempts[i] != counters_.jumps[i] + counters_.collisions[i])
                throw AuditFailure("attempts != jumps + collisions on edge " + std::to_string(e));
        }
        if (attempt_total != events_)
            throw AuditFailure("attempt total does not match event count");
        if (state_.particle_count() != initial_particles_)
            throw AuditFailure("particle count not conserved");
        for (Site s = 0; s < geom_->site_count(); ++s) {
            std::int64_t inflow = 0;
            for (int axis = 0; axis < geom_->dim(); ++axis) {
                for (int sign = 0; sign < 2; ++sign) {
                    const Site nbr = geom_->neighbour(s, axis, sign);
                    const EdgeId in = geom_->edge_id(nbr, axis, 1 - sign);
                    const EdgeId out = geom_->edge_id(s, axis, sign);
                    inflow += static_cast<std::int64_t>(counters_.jumps[static_cast<std::size_t>(in)]) -
                              static_cast<std::int64_t>(counters_.jumps[static_cast<std::size_t>(out)]);
                }
            }
            const std::int64_t delta = static_cast<std::int64_t>(state_.occupancy()[static_cast<std::size_t>(s)]) -
                                       static_cast<std::int64_t>(initial_occupancy_[static_cast<std::size_t>(s)]);
            if (delta != inflow)
                throw AuditFailure("continuity identity violated at site " + std::to_string(s));
        }
    }

private:
    struct Functional {
        ObservableKind kind = ObservableKind::Empirical;
        TestFunction phi;
        std::string id;
        std::vector<double> jump_delta;  // F increment when a jump crosses edge e
        std::vector<double> coll_delta;  // F increment when a collision lands on edge e
        double f0 = 0.0;
        double q_raw = 0.0;   // sum of active increments; QF = q_raw / eps^2
        double g2_raw = 0.0;  // sum of active squared increments
        double int_q = 0.0;
        double int_g2 = 0.0;
    };

    void build_deltas(Functional& f) const {
        const std::int64_t edges = geom_->directed_edge_count();
        f.jump_delta.assign(static_cast<std::size_t>(edges), 0.0);
        f.coll_delta.assign(static_cast<std::size_t>(edges), 0.0);
        const double pref = observable_prefactor(f.kind, *geom_, n_);
        std::vector<double> mid(static_cast<std::size_t>(geom_->dim()));
        std::vector<double> pos_from(static_cast<std::size_t>(geom_->dim()));
        std::vector<double> pos_to(static_cast<std::size_t>(geom_->dim()));
        for (EdgeId e = 0; e < edges; ++e) {
            const DirectedEdge de = geom_->edge_of(e);
            const auto i = static_cast<std::size_t>(e);
            switch (f.kind) {
                case ObservableKind::Empirical: {
                    geom_->position(de.source, pos_from);
                    geom_->position(geom_->edge_target(de), pos_to);
                    const auto& fn = f.phi.scalar_comp();
                    f.jump_delta[i] = pref * (fn(pos_to) - fn(pos_from));
                    break;
                }
                case ObservableKind::UniFlux:
                    geom_->edge_midpoint(de, mid);
                    f.jump_delta[i] = pref * f.phi.axis_sign_comp(de.axis, de.sign)(mid);
                    break;
                case ObservableKind::UniCollision:
                    geom_->edge_midpoint(de, mid);
                    f.coll_delta[i] = pref * f.phi.axis_sign_comp(de.axis, de.sign)(mid);
                    break;
                case ObservableKind::NetFlux:
                    geom_->edge_midpoint(de, mid);
                    f.jump_delta[i] =
                        pref * (de.sign == 0 ? 1.0 : -1.0) * f.phi.axis_comp(de.axis)(mid);
                    break;
                case ObservableKind::NetCollision:
                    geom_->edge_midpoint(de, mid);
                    f.coll_delta[i] =
                        pref * (de.sign == 0 ? 1.0 : -1.0) * f.phi.axis_comp(de.axis)(mid);
                    break;
                case ObservableKind::NearestNeighbour:
                    throw UsageError("the pair measure is not a cumulative functional");
            }
        }
    }

    double functional_value_of(const Functional& f) const {
        switch (f.kind) {
            case ObservableKind::Empirical:
                return pair_empirical(f.phi, state_, n_, *geom_);
            default:
                return pair_counters(f.kind, f.phi, counters_, n_, *geom_);
        }
    }

    // contribution of edge e to (q_raw, g2_raw) given endpoint occupancies
    static std::pair<double, double> edge_contribution(const Functional& f, std::size_t e,
                                                       bool src, bool tgt) {
        if (!src) return {0.0, 0.0};
        const double delta = tgt ? f.coll_delta[e] : f.jump_delta[e];
        return {delta, delta * delta};
    }

    void recompute_current(Functional& f) const {
        f.q_raw = 0.0;
        f.g2_raw = 0.0;
        for (Site s : state_.particle_sites()) {
            for (int axis = 0; axis < geom_->dim(); ++axis) {
                for (int sign = 0; sign < 2; ++sign) {
                    const auto e = static_cast<std::size_t>(geom_->edge_id(s, axis, sign));
                    const bool tgt = state_.occupied(geom_->neighbour(s, axis, sign));
                    const auto [q, g] = edge_contribution(f, e, true, tgt);
                    f.q_raw += q;
                    f.g2_raw += g;
                }
            }
        }
    }

    void integrate(double dt) {
        if (dt == 0.0 || functionals_.empty()) return;
        const double scale = geom_->inv_eps_sq() * dt;
        for (auto& f : functionals_) {
            f.int_q += f.q_raw * scale;
            f.int_g2 += f.g2_raw * scale;
        }
    }

    EventRecord emit_random_event() {
        const auto slot = static_cast<std::int64_t>(
            rng_.bounded(static_cast<std::uint64_t>(state_.particle_count())));
        const auto dir = static_cast<int>(rng_.bounded(static_cast<std::uint64_t>(2 * geom_->dim())));
        return apply(slot, dir >> 1, dir & 1);
    }

    EventRecord apply(std::int64_t slot, int axis, int sign) {
        if (events_ >= budget_)
            throw BudgetError("event budget exhausted at t=" + std::to_string(state_.time));
        const Site from = state_.particle_site(slot);
        const Site to = geom_->neighbour(from, axis, sign);
        const EdgeId e = geom_->edge_id(from, axis, sign);
        const bool blocked = state_.occupied(to);
        counters_.record_attempt(e, !blocked);
        ++events_;

        if (!blocked) {
            if (!functionals_.empty()) {
                gather_affected(from, to);
                snapshot_contributions(/*before=*/true);
                state_.move_particle(slot, to);
                snapshot_contributions(/*before=*/false);
            } else {
                state_.move_particle(slot, to);
            }
        }

        EventRecord rec{state_.time, static_cast<std::uint32_t>(e),
                        static_cast<std::uint8_t>(blocked ? 1 : 0)};
        if (trace_ && trace_->size() < trace_cap_) trace_->push_back(rec);
        return rec;
    }

    // Directed edges whose activity can change when `from` empties and `to`
    // fills: the out- and in-edges of both sites.
    void gather_affected(Site from, Site to) {
        affected_.clear();
        auto push = [&](EdgeId e) {
            for (EdgeId known : affected_)
                if (known == e) return;
            affected_.push_back(e);
        };
        for (Site s : {from, to}) {
            for (int axis = 0; axis < geom_->dim(); ++axis) {
                for (int sign = 0; sign < 2; ++sign) {
                    push(geom_->edge_id(s, axis, sign));
                    push(geom_->edge_id(geom_->neighbour(s, axis, sign), axis, 1 - sign));
                }
            }
        }
    }

    void snapshot_contributions(bool before) {
        for (std::size_t fi = 0; fi < functionals_.size(); ++fi) {
            auto& f = functionals_[fi];
            double q = 0.0, g = 0.0;
            for (EdgeId e : affected_) {
                const DirectedEdge de = geom_->edge_of(e);
                const bool src = state_.occupied(de.source);
                const bool tgt = state_.occupied(geom_->edge_target(de));
                const auto [cq, cg] = edge_contribution(f, static_cast<std::size_t>(e), src, tgt);
                q += cq;
                g += cg;
            }
            if (before) {
                f.q_raw -= q;
                f.g2_raw -= g;
            } else {
                f.q_raw += q;
                f.g2_raw += g;
            }
        }
    }

    const TorusGeometry* geom_;
    Configuration state_;
    CounterField counters_;
    Rng rng_;
    std::int64_t n_;
    std::vector<std::uint8_t> initial_occupancy_;
    std::int64_t initial_particles_;
    std::vector<Functional> functionals_;
    std::vector<EdgeId> affected_;
    std::uint64_t events_ = 0;
    std::uint64_t budget_ = std::uint64_t(1) << 62;
    std::vector<EventRecord>* trace_ = nullptr;
    std::size_t trace_cap_ = 0;
};

}  // namespace sepsim

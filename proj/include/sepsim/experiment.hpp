#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sepsim/config.hpp"
#include "sepsim/engine.hpp"
#include "sepsim/errors.hpp"
#include "sepsim/initcond.hpp"
#include "sepsim/limits.hpp"
#include "sepsim/observables.hpp"
#include "sepsim/stats.hpp"

namespace sepsim {

// Everything a replica needs, resolved once per lattice size and shared
// read-only between workers.
struct ResolvedSetup {
    TorusGeometry geom;
    const DensityProfile* rho0;
    std::vector<double> parameter_field;
    std::int64_t n = 0;
    double T = 0.0;
    std::vector<double> sample_times;
    const std::vector<TestFunction>* phis;
    std::vector<std::pair<ObservableKind, std::size_t>> requests;     // pairings to record
    std::vector<std::pair<ObservableKind, std::size_t>> functionals;  // Dynkin registrations
    std::uint64_t seed = 0;
    std::uint64_t event_budget = 0;
};

struct ReplicaResult {
    std::vector<double> pairings;  // [request * samples + sample]
    std::vector<double> mart;      // [functional * samples + sample]
    std::vector<double> qvint;     // running integral of Gamma_2
    std::uint64_t events = 0;
    std::string error;
    std::vector<EventRecord> trace;
};

inline double record_pairing(ObservableKind kind, const TestFunction& phi, const Engine& eng) {
    switch (kind) {
        case ObservableKind::Empirical:
            return pair_empirical(phi, eng.state(), eng.scaling_n(), eng.geometry());
        case ObservableKind::NearestNeighbour:
            return pair_nn_measure(phi, eng.state(), eng.scaling_n(), eng.geometry());
        default:
            return pair_counters(kind, phi, eng.counters(), eng.scaling_n(), eng.geometry());
    }
}

// Deterministic function of (seed, replica_id): one full trajectory with all
// recordings and the pathwise audits at every sample time.
inline ReplicaResult run_replica(const ResolvedSetup& s, std::int64_t replica_id,
                                 bool want_trace = false, std::size_t trace_cap = 100000) {
    ReplicaResult out;
    Rng rng(s.seed, static_cast<std::uint64_t>(replica_id));
    Configuration init = sample_initial(s.parameter_field, s.geom, rng);
    Engine eng(s.geom, std::move(init), s.n, rng);
    eng.set_event_budget(s.event_budget);
    if (want_trace) eng.set_trace(&out.trace, trace_cap);

    for (const auto& [kind, pi] : s.functionals)
        eng.register_functional(kind, (*s.phis)[pi], observable_name(kind));

    const std::size_t ns = s.sample_times.size();
    out.pairings.assign(s.requests.size() * ns, 0.0);
    out.mart.assign(s.functionals.size() * ns, 0.0);
    out.qvint.assign(s.functionals.size() * ns, 0.0);

    for (std::size_t ti = 0; ti < ns; ++ti) {
        eng.advance_to(s.sample_times[ti]);
        eng.audit();
        for (std::size_t ri = 0; ri < s.requests.size(); ++ri)
            out.pairings[ri * ns + ti] =
                record_pairing(s.requests[ri].first, (*s.phis)[s.requests[ri].second], eng);
        for (std::size_t fi = 0; fi < s.functionals.size(); ++fi) {
            out.mart[fi * ns + ti] = eng.martingale(fi);
            out.qvint[fi * ns + ti] = eng.functional_qv_integral(fi);
        }
    }
    out.events = eng.event_count();
    return out;
}

// One CSV row per recorded statistic.
struct ReportRow {
    std::int64_t L = 0;
    std::int64_t n = 0;
    std::string observable;
    std::string phi;
    double t = 0.0;
    SummaryStats stats;
    std::optional<double> reference;
    std::string check_names;
    std::string status;  // "", "pass" or "fail"
};

struct ReportCheck {
    std::string name;
    std::int64_t L = 0;
    std::string observable;
    std::string phi;
    double t = 0.0;
    CheckRecord record;
};

struct Report {
    nlohmann::json normalized_config;
    std::string hash;
    std::vector<ReportRow> rows;
    std::vector<ReportCheck> checks;
    std::uint64_t total_events = 0;
    std::int64_t replica_failures = 0;
    std::vector<std::string> failure_messages;
    double runtime_seconds = 0.0;
    bool overall_pass = true;
    std::vector<EventRecord> trace;  // replica 0, when debug tracing is on
};

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return std::string(buf);
}

struct Aggregate {
    std::vector<RunningMoments> pairings;
    std::vector<RunningMoments> mart;
    std::vector<RunningMoments> qvint;
};

}  // namespace detail

// Dispatch replicas over a small worker pool. Results are merged in replica
// order, so the report does not depend on the worker count.
inline std::vector<ReplicaResult> run_replicas_parallel(const ResolvedSetup& setup,
                                                        std::int64_t replicas, int threads,
                                                        bool trace_first) {
    std::vector<ReplicaResult> results(static_cast<std::size_t>(replicas));
    const int workers = threads > 0
                            ? threads
                            : std::max(1u, std::thread::hardware_concurrency());
    std::atomic<std::int64_t> next{0};
    auto work = [&]() {
        while (true) {
            const std::int64_t id = next.fetch_add(1);
            if (id >= replicas) return;
            auto& slot = results[static_cast<std::size_t>(id)];
            try {
                slot = run_replica(setup, id, trace_first && id == 0);
            } catch (const std::exception& e) {
                slot.error = e.what();
            }
        }
    };
    if (workers <= 1 || replicas <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int i = 0; i < workers; ++i) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    return results;
}

inline ResolvedSetup resolve_setup(const ExperimentConfig& cfg, std::int64_t L) {
    ResolvedSetup s{TorusGeometry(cfg.d, L),
                    &*cfg.rho0,
                    {},
                    resolve_regime(cfg.regime, L, cfg.d, *cfg.rho0),
                    cfg.T,
                    cfg.sample_times,
                    &cfg.phis,
                    {},
                    cfg.functionals,
                    cfg.seed,
                    cfg.event_budget};
    s.parameter_field = bernoulli_parameter_field(*cfg.rho0, s.n, s.geom);
    for (auto kind : cfg.observables)
        for (std::size_t pi = 0; pi < cfg.phis.size(); ++pi)
            if (cfg.phis[pi].shape() == observable_shape(kind)) s.requests.emplace_back(kind, pi);
    return s;
}

namespace detail {

inline void evaluate_checks(const ExperimentConfig& cfg, const ResolvedSetup& setup,
                            const std::vector<SummaryStats>& pairing_stats,
                            const std::vector<SummaryStats>& mart_stats,
                            const std::vector<SummaryStats>& qv_stats, std::int64_t L,
                            Report& report, std::vector<ReportRow>& rows) {
    const LimitField limit(*cfg.rho0, cfg.regime.limit_alpha());
    const std::size_t ns = setup.sample_times.size();

    auto request_index = [&](ObservableKind kind, std::size_t pi) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < setup.requests.size(); ++i)
            if (setup.requests[i].first == kind && setup.requests[i].second == pi) return i;
        return std::nullopt;
    };
    auto functional_index = [&](ObservableKind kind, std::size_t pi) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < setup.functionals.size(); ++i)
            if (setup.functionals[i].first == kind && setup.functionals[i].second == pi) return i;
        return std::nullopt;
    };
    auto sample_indices = [&](const std::optional<double>& t) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < ns; ++i)
            if (!t || std::abs(setup.sample_times[i] - *t) < 1e-12) idx.push_back(i);
        return idx;
    };
    auto mark_row = [&](const std::string& obs, const std::string& phi, double t,
                        const std::string& name, bool pass) {
        for (auto& r : rows) {
            if (r.observable != obs || r.phi != phi || std::abs(r.t - t) > 1e-12) continue;
            r.check_names += (r.check_names.empty() ? "" : "|") + name;
            if (r.status != "fail") r.status = pass ? "pass" : "fail";
            if (!pass) r.status = "fail";
        }
    };
    auto push_check = [&](const std::string& name, const CheckSpec& c, double t, CheckRecord rec) {
        rec.name = name;
        report.checks.push_back({name, L, c.observable, c.phi, t, rec});
        report.overall_pass = report.overall_pass && rec.pass;
        mark_row(c.observable, c.phi, t, name, rec.pass);
    };

    for (const auto& c : cfg.checks) {
        const ObservableKind kind = observable_from_name(
            c.observable.empty() ? "nearest_neighbour" : c.observable);
        const std::size_t pi = cfg.phi_index(c.phi);
        const TestFunction& phi = cfg.phis[pi];

        if (c.type == "martingale_mean" || c.type == "qv") {
            const auto fi = functional_index(kind, pi);
            if (!fi) throw ConfigError("check references an unregistered functional");
            const std::size_t last = ns - 1;
            if (c.type == "martingale_mean") {
                CheckRecord rec = compare_to_reference(mart_stats[*fi * ns + last], 0.0, 0.0, c.z);
                push_check("martingale_mean:" + c.observable + ":" + c.phi, c,
                           setup.sample_times[last], rec);
            } else {
                const SummaryStats& m = mart_stats[*fi * ns + last];
                const SummaryStats& q = qv_stats[*fi * ns + last];
                CheckRecord rec;
                rec.observed = m.variance;
                rec.reference = q.mean;
                rec.margin = std::abs(m.variance - q.mean);
                rec.tolerance = c.rtol > 0.0 ? c.rtol * std::abs(q.mean) : 0.15 * std::abs(q.mean);
                rec.pass = rec.margin <= rec.tolerance;
                rec.detail = "Var M vs mean integrated Gamma_2";
                push_check("qv:" + c.observable + ":" + c.phi, c, setup.sample_times[last], rec);
            }
            continue;
        }

        const auto ri = request_index(kind, pi);
        if (!ri) throw ConfigError("check references an unrecorded observable pairing");
        for (std::size_t ti : sample_indices(c.t)) {
            const double t = setup.sample_times[ti];
            const SummaryStats& stats = pairing_stats[*ri * ns + ti];
            const std::string tag = c.observable + ":" + c.phi + "@" + fmt_double(t);
            if (c.type == "mean") {
                const double ref = limit.reference(kind, phi, t);
                push_check("mean:" + tag, c, t, mean_check(stats, ref, c.atol, c.rtol, c.z));
            } else if (c.type == "mean_zero") {
                push_check("mean_zero:" + tag, c, t, compare_to_reference(stats, 0.0, 0.0, c.z));
            } else if (c.type == "variance") {
                const double target = limit.netcol_variance_target(phi, t);
                push_check("variance:" + tag, c, t,
                           variance_check(stats, target, c.rtol > 0.0 ? c.rtol : 0.15));
            } else if (c.type == "reject_mean") {
                if (!c.alpha_alt) throw ConfigError("reject_mean needs an alternative alpha");
                std::vector<double> origin(static_cast<std::size_t>(cfg.d), 0.0);
                double alt = 0.0;
                for (int axis = 0; axis < cfg.d; ++axis)
                    for (int sign = 0; sign < 2; ++sign) {
                        const auto& comp = phi.axis_sign_comp(axis, sign);
                        if (comp.is_zero()) continue;
                        const DecayingTrigPoly rho = limit.rho_series();
                        const DecayingTrigPoly integrand =
                            rho.plus(rho.times(rho).scaled(-*c.alpha_alt / limit.l1_norm()));
                        alt += comp.times(integrand.time_integral(t)).torus_integral();
                    }
                push_check("reject_mean:" + tag, c, t, mean_rejects(stats, alt, c.min_z));
            } else if (c.type == "reject_variance") {
                const double alt = c.scale * limit.netcol_variance_target(phi, t);
                push_check("reject_variance:" + tag, c, t, variance_rejects(stats, alt, c.min_z));
            } else if (c.type == "gaussianity") {
                CheckRecord rec;
                const GaussianityResult g = gaussianity_check(stats, c.z_limit);
                rec.observed = std::max(std::abs(g.skew_z), std::abs(g.kurt_z));
                rec.reference = 0.0;
                rec.tolerance = c.z_limit;
                rec.margin = rec.observed;
                rec.pass = g.pass;
                rec.detail = "skew_z=" + fmt_double(g.skew_z) + " kurt_z=" + fmt_double(g.kurt_z);
                push_check("gaussianity:" + tag, c, t, rec);
            } else if (c.type == "nn_bound") {
                // one-sided: mean <= d ||phi||_C ||rho0||_C^2 + z * stderr
                const double b = cfg.d * phi.sup_norm() * cfg.rho0->sup_bound() * cfg.rho0->sup_bound();
                CheckRecord rec;
                rec.observed = stats.mean;
                rec.reference = b;
                rec.tolerance = c.z * stats.stderr_mean;
                rec.margin = stats.mean - b;
                rec.pass = stats.mean <= b + rec.tolerance;
                push_check("nn_bound:" + tag, c, t, rec);
            }
        }
    }
}

}  // namespace detail

inline Report run_experiment(const ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    Report report;
    report.normalized_config = normalized_config_json(cfg);
    report.hash = content_hash(report.normalized_config.dump());

    for (std::int64_t L : cfg.Ls) {
        const ResolvedSetup setup = resolve_setup(cfg, L);
        const std::size_t ns = setup.sample_times.size();
        auto results = run_replicas_parallel(setup, cfg.replicas, cfg.threads, cfg.debug_trace);
        if (cfg.debug_trace && report.trace.empty() && !results.empty())
            report.trace = std::move(results[0].trace);

        std::vector<RunningMoments> pag(setup.requests.size() * ns);
        std::vector<RunningMoments> mart(setup.functionals.size() * ns);
        std::vector<RunningMoments> qv(setup.functionals.size() * ns);
        for (const auto& r : results) {
            if (!r.error.empty()) {
                ++report.replica_failures;
                report.failure_messages.push_back(r.error);
                continue;
            }
            report.total_events += r.events;
            for (std::size_t i = 0; i < pag.size(); ++i) pag[i].add(r.pairings[i]);
            for (std::size_t i = 0; i < mart.size(); ++i) mart[i].add(r.mart[i]);
            for (std::size_t i = 0; i < qv.size(); ++i) qv[i].add(r.qvint[i]);
        }
        if (report.replica_failures > 0) {
            report.overall_pass = false;
            continue;
        }

        std::vector<SummaryStats> pairing_stats(pag.size());
        for (std::size_t i = 0; i < pag.size(); ++i) pairing_stats[i] = summarize(pag[i]);
        std::vector<SummaryStats> mart_stats(mart.size());
        std::vector<SummaryStats> qv_stats(qv.size());
        for (std::size_t i = 0; i < mart.size(); ++i) {
            mart_stats[i] = summarize(mart[i]);
            qv_stats[i] = summarize(qv[i]);
        }

        const LimitField limit(*cfg.rho0, cfg.regime.limit_alpha());
        std::vector<ReportRow> rows;
        for (std::size_t ri = 0; ri < setup.requests.size(); ++ri) {
            const auto [kind, pi] = setup.requests[ri];
            for (std::size_t ti = 0; ti < ns; ++ti) {
                ReportRow row;
                row.L = L;
                row.n = setup.n;
                row.observable = observable_name(kind);
                row.phi = cfg.phi_ids[pi];
                row.t = setup.sample_times[ti];
                row.stats = pairing_stats[ri * ns + ti];
                row.reference = limit.reference(kind, cfg.phis[pi], row.t);
                rows.push_back(std::move(row));
            }
        }
        for (std::size_t fi = 0; fi < setup.functionals.size(); ++fi) {
            const auto [kind, pi] = setup.functionals[fi];
            for (std::size_t ti = 0; ti < ns; ++ti) {
                ReportRow row;
                row.L = L;
                row.n = setup.n;
                row.observable = std::string("martingale_") + observable_name(kind);
                row.phi = cfg.phi_ids[pi];
                row.t = setup.sample_times[ti];
                row.stats = mart_stats[fi * ns + ti];
                row.reference = 0.0;
                rows.push_back(row);
                row.observable = std::string("qvint_") + observable_name(kind);
                row.stats = qv_stats[fi * ns + ti];
                row.reference.reset();
                rows.push_back(std::move(row));
            }
        }

        detail::evaluate_checks(cfg, setup, pairing_stats, mart_stats, qv_stats, L, report, rows);
        for (auto& row : rows) report.rows.push_back(std::move(row));
    }

    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

// --- output ----------------------------------------------------------------

inline std::string report_csv(const ExperimentConfig& cfg, const Report& report) {
    std::string out =
        "experiment_id,L,n,regime,observable,phi_id,t,R,mean,var,stderr,reference,abs_err,check,"
        "status\n";
    for (const auto& r : report.rows) {
        out += cfg.experiment_id + ',' + std::to_string(r.L) + ',' + std::to_string(r.n) + ',' +
               cfg.regime.name() + ',' + r.observable + ',' + r.phi + ',' +
               detail::fmt_double(r.t) + ',' + std::to_string(r.stats.count) + ',' +
               detail::fmt_double(r.stats.mean) + ',' + detail::fmt_double(r.stats.variance) + ',' +
               detail::fmt_double(r.stats.stderr_mean) + ',' +
               (r.reference ? detail::fmt_double(*r.reference) : "") + ',' +
               (r.reference ? detail::fmt_double(std::abs(r.stats.mean - *r.reference)) : "") +
               ',' + r.check_names + ',' + r.status + '\n';
    }
    return out;
}

inline nlohmann::json report_json(const Report& report) {
    nlohmann::json j;
    j["content_hash"] = report.hash;
    j["config"] = report.normalized_config;
    j["total_events"] = report.total_events;
    j["replica_failures"] = report.replica_failures;
    j["failures"] = report.failure_messages;
    j["runtime_seconds"] = report.runtime_seconds;
    j["overall_pass"] = report.overall_pass;
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : report.checks) {
        checks.push_back({{"name", c.name},
                          {"L", c.L},
                          {"observable", c.observable},
                          {"phi", c.phi},
                          {"t", c.t},
                          {"observed", c.record.observed},
                          {"reference", c.record.reference},
                          {"tolerance", c.record.tolerance},
                          {"margin", c.record.margin},
                          {"detail", c.record.detail},
                          {"pass", c.record.pass}});
    }
    j["checks"] = checks;
    return j;
}

inline void write_report_files(const ExperimentConfig& cfg, const Report& report) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    {
        std::ofstream f(fs::path(cfg.out_dir) / "config.normalized.json");
        f << report.normalized_config.dump(2) << '\n';
    }
    {
        std::ofstream f(fs::path(cfg.out_dir) / "report.csv");
        f << report_csv(cfg, report);
    }
    {
        std::ofstream f(fs::path(cfg.out_dir) / "report.json");
        f << report_json(report).dump(2) << '\n';
    }
    if (cfg.debug_trace && !report.trace.empty()) {
        std::ofstream f(fs::path(cfg.out_dir) / "trace.bin", std::ios::binary);
        for (const auto& e : report.trace) {
            f.write(reinterpret_cast<const char*>(&e.time), 8);
            f.write(reinterpret_cast<const char*>(&e.edge), 4);
            f.write(reinterpret_cast<const char*>(&e.kind), 1);
        }
    }
}

}  // namespace sepsim

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sepsim/density.hpp"
#include "sepsim/errors.hpp"
#include "sepsim/observables.hpp"
#include "sepsim/regimes.hpp"
#include "sepsim/test_function.hpp"

namespace sepsim {

// One pass/fail comparison requested in the experiment config.
struct CheckSpec {
    std::string type;  // mean | mean_zero | variance | reject_mean | reject_variance |
                       // gaussianity | martingale_mean | qv | nn_bound
    std::string observable;
    std::string phi;
    std::optional<double> t;  // absent = every sample time
    double atol = 0.0;
    double rtol = 0.0;
    double z = 3.0;
    double min_z = 5.0;
    double z_limit = 4.0;
    double scale = 2.0;                // reject_variance: alternative = scale * target
    std::optional<double> alpha_alt;   // reject_mean: classic formula with this alpha
};

struct ExperimentConfig {
    std::string experiment_id = "experiment";
    int d = 1;
    std::vector<std::int64_t> Ls;
    ScalingRegime regime;
    std::optional<DensityProfile> rho0;
    double T = 0.0;
    std::vector<double> sample_times;
    std::vector<std::string> phi_ids;
    std::vector<TestFunction> phis;
    std::vector<ObservableKind> observables;
    std::vector<std::pair<ObservableKind, std::size_t>> functionals;  // (kind, phi index)
    std::int64_t replicas = 2;
    std::uint64_t seed = 20250101;
    std::uint64_t event_budget = std::uint64_t(2) << 32;
    std::string out_dir = "out";
    int threads = 0;  // 0 = hardware
    bool debug_trace = false;
    std::vector<CheckSpec> checks;
    std::vector<std::string> warnings;

    std::size_t phi_index(const std::string& id) const {
        for (std::size_t i = 0; i < phi_ids.size(); ++i)
            if (phi_ids[i] == id) return i;
        throw ConfigError("unknown test function id: " + id);
    }
};

namespace detail {

inline void parse_checks(const nlohmann::json& j, ExperimentConfig& cfg,
                         std::vector<std::string>& errors) {
    static const std::set<std::string> known = {"mean",       "mean_zero",       "variance",
                                                "reject_mean", "reject_variance", "gaussianity",
                                                "martingale_mean", "qv",          "nn_bound"};
    for (const auto& cj : j) {
        CheckSpec c;
        c.type = cj.value("type", "");
        if (!known.count(c.type)) {
            errors.push_back("unknown check type: '" + c.type + "'");
            continue;
        }
        c.observable = cj.value("observable", c.type == "nn_bound" ? "nearest_neighbour" : "");
        c.phi = cj.value("phi", "");
        if (cj.contains("t")) c.t = cj.at("t").get<double>();
        c.atol = cj.value("atol", 0.0);
        c.rtol = cj.value("rtol", 0.0);
        c.z = cj.value("z", 3.0);
        c.min_z = cj.value("min_z", 5.0);
        c.z_limit = cj.value("z_limit", 4.0);
        c.scale = cj.value("scale", 2.0);
        if (cj.contains("alpha")) c.alpha_alt = cj.at("alpha").get<double>();
        cfg.checks.push_back(std::move(c));
    }
}

}  // namespace detail

// Parse and normalise a raw config, collecting every violation instead of
// stopping at the first.
inline ExperimentConfig validate_config(const nlohmann::json& j) {
    ExperimentConfig cfg;
    std::vector<std::string> errors;

    cfg.experiment_id = j.value("experiment_id", std::string("experiment"));
    cfg.d = j.value("d", 1);
    if (cfg.d < 1) errors.push_back("d must be >= 1");

    if (!j.contains("L")) {
        errors.push_back("L required");
    } else if (j.at("L").is_array()) {
        for (const auto& v : j.at("L")) cfg.Ls.push_back(v.get<std::int64_t>());
    } else {
        cfg.Ls.push_back(j.at("L").get<std::int64_t>());
    }
    for (std::int64_t L : cfg.Ls)
        if (L < 3) errors.push_back("L must be >= 3, got " + std::to_string(L));

    if (!j.contains("regime")) {
        errors.push_back("regime required");
    } else {
        try {
            cfg.regime = regime_from_json(j.at("regime"));
        } catch (const SimError& e) {
            errors.push_back(e.what());
        }
    }

    if (!j.contains("rho0")) {
        errors.push_back("rho0 required");
    } else {
        try {
            cfg.rho0 = density_profile_from_json(j.at("rho0"), cfg.d >= 1 ? cfg.d : 1);
        } catch (const std::exception& e) {
            errors.push_back(std::string("rho0: ") + e.what());
        }
    }

    if (!j.contains("T")) {
        errors.push_back("T required");
    } else {
        cfg.T = j.at("T").get<double>();
        if (cfg.T < 0.0) errors.push_back("T must be >= 0");
    }

    if (j.contains("sample_times")) {
        for (const auto& v : j.at("sample_times")) cfg.sample_times.push_back(v.get<double>());
    } else {
        cfg.sample_times.push_back(cfg.T);
    }
    if (cfg.sample_times.empty()) errors.push_back("sample_times must be nonempty");
    for (std::size_t i = 0; i < cfg.sample_times.size(); ++i) {
        if (cfg.sample_times[i] < 0.0) errors.push_back("sample times must be >= 0");
        if (i > 0 && cfg.sample_times[i] <= cfg.sample_times[i - 1])
            errors.push_back("sample times must be strictly increasing");
    }
    if (!cfg.sample_times.empty() && j.contains("T") && cfg.sample_times.back() > cfg.T)
        errors.push_back("sample time " + std::to_string(cfg.sample_times.back()) + " exceeds T");

    if (j.contains("test_functions")) {
        for (const auto& tj : j.at("test_functions")) {
            const std::string id = tj.value("id", "");
            if (id.empty()) {
                errors.push_back("test function without id");
                continue;
            }
            if (std::find(cfg.phi_ids.begin(), cfg.phi_ids.end(), id) != cfg.phi_ids.end()) {
                errors.push_back("duplicate test function id: " + id);
                continue;
            }
            try {
                cfg.phis.push_back(test_function_from_json(tj, cfg.d >= 1 ? cfg.d : 1));
                cfg.phi_ids.push_back(id);
            } catch (const std::exception& e) {
                errors.push_back("test function '" + id + "': " + e.what());
            }
        }
    }

    if (j.contains("observables")) {
        for (const auto& v : j.at("observables")) {
            try {
                cfg.observables.push_back(observable_from_name(v.get<std::string>()));
            } catch (const SimError& e) {
                errors.push_back(e.what());
            }
        }
    } else {
        cfg.observables = {ObservableKind::Empirical,    ObservableKind::UniFlux,
                           ObservableKind::UniCollision, ObservableKind::NetFlux,
                           ObservableKind::NetCollision, ObservableKind::NearestNeighbour};
    }

    if (j.contains("functionals")) {
        for (const auto& fj : j.at("functionals")) {
            try {
                const ObservableKind kind = observable_from_name(fj.at("observable").get<std::string>());
                const std::size_t pi = cfg.phi_index(fj.at("phi").get<std::string>());
                if (kind == ObservableKind::NearestNeighbour)
                    throw ConfigError("the pair measure cannot be registered as a functional");
                if (cfg.phis[pi].shape() != observable_shape(kind))
                    throw ConfigError("functional phi shape mismatch for " +
                                      std::string(observable_name(kind)));
                cfg.functionals.emplace_back(kind, pi);
            } catch (const std::exception& e) {
                errors.push_back(std::string("functional: ") + e.what());
            }
        }
    }

    cfg.replicas = j.value("replicas", std::int64_t(2));
    cfg.seed = j.value("seed", std::uint64_t(20250101));
    cfg.event_budget = j.value("event_budget", std::uint64_t(2) << 32);
    cfg.out_dir = j.value("out_dir", std::string("out"));
    cfg.threads = j.value("threads", 0);
    cfg.debug_trace = j.value("debug_trace", false);

    if (j.contains("checks")) detail::parse_checks(j.at("checks"), cfg, errors);
    if (!cfg.checks.empty() && cfg.replicas < 2)
        errors.push_back("statistical checks need replicas >= 2");

    // Check references must resolve; martingale checks imply a registration.
    for (const auto& c : cfg.checks) {
        if (c.t) {
            bool hit = false;
            for (double s : cfg.sample_times) hit = hit || std::abs(s - *c.t) < 1e-12;
            if (!hit)
                errors.push_back("check '" + c.type + "' at t=" + std::to_string(*c.t) +
                                 " matches no sample time");
        }
        if (c.type == "nn_bound") continue;
        if (c.observable.empty()) {
            errors.push_back("check '" + c.type + "' missing observable");
            continue;
        }
        try {
            const ObservableKind kind = observable_from_name(c.observable);
            if ((c.type == "variance" || c.type == "reject_variance") &&
                kind != ObservableKind::NetCollision)
                errors.push_back("check '" + c.type + "' has a closed-form target only for "
                                 "net_collision");
            if (!c.phi.empty()) {
                const std::size_t pi = cfg.phi_index(c.phi);
                if (cfg.phis[pi].shape() != observable_shape(kind))
                    errors.push_back("check phi '" + c.phi + "' has wrong shape for " + c.observable);
                if (c.type == "martingale_mean" || c.type == "qv") {
                    const auto entry = std::make_pair(kind, pi);
                    if (std::find(cfg.functionals.begin(), cfg.functionals.end(), entry) ==
                        cfg.functionals.end())
                        cfg.functionals.push_back(entry);
                }
            } else {
                errors.push_back("check '" + c.type + "' missing phi");
            }
        } catch (const SimError& e) {
            errors.push_back(e.what());
        }
    }

    // Feasibility and budget estimate per lattice size.
    if (cfg.rho0 && j.contains("regime")) {
        for (std::int64_t L : cfg.Ls) {
            if (L < 3) continue;
            try {
                const std::int64_t n = resolve_regime(cfg.regime, L, cfg.d, *cfg.rho0);
                const double expected = static_cast<double>(n) * cfg.rho0->l1_norm() * 2.0 * cfg.d *
                                        static_cast<double>(L) * static_cast<double>(L) * cfg.T *
                                        static_cast<double>(cfg.replicas);
                if (expected > 0.8 * static_cast<double>(cfg.event_budget))
                    cfg.warnings.push_back("expected events " + std::to_string(expected) +
                                           " exceed 80% of the budget at L=" + std::to_string(L));
            } catch (const SimError& e) {
                errors.push_back(std::string(e.what()) + " (L=" + std::to_string(L) + ")");
            }
        }
    }

    if (!errors.empty()) {
        std::string joined = "invalid config:";
        for (const auto& e : errors) joined += "\n  - " + e;
        throw ConfigError(joined);
    }
    return cfg;
}

inline ExperimentConfig validate_config_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return validate_config(j);
}

// Round-trip of the normalised configuration, for the echo file and hashing.
inline nlohmann::json normalized_config_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["experiment_id"] = cfg.experiment_id;
    j["d"] = cfg.d;
    j["L"] = cfg.Ls;
    j["regime"] = regime_to_json(cfg.regime);
    j["rho0"] = density_profile_to_json(*cfg.rho0);
    j["T"] = cfg.T;
    j["sample_times"] = cfg.sample_times;
    nlohmann::json fns = nlohmann::json::array();
    for (std::size_t i = 0; i < cfg.phis.size(); ++i) {
        nlohmann::json fj = test_function_to_json(cfg.phis[i]);
        fj["id"] = cfg.phi_ids[i];
        fns.push_back(fj);
    }
    j["test_functions"] = fns;
    nlohmann::json obs = nlohmann::json::array();
    for (auto k : cfg.observables) obs.push_back(observable_name(k));
    j["observables"] = obs;
    nlohmann::json fnj = nlohmann::json::array();
    for (const auto& [kind, pi] : cfg.functionals)
        fnj.push_back({{"observable", observable_name(kind)}, {"phi", cfg.phi_ids[pi]}});
    j["functionals"] = fnj;
    j["replicas"] = cfg.replicas;
    j["seed"] = cfg.seed;
    j["event_budget"] = cfg.event_budget;
    j["out_dir"] = cfg.out_dir;
    j["threads"] = cfg.threads;
    j["debug_trace"] = cfg.debug_trace;
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : cfg.checks) {
        nlohmann::json cj;
        cj["type"] = c.type;
        if (!c.observable.empty()) cj["observable"] = c.observable;
        if (!c.phi.empty()) cj["phi"] = c.phi;
        if (c.t) cj["t"] = *c.t;
        cj["atol"] = c.atol;
        cj["rtol"] = c.rtol;
        cj["z"] = c.z;
        cj["min_z"] = c.min_z;
        cj["z_limit"] = c.z_limit;
        cj["scale"] = c.scale;
        if (c.alpha_alt) cj["alpha"] = *c.alpha_alt;
        checks.push_back(cj);
    }
    j["checks"] = checks;
    return j;
}

// FNV-1a over the normalised config dump: a content fingerprint for the
// report, stable across runs and platforms.
inline std::string content_hash(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[19];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace sepsim

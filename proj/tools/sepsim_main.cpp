#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sepsim/config.hpp"
#include "sepsim/dual.hpp"
#include "sepsim/experiment.hpp"

namespace {

// exit codes: 0 pass, 1 check failure, 2 config error, 3 runtime error
constexpr int kOk = 0;
constexpr int kCheckFailure = 1;
constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw sepsim::ConfigError("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> replicas;
    std::optional<std::string> out;
    std::optional<int> threads;
    bool debug_trace = false;
};

sepsim::ExperimentConfig load_config(const std::string& path, const Overrides& o) {
    nlohmann::json j = nlohmann::json::parse(read_file(path));
    if (o.seed) j["seed"] = *o.seed;
    if (o.replicas) j["replicas"] = *o.replicas;
    if (o.out) j["out_dir"] = *o.out;
    if (o.threads) j["threads"] = *o.threads;
    if (o.debug_trace) j["debug_trace"] = true;
    return sepsim::validate_config(j);
}

int cmd_validate(const std::string& path, const Overrides& o) {
    const auto cfg = load_config(path, o);
    for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << sepsim::normalized_config_json(cfg).dump(2) << '\n';
    return kOk;
}

int cmd_run(const std::string& path, const Overrides& o) {
    const auto cfg = load_config(path, o);
    for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << '\n';
    const sepsim::Report report = sepsim::run_experiment(cfg);
    sepsim::write_report_files(cfg, report);
    for (const auto& c : report.checks)
        std::cout << (c.record.pass ? "[pass] " : "[FAIL] ") << c.name
                  << "  observed=" << c.record.observed << " reference=" << c.record.reference
                  << " tolerance=" << c.record.tolerance << '\n';
    std::cout << "events=" << report.total_events << " runtime=" << report.runtime_seconds
              << "s -> " << cfg.out_dir << "/report.{csv,json}\n";
    if (report.replica_failures > 0) {
        for (const auto& m : report.failure_messages) std::cerr << "replica error: " << m << '\n';
        return kRuntimeError;
    }
    return report.overall_pass ? kOk : kCheckFailure;
}

// Correlation oracle: Monte-Carlo stirring estimate vs the uniformized exact
// value, one JSON line per (points, time) pair.
int cmd_oracle(const std::string& path, const Overrides& o) {
    nlohmann::json j = nlohmann::json::parse(read_file(path));
    if (o.seed) j["seed"] = *o.seed;
    const int d = j.value("d", 1);
    const std::int64_t L = j.at("L").get<std::int64_t>();
    const sepsim::TorusGeometry geom(d, L);
    const sepsim::DensityProfile rho0 = sepsim::density_profile_from_json(j.at("rho0"), d);
    std::int64_t n = 0;
    if (j.contains("n")) {
        n = j.at("n").get<std::int64_t>();
    } else if (j.contains("regime")) {
        n = sepsim::resolve_regime(sepsim::regime_from_json(j.at("regime")), L, d, rho0);
    } else {
        throw sepsim::ConfigError("oracle config needs n or regime");
    }
    const auto paths = j.value("paths", std::int64_t(100000));
    const bool exact = j.value("exact", true);
    sepsim::Rng rng(j.value("seed", std::uint64_t(20250101)), 0);

    for (const auto& pj : j.at("points")) {
        std::vector<sepsim::Site> pts;
        for (const auto& coord : pj) {
            std::vector<std::int64_t> c = coord.get<std::vector<std::int64_t>>();
            pts.push_back(geom.site_of(c));
        }
        for (const auto& tj : j.at("times")) {
            const double t = tj.get<double>();
            const auto est = sepsim::estimate_kpoint(pts, t, rho0, n, geom, paths, rng);
            nlohmann::json line;
            line["x"] = pj;
            line["t"] = t;
            line["estimate"] = est.estimate;
            line["stderr"] = est.stderr_est;
            if (exact) line["exact"] = sepsim::exact_kpoint(pts, t, rho0, n, geom);
            std::cout << line.dump() << '\n';
        }
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"event-driven exclusion-process simulator and verification harness"};
    app.require_subcommand(1);

    Overrides o;
    std::string config_path;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", config_path, "JSON config file")->required();
        sub->add_option("--seed", [&o](const std::vector<std::string>& v) {
            o.seed = std::stoull(v[0]);
            return true;
        }, "override master seed");
        sub->add_option("--replicas", [&o](const std::vector<std::string>& v) {
            o.replicas = std::stoll(v[0]);
            return true;
        }, "override replica count");
        sub->add_option("--out", [&o](const std::vector<std::string>& v) {
            o.out = v[0];
            return true;
        }, "override output directory");
        sub->add_option("--threads", [&o](const std::vector<std::string>& v) {
            o.threads = std::stoi(v[0]);
            return true;
        }, "worker threads (0 = hardware)");
        sub->add_flag("--debug-trace", o.debug_trace, "dump the first 1e5 events of replica 0");
    };

    CLI::App* run = app.add_subcommand("run", "run an experiment and evaluate its checks");
    add_common(run);
    CLI::App* oracle = app.add_subcommand("oracle", "k-point correlation oracle");
    add_common(oracle);
    CLI::App* validate = app.add_subcommand("validate", "validate and echo a config");
    add_common(validate);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, o);
        if (oracle->parsed()) return cmd_oracle(config_path, o);
        if (validate->parsed()) return cmd_validate(config_path, o);
    } catch (const sepsim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const sepsim::StateSpaceTooLarge& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kConfigError;
}

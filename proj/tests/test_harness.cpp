#include <doctest.h>

#include <string>

#include "helpers.hpp"
#include "sepsim/config.hpp"
#include "sepsim/experiment.hpp"

using namespace sepsim;

namespace {

nlohmann::json small_fixture() {
    return nlohmann::json{
        {"experiment_id", "fixture"},
        {"d", 1},
        {"L", 16},
        {"regime", {{"type", "classic"}, {"alpha", 0.5}}},
        {"rho0",
         {{"a0", 0.5},
          {"terms", {{{"axis", 0}, {"freq", 1}, {"phase", "cos"}, {"amp", 0.25}}}}}},
        {"T", 0.05},
        {"sample_times", {0.025, 0.05}},
        {"test_functions",
         {{{"id", "one"}, {"kind", "const"}, {"c", 1.0}},
          {{"id", "plus_one"},
           {"kind", "const"},
           {"c", 1.0},
           {"component", {{"axis", 0}, {"sign", "+"}}}},
          {{"id", "ax_one"}, {"kind", "const"}, {"c", 1.0}, {"component", {{"axis", 0}}}}}},
        {"observables", {"empirical", "uni_flux", "net_collision", "nearest_neighbour"}},
        {"replicas", 8},
        {"seed", 777},
        {"out_dir", "test_out"}};
}

}  // namespace

TEST_CASE("config validation aggregates every violation") {
    nlohmann::json bad = small_fixture();
    bad.erase("T");
    bad["sample_times"] = {0.2, 0.1};
    bad["L"] = 2;
    try {
        validate_config(bad);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("T required") != std::string::npos);
        CHECK(msg.find("strictly increasing") != std::string::npos);
        CHECK(msg.find("L must be >= 3") != std::string::npos);
    }
}

TEST_CASE("sample time beyond the horizon is rejected") {
    nlohmann::json bad = small_fixture();
    bad["sample_times"] = {0.025, 0.2};
    CHECK_THROWS_AS(validate_config(bad), ConfigError);
}

TEST_CASE("checks must target a recorded sample time") {
    nlohmann::json bad = small_fixture();
    bad["checks"] = nlohmann::json::array({nlohmann::json{{"type", "mean"},
                                                          {"observable", "empirical"},
                                                          {"phi", "one"},
                                                          {"t", 0.03},
                                                          {"atol", 0.1}}});
    CHECK_THROWS_AS(validate_config(bad), ConfigError);

    nlohmann::json bad2 = small_fixture();
    bad2["checks"] = nlohmann::json::array({nlohmann::json{
        {"type", "variance"}, {"observable", "uni_flux"}, {"phi", "plus_one"}, {"t", 0.05}}});
    CHECK_THROWS_AS(validate_config(bad2), ConfigError);
}

TEST_CASE("a valid classic fixture resolves its particle number") {
    nlohmann::json ok = small_fixture();
    ok["L"] = 64;
    const ExperimentConfig cfg = validate_config(ok);
    CHECK(resolve_regime(cfg.regime, 64, 1, *cfg.rho0) == 64);
    const nlohmann::json echo = normalized_config_json(cfg);
    CHECK(echo.at("replicas").get<int>() == 8);
    CHECK(echo.at("seed").get<std::uint64_t>() == 777);
}

TEST_CASE("duplicate and malformed test functions are reported") {
    nlohmann::json bad = small_fixture();
    bad["test_functions"].push_back({{"id", "one"}, {"kind", "const"}, {"c", 2.0}});
    bad["test_functions"].push_back({{"id", "zz"}, {"kind", "trig"}});
    CHECK_THROWS_AS(validate_config(bad), ConfigError);
}

TEST_CASE("zero-horizon experiment reports initial pairings") {
    nlohmann::json j = small_fixture();
    j["T"] = 0.0;
    j["sample_times"] = {0.0};
    j["replicas"] = 2;
    const ExperimentConfig cfg = validate_config(j);
    const Report report = run_experiment(cfg);
    CHECK(report.replica_failures == 0);
    CHECK(report.total_events == 0);
    for (const auto& row : report.rows) {
        if (row.observable == "uni_flux" || row.observable == "net_collision")
            CHECK(row.stats.mean == doctest::Approx(0.0));
    }
    CHECK(report.overall_pass);
}

TEST_CASE("reports are byte-identical across reruns and worker counts") {
    nlohmann::json j = small_fixture();
    const ExperimentConfig cfg1 = validate_config(j);
    const Report r1 = run_experiment(cfg1);

    const ExperimentConfig cfg2 = validate_config(j);
    const Report r2 = run_experiment(cfg2);

    nlohmann::json j3 = j;
    j3["threads"] = 1;
    const ExperimentConfig cfg3 = validate_config(j3);
    const Report r3 = run_experiment(cfg3);

    CHECK(report_csv(cfg1, r1) == report_csv(cfg2, r2));
    CHECK(report_csv(cfg1, r1) == report_csv(cfg3, r3));
    CHECK(r1.hash == r2.hash);
}

TEST_CASE("replica errors surface in the report") {
    nlohmann::json j = small_fixture();
    j["event_budget"] = 5;
    const ExperimentConfig cfg = validate_config(j);
    CHECK_FALSE(cfg.warnings.empty());  // budget warning fires first
    const Report report = run_experiment(cfg);
    CHECK(report.replica_failures > 0);
    CHECK_FALSE(report.overall_pass);
    CHECK_FALSE(report.failure_messages.empty());
}

TEST_CASE("checks evaluate against closed-form references") {
    nlohmann::json j = small_fixture();
    j["replicas"] = 64;
    j["L"] = 32;
    j["checks"] = nlohmann::json::array({
        nlohmann::json{{"type", "mean"}, {"observable", "empirical"}, {"phi", "one"},
                       {"atol", 0.05}, {"z", 4}},
        nlohmann::json{{"type", "mean_zero"}, {"observable", "net_collision"}, {"phi", "ax_one"},
                       {"t", 0.05}, {"z", 4}},
        nlohmann::json{{"type", "nn_bound"}, {"phi", "ax_one"}, {"z", 3}},
        nlohmann::json{{"type", "martingale_mean"}, {"observable", "uni_flux"},
                       {"phi", "plus_one"}, {"z", 4}},
    });
    const ExperimentConfig cfg = validate_config(j);
    CHECK(cfg.functionals.size() == 1);  // martingale check registered its functional
    const Report report = run_experiment(cfg);
    CHECK(report.replica_failures == 0);
    CHECK(report.checks.size() == 2 + 1 + 2 + 1);  // mean at both times, nn_bound at both times
    for (const auto& c : report.checks) {
        INFO(c.name, " observed ", c.record.observed, " ref ", c.record.reference);
        CHECK(c.record.pass);
    }
    const std::string csv = report_csv(cfg, report);
    CHECK(csv.find("experiment_id,L,n,regime,observable,phi_id,t,R,mean,var,stderr,reference,"
                   "abs_err,check,status") == 0);
    const nlohmann::json rj = report_json(report);
    CHECK(rj.contains("content_hash"));
    CHECK(rj.at("checks").size() == report.checks.size());
}

TEST_CASE("lattice sweeps resolve n per size") {
    nlohmann::json j = small_fixture();
    j["L"] = {8, 16};
    j["replicas"] = 2;
    const ExperimentConfig cfg = validate_config(j);
    const Report report = run_experiment(cfg);
    CHECK(report.replica_failures == 0);
    bool saw8 = false, saw16 = false;
    for (const auto& row : report.rows) {
        if (row.L == 8) {
            saw8 = true;
            CHECK(row.n == 8);  // 0.5 * 8 / 0.5
        }
        if (row.L == 16) {
            saw16 = true;
            CHECK(row.n == 16);
        }
    }
    CHECK(saw8);
    CHECK(saw16);
}

TEST_CASE("a failing check flips the overall status") {
    nlohmann::json j = small_fixture();
    j["checks"] = nlohmann::json::array({nlohmann::json{{"type", "mean"},
                                                        {"observable", "empirical"},
                                                        {"phi", "one"},
                                                        {"t", 0.05},
                                                        {"atol", 1e-12},
                                                        {"z", 1e-6}}});
    const ExperimentConfig cfg = validate_config(j);
    const Report report = run_experiment(cfg);
    CHECK(report.checks.size() == 1);
    CHECK_FALSE(report.checks[0].record.pass);
    CHECK_FALSE(report.overall_pass);
    // the CSV row carrying the check is marked as failed
    bool marked = false;
    for (const auto& row : report.rows)
        if (row.status == "fail") marked = true;
    CHECK(marked);
}

TEST_CASE("trace capture through the harness") {
    nlohmann::json j = small_fixture();
    j["replicas"] = 2;
    j["debug_trace"] = true;
    const ExperimentConfig cfg = validate_config(j);
    const Report report = run_experiment(cfg);
    CHECK_FALSE(report.trace.empty());
    for (std::size_t i = 1; i < report.trace.size(); ++i)
        CHECK(report.trace[i].time >= report.trace[i - 1].time);
}

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include <json.hpp>

#include "accsim/scenario.hpp"

using namespace accsim;
using nlohmann::json;

namespace {

// Minimal valid scenario document; tests mutate copies of it.
json minimal_doc() {
    return json{
        {"schema_version", 1},
        {"name", "minimal"},
        {"estimator", {{"gains", {-9.0, -26.0, -24.0}}}},
        {"controller",
         {{"d_r", 5.5}, {"T", 1.0}, {"E_v", 0.346}, {"E_u", 1.0}, {"U_min", -0.923}}},
        {"sim", {{"horizon", 2.0}}},
        {"lead_profile",
         {{"segments", json::array({{{"kind", "constant_accel"}, {"duration", 2.0}, {"u1", 0.0}}})}}},
    };
}

struct TempFile {
    std::filesystem::path path;
    explicit TempFile(const std::string& contents) {
        path = std::filesystem::temp_directory_path() /
               ("accsim_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++) + ".json");
        std::ofstream out(path);
        out << contents;
    }
    ~TempFile() { std::filesystem::remove(path); }
    static inline int counter = 0;
};

} // namespace

TEST_CASE("serialization round trip is lossless") {
    for (const std::string& name : preset_names()) {
        const Scenario sc = scenario_preset(name);
        const json j1 = scenario_to_json(sc);
        const Scenario back = scenario_from_json(j1);
        const json j2 = scenario_to_json(back);
        INFO("preset " << name);
        CHECK(j1 == j2);
        CHECK(back.name == sc.name);
        CHECK(back.gains.g1 == sc.gains.g1);
        CHECK(back.controller.E_v == sc.controller.E_v);
        CHECK(back.sim.horizon == sc.sim.horizon);
        CHECK(back.lead_segments.size() == sc.lead_segments.size());
        CHECK(back.analysis.settle_time == sc.analysis.settle_time);
    }
}

TEST_CASE("estimator can be specified by its eigenvalues") {
    SECTION("three real eigenvalues") {
        json doc = minimal_doc();
        doc["estimator"] = {{"eigenvalues", {-2.0, -3.0, -4.0}}};
        const Scenario sc = scenario_from_json(doc);
        CHECK(sc.gains.g1 == Catch::Approx(-9.0).margin(1e-9));
        CHECK(sc.gains.g2 == Catch::Approx(-26.0).margin(1e-9));
        CHECK(sc.gains.g3 == Catch::Approx(-24.0).margin(1e-9));
    }
    SECTION("a conjugate pair as [re, im] entries") {
        json doc = minimal_doc();
        doc["estimator"] = {
            {"eigenvalues", json::array({-4.0, json::array({-3.0, 1.0}),
                                         json::array({-3.0, -1.0})})}};
        const Scenario sc = scenario_from_json(doc);
        // (s+4)(s^2+6s+10): coefficient map gives (-10, -34, -40).
        CHECK(sc.gains.g1 == Catch::Approx(-10.0).margin(1e-9));
        CHECK(sc.gains.g2 == Catch::Approx(-34.0).margin(1e-9));
        CHECK(sc.gains.g3 == Catch::Approx(-40.0).margin(1e-9));
    }
    SECTION("an unmatched complex eigenvalue is rejected") {
        json doc = minimal_doc();
        doc["estimator"] = {
            {"eigenvalues", json::array({-4.0, json::array({-3.0, 1.0}),
                                         json::array({-3.0, 2.0})})}};
        CHECK_THROWS_AS(scenario_from_json(doc), spectrum_error);
    }
    SECTION("unstable eigenvalues fail the gain validation") {
        json doc = minimal_doc();
        doc["estimator"] = {{"eigenvalues", {2.0, -3.0, -4.0}}};
        CHECK_THROWS_AS(scenario_from_json(doc), config_error);
    }
}

TEST_CASE("estimator gains and eigenvalues are mutually exclusive") {
    json doc = minimal_doc();
    doc["estimator"]["eigenvalues"] = {-2.0, -3.0, -4.0};
    CHECK_THROWS_AS(scenario_from_json(doc), config_error);
    doc["estimator"].erase("gains");
    doc["estimator"].erase("eigenvalues");
    CHECK_THROWS_AS(scenario_from_json(doc), config_error);
}

TEST_CASE("unknown keys are rejected wherever they appear") {
    auto expect_reject = [](json doc, const char* what) {
        INFO(what);
        CHECK_THROWS_AS(scenario_from_json(doc), config_error);
    };
    json doc = minimal_doc();
    doc["extra"] = 1;
    expect_reject(doc, "top level");

    doc = minimal_doc();
    doc["controller"]["kappa"] = 1.0; // derived quantity, not an input
    expect_reject(doc, "controller");

    doc = minimal_doc();
    doc["sim"]["step"] = 0.001;
    expect_reject(doc, "sim");

    doc = minimal_doc();
    doc["lead_profile"]["segments"][0]["u_j"] = 0.5; // wrong field for the kind
    expect_reject(doc, "segment");

    doc = minimal_doc();
    doc["analysis"] = {{"settle", 1.0}};
    expect_reject(doc, "analysis");

    doc = minimal_doc();
    doc["sim"]["followers"] = json::array({{{"d0", 6.0}, {"v0", 0.0}, {"gap", 1.0}}});
    expect_reject(doc, "follower");
}

TEST_CASE("malformed scenario values are rejected with context") {
    auto load = [](json doc) { return scenario_from_json(doc); };

    json doc = minimal_doc();
    doc["schema_version"] = 2;
    CHECK_THROWS_WITH(load(doc), Catch::Matchers::ContainsSubstring("schema_version"));

    doc = minimal_doc();
    doc["controller"].erase("d_r");
    CHECK_THROWS_WITH(load(doc), Catch::Matchers::ContainsSubstring("d_r"));

    doc = minimal_doc();
    doc["controller"]["T"] = "one second";
    CHECK_THROWS_WITH(load(doc), Catch::Matchers::ContainsSubstring("T"));

    doc = minimal_doc();
    doc["sim"]["integrator"] = "rk45";
    CHECK_THROWS_WITH(load(doc), Catch::Matchers::ContainsSubstring("integrator"));

    doc = minimal_doc();
    doc["sim"]["mode"] = "hybrid";
    CHECK_THROWS_WITH(load(doc), Catch::Matchers::ContainsSubstring("mode"));

    doc = minimal_doc();
    doc["lead_profile"]["segments"][0]["kind"] = "teleport";
    CHECK_THROWS_WITH(load(doc), Catch::Matchers::ContainsSubstring("kind"));

    doc = minimal_doc();
    doc["lead_profile"]["segments"] = json::array();
    CHECK_THROWS_AS(load(doc), config_error);

    doc = minimal_doc();
    doc["analysis"] = {{"settle_time", 5.0}}; // beyond the 2 s horizon
    CHECK_THROWS_WITH(load(doc), Catch::Matchers::ContainsSubstring("settle_time"));

    doc = minimal_doc();
    doc["analysis"] = {{"min_periods", 0}};
    CHECK_THROWS_WITH(load(doc), Catch::Matchers::ContainsSubstring("min_periods"));

    // Cross validation runs on load: profile shorter than the horizon.
    doc = minimal_doc();
    doc["lead_profile"]["segments"][0]["duration"] = 1.0;
    CHECK_THROWS_AS(load(doc), config_error);
}

TEST_CASE("defaults fill in the optional fields") {
    json doc = minimal_doc();
    const Scenario sc = scenario_from_json(doc);
    CHECK(sc.sim.dt == 1e-3);
    CHECK(sc.sim.record_stride == 10);
    CHECK(sc.sim.integrator == Integrator::rk4);
    CHECK(sc.sim.mode == ControllerMode::baseline);
    CHECK_FALSE(sc.sim.comm_period.has_value());
    CHECK(sc.sim.n_followers == 1);
    CHECK(sc.sim.noise_stddev == 0.0);
    // alpha defaults to the negated distance-error gain, beta to one.
    CHECK(sc.controller.alpha_slope == 9.0);
    CHECK(sc.controller.beta_slope == 1.0);
    // Default follower: co-moving at the equilibrium spacing plus the
    // conservative margin (baseline mode).
    REQUIRE(sc.sim.followers.size() == 1);
    CHECK(sc.sim.followers[0].d0 ==
          Catch::Approx(5.5 + 0.346 / 9.0).margin(1e-12));
    CHECK(sc.sim.followers[0].v0 == 0.0);

    json named = minimal_doc();
    named.erase("name");
    CHECK(scenario_from_json(named).name == "unnamed");

    json adaptive = minimal_doc();
    adaptive["sim"]["mode"] = "adaptive";
    const Scenario sa = scenario_from_json(adaptive);
    CHECK(sa.sim.followers[0].d0 == Catch::Approx(5.5).margin(1e-12));
}

TEST_CASE("a tight error bound loads with a warning") {
    json doc = minimal_doc();
    doc["controller"]["E_v"] = 0.05;
    const Scenario sc = scenario_from_json(doc);
    REQUIRE_FALSE(sc.warnings.empty());
    CHECK(sc.warnings[0].find("E_v") != std::string::npos);
}

TEST_CASE("every preset loads, validates, and self-describes") {
    const std::vector<std::string> names = preset_names();
    CHECK(names.size() == 6);
    for (const std::string& name : names) {
        const Scenario sc = scenario_preset(name);
        CHECK(sc.name == name);
        CHECK(sc.sim.horizon > 0.0);
        // The profile must actually cover the horizon (validated on build,
        // double-checked here).
        CHECK_NOTHROW(sc.profile().at(sc.sim.horizon));
    }
    CHECK_THROWS_AS(scenario_preset("warp-drive"), config_error);
}

TEST_CASE("scenario files load from disk") {
    const Scenario sc = scenario_preset("accel");

    SECTION("round trip through a file") {
        const TempFile f(scenario_to_json(sc).dump(2));
        const Scenario back = load_scenario(f.path.string());
        CHECK(scenario_to_json(back) == scenario_to_json(sc));
    }
    SECTION("missing file names the path") {
        CHECK_THROWS_WITH(load_scenario("/nonexistent/path.json"),
                          Catch::Matchers::ContainsSubstring("/nonexistent/path.json"));
    }
    SECTION("malformed document reports a parse error") {
        const TempFile f("{ \"schema_version\": 1, ");
        CHECK_THROWS_WITH(load_scenario(f.path.string()),
                          Catch::Matchers::ContainsSubstring("parse error"));
    }
    SECTION("wrong JSON types surface as configuration errors") {
        const TempFile f("{ \"schema_version\": \"one\" }");
        CHECK_THROWS_AS(load_scenario(f.path.string()), config_error);
    }
}

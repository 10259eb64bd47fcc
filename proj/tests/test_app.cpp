#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <json.hpp>

#include "accsim/app.hpp"

using namespace accsim;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("accsim_app_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
    static inline int counter = 0;
};

json read_json(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in);
    return json::parse(in);
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in);
    std::string line;
    std::getline(in, line);
    return line;
}

} // namespace

TEST_CASE("simulate writes its artifacts and reports the margins") {
    TempDir dir;
    RunOptions opt;
    opt.scenario = "preset:accel";
    opt.horizon = 3.0;
    opt.out_dir = dir.str();

    std::ostringstream out, err;
    CHECK(run_simulate(opt, out, err) == exit_ok);

    REQUIRE(fs::exists(dir.path / "trace.csv"));
    REQUIRE(fs::exists(dir.path / "summary.json"));

    const std::string header = first_line(dir.path / "trace.csv");
    CHECK(header.rfind("t,lead_v1,lead_u1,lead_uj,f0_d,", 0) == 0);

    const json summary = read_json(dir.path / "summary.json");
    REQUIRE(summary.contains("scenario"));
    REQUIRE(summary.contains("report"));
    REQUIRE(summary.contains("warnings"));
    CHECK(summary["scenario"]["name"] == "accel");
    CHECK(summary["report"]["min_h"].get<double>() > 0.0);
    CHECK(summary["report"]["bound_violations"].get<int>() == 0);

    CHECK(out.str().find("min h") != std::string::npos);
    // The standard margins sit a hair under the worst-case stationary error,
    // so the feasibility warning is expected on stderr.
    CHECK(err.str().find("warning") != std::string::npos);
}

TEST_CASE("simulate honors the scenario overrides") {
    TempDir dir;
    RunOptions opt;
    opt.scenario = "preset:const-jerk";
    opt.horizon = 2.0;
    opt.dt = 2e-3;
    opt.out_dir = dir.str();

    std::ostringstream out, err;
    REQUIRE(run_simulate(opt, out, err) == exit_ok);
    const json summary = read_json(dir.path / "summary.json");
    CHECK(summary["scenario"]["sim"]["horizon"].get<double>() == 2.0);
    CHECK(summary["scenario"]["sim"]["dt"].get<double>() == 2e-3);
}

TEST_CASE("simulate fails cleanly on configuration errors") {
    TempDir dir;
    std::ostringstream out, err;

    SECTION("unknown preset") {
        RunOptions opt;
        opt.scenario = "preset:warp-drive";
        opt.out_dir = dir.str();
        CHECK(run_simulate(opt, out, err) == exit_failure);
        CHECK(err.str().find("error") != std::string::npos);
    }
    SECTION("missing scenario file") {
        RunOptions opt;
        opt.scenario = dir.str() + "/does_not_exist.json";
        opt.out_dir = dir.str();
        CHECK(run_simulate(opt, out, err) == exit_failure);
        CHECK(err.str().find("does_not_exist.json") != std::string::npos);
    }
    SECTION("override breaks the step count") {
        RunOptions opt;
        opt.scenario = "preset:accel";
        opt.horizon = 3.0005; // not an integer number of 1 ms steps
        opt.out_dir = dir.str();
        CHECK(run_simulate(opt, out, err) == exit_failure);
    }
    SECTION("nothing is half-written on failure") {
        RunOptions opt;
        opt.scenario = "preset:warp-drive";
        opt.out_dir = dir.str();
        run_simulate(opt, out, err);
        CHECK_FALSE(fs::exists(dir.path / "trace.csv"));
        CHECK_FALSE(fs::exists(dir.path / "summary.json"));
    }
}

TEST_CASE("simulate reports a numeric blow-up as a runtime failure") {
    TempDir dir;
    // A legal but absurd configuration: the stiff loop diverges to overflow.
    const Scenario base = scenario_preset("accel");
    json doc = scenario_to_json(base);
    doc["name"] = "blowup";
    doc["sim"]["dt"] = 1e6;
    doc["sim"]["horizon"] = 4e7;
    doc["sim"]["record_stride"] = 1;
    doc["lead_profile"]["segments"] =
        json::array({{{"kind", "constant_accel"}, {"duration", 4e7}, {"u1", 0.0}}});
    doc["analysis"]["settle_time"] = 0.0;
    const fs::path sc_path = dir.path / "blowup.json";
    std::ofstream(sc_path) << doc.dump(2);

    RunOptions opt;
    opt.scenario = sc_path.string();
    opt.out_dir = dir.str();
    std::ostringstream out, err;
    CHECK(run_simulate(opt, out, err) == exit_failure);
    CHECK(err.str().find("numeric failure") != std::string::npos);
    CHECK(err.str().find("t=") != std::string::npos);
}

TEST_CASE("certify passes the nominal maneuver") {
    TempDir dir;
    RunOptions opt;
    opt.scenario = "preset:accel";
    opt.out_dir = dir.str();

    std::ostringstream out, err;
    CHECK(run_certify(opt, out, err) == exit_ok);
    CHECK(out.str().find("[PASS] constraint h stays nonnegative") != std::string::npos);
    CHECK(out.str().find("[PASS] one-sided error bounds hold") != std::string::npos);
    CHECK(out.str().find("[PASS] certificate value decreases") != std::string::npos);
    CHECK(out.str().find("[PASS] forward invariance certificate") != std::string::npos);
    CHECK(out.str().find("[FAIL]") == std::string::npos);
    CHECK(fs::exists(dir.path / "trace.csv"));
    CHECK(fs::exists(dir.path / "summary.json"));
}

TEST_CASE("certify fails a scenario whose assumed bound is too tight") {
    TempDir dir;
    // Braking maneuver (negative jerk drives the velocity error positive),
    // with the assumed bound far below the stationary error it induces:
    // violations must be detected.
    const Scenario base = scenario_preset("decel");
    json doc = scenario_to_json(base);
    doc["name"] = "overtight";
    doc["controller"]["E_v"] = 0.05;
    const fs::path sc_path = dir.path / "overtight.json";
    std::ofstream(sc_path) << doc.dump(2);

    RunOptions opt;
    opt.scenario = sc_path.string();
    opt.out_dir = dir.str();
    std::ostringstream out, err;
    CHECK(run_certify(opt, out, err) == exit_cert_failed);
    CHECK(out.str().find("[FAIL] one-sided error bounds hold") != std::string::npos);
    // Artifacts are still written so the failure can be inspected.
    CHECK(fs::exists(dir.path / "trace.csv"));
    CHECK(fs::exists(dir.path / "summary.json"));
}

TEST_CASE("certify checks the adaptation envelope in adaptive mode") {
    TempDir dir;
    RunOptions opt;
    opt.scenario = "preset:ccc-2s";
    opt.out_dir = dir.str();
    std::ostringstream out, err;
    CHECK(run_certify(opt, out, err) == exit_ok);
    CHECK(out.str().find("[PASS] adaptation stays within its envelope") != std::string::npos);
    CHECK(out.str().find("forward invariance certificate") == std::string::npos);
}

TEST_CASE("margin comparison runs both modes and quantifies the saving") {
    TempDir dir;
    RunOptions opt; // empty scenario: the comparison picks its default
    opt.out_dir = dir.str();

    std::ostringstream out, err;
    CHECK(run_ccc_compare(opt, out, err) == exit_ok);

    REQUIRE(fs::exists(dir.path / "trace_adaptive.csv"));
    REQUIRE(fs::exists(dir.path / "trace_constant.csv"));
    REQUIRE(fs::exists(dir.path / "summary.json"));

    const json summary = read_json(dir.path / "summary.json");
    const double mean_a = summary["comparison"]["mean_h_adaptive"].get<double>();
    const double mean_c = summary["comparison"]["mean_h_constant"].get<double>();
    const double saved = summary["comparison"]["headway_saved"].get<double>();
    CHECK(mean_a <= mean_c);
    CHECK(saved == Catch::Approx(mean_c - mean_a).margin(1e-15));
    CHECK(out.str().find("headway saved") != std::string::npos);

    SECTION("a scenario without communication events is rejected") {
        RunOptions bad;
        bad.scenario = "preset:accel";
        bad.out_dir = dir.str();
        std::ostringstream out2, err2;
        CHECK(run_ccc_compare(bad, out2, err2) == exit_failure);
        CHECK(err2.str().find("comm_period") != std::string::npos);
    }
}

TEST_CASE("platoon front end shares the simulate implementation") {
    TempDir dir;
    RunOptions opt;
    opt.scenario = "preset:string-4";
    opt.out_dir = dir.str();

    std::ostringstream out, err;
    CHECK(run_platoon(opt, out, err) == exit_ok);
    const std::string header = first_line(dir.path / "trace.csv");
    CHECK(header.find("f2_v") != std::string::npos); // three followers recorded
    const json summary = read_json(dir.path / "summary.json");
    CHECK(summary["report"]["steady_state"]["followers"].size() == 3);
    REQUIRE(summary["report"].contains("string_gains"));
    for (const auto& g : summary["report"]["string_gains"])
        CHECK(g.get<double>() < 1.0);
}

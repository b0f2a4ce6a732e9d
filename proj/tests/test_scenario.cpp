#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "emvac/scenario.hpp"

using namespace emvac;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    REQUIRE(f);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

const std::string kScenarioDir = std::string(EMVAC_SOURCE_DIR) + "/scenarios/";

std::string minimal_magnetic_ab() {
    return R"({
      "scenario": "magnetic_ab",
      "sources": [{"type": "solenoid", "radius": 0.05, "length": 2.5,
                   "turns": 1000, "current": 0.002}],
      "arms": [
        {"carrier": {"charge": 1.6e-19}, "shape": "semicircle", "radius": 0.1,
         "side": 1, "samples": 64},
        {"carrier": {"charge": 1.6e-19}, "shape": "semicircle", "radius": 0.1,
         "side": -1, "samples": 64}
      ]
    })";
}

std::string tmp_dir() {
    static int counter = 0;
    std::string d = "/tmp/emvac_test_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++);
    std::string cmd = "mkdir -p " + d;
    REQUIRE(std::system(cmd.c_str()) == 0);
    return d;
}

} // namespace

TEST_CASE("minimal scenario fills defaults") {
    ScenarioConfig c = parse_scenario(minimal_magnetic_ab());
    CHECK(c.kind == ScenarioKind::magnetic_ab);
    CHECK(c.quadrature.min_separation == 0.0);
    CHECK(c.quadrature.deterministic_reduction);
    CHECK(c.quadrature.softening_mode == SofteningMode::exclude_pair);
    REQUIRE(c.sources.size() == 1);
    CHECK(c.sources[0].solenoid_loops == 200);
    CHECK(c.sources[0].solenoid_segments == 64);
    CHECK(c.arms[0].speed == 1000.0);
    CHECK(c.probes_per_axis == 5);
    CHECK(c.outputs.empty());
}

TEST_CASE("missing required block names the field") {
    std::string text = R"({"scenario": "shielded_ab",
      "sources": [
        {"type": "solenoid", "radius": 0.05, "length": 0.4, "turns": 100, "current": 1.0},
        {"type": "point_charge", "charge": 1e-19, "position": [0.4, 0, 0]}
      ]})";
    try {
        parse_scenario(text);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("shield") != std::string::npos);
    }
}

TEST_CASE("unknown key suggests the nearest schema key") {
    std::string text = R"({
      "scenario": "magnetic_ab",
      "sources": [{"type": "solenod"}],
      "arms": []
    })";
    try {
        parse_scenario(text);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("solenoid") != std::string::npos);
    }

    std::string text2 = minimal_magnetic_ab();
    auto pos = text2.find("\"arms\"");
    text2.replace(pos, 6, "\"army\"");
    try {
        parse_scenario(text2);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        CHECK(msg.find("army") != std::string::npos);
        CHECK(msg.find("arms") != std::string::npos);
    }
}

TEST_CASE("syntax errors report line and column") {
    try {
        parse_scenario("{\n  \"scenario\": \"magnetic_ab\",\n  oops\n}");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        CHECK(msg.find("line 3") != std::string::npos);
        CHECK(msg.find("column") != std::string::npos);
    }
}

TEST_CASE("missing referenced file rejected at parse time") {
    std::string text = R"({
      "scenario": "custom_energy",
      "sources": [
        {"type": "element_list", "file": "/nonexistent/elements.txt"},
        {"type": "point_charge", "charge": 1e-9, "position": [1, 0, 0]}
      ]
    })";
    CHECK_THROWS_AS(parse_scenario(text), ConfigError);
}

TEST_CASE("unknown scenario kind and bad types rejected") {
    CHECK_THROWS_AS(parse_scenario(R"({"scenario": "frobnicate"})"), ConfigError);
    CHECK_THROWS_AS(parse_scenario(R"([1, 2])"), ConfigError);
    CHECK_THROWS_AS(parse_scenario(
                        R"({"scenario": "magnetic_ab", "sources": [{"type": "solenoid",
                         "radius": "wide", "length": 1, "turns": 1, "current": 1}],
                         "arms": []})"),
                    ConfigError);
}

TEST_CASE("round trip: parse, serialize, parse") {
    for (const char* name : {"magnetic_ab.json", "electric_ab.json", "ac.json",
                             "shielded_ab.json", "ac_tubes.json", "lorentz_check.json"}) {
        ScenarioConfig a = parse_scenario(slurp(kScenarioDir + name));
        ScenarioConfig b = parse_scenario(a.to_json().dump());
        CHECK(a == b);
    }
}

TEST_CASE("electric scenario run produces outputs and is deterministic") {
    std::string dir = tmp_dir();
    ScenarioConfig c = parse_scenario(slurp(kScenarioDir + "electric_ab.json"));
    RunReport r1 = run_scenario(c, dir);
    CHECK(r1.all_gates_passed());
    CHECK(r1.primary_result == doctest::Approx(759.633724405));
    std::string csv1 = slurp(dir + "/electric_ab.csv");
    std::string dir2 = tmp_dir();
    run_scenario(c, dir2);
    std::string csv2 = slurp(dir2 + "/electric_ab.csv");
    CHECK(csv1 == csv2); // byte-identical rerun
    CHECK(csv1.find("759.633724405") != std::string::npos); // 12 significant digits
    // phase output exists and carries the relative error
    std::string phase = slurp(dir + "/electric_ab_phase.txt");
    CHECK(phase.find("relative_error") != std::string::npos);
}

TEST_CASE("gate failure throws after outputs are written") {
    std::string dir = tmp_dir();
    ScenarioConfig c = parse_scenario(slurp(kScenarioDir + "electric_ab.json"));
    c.gates["relative_error"] = 1e-30; // unsatisfiable
    CHECK_THROWS_AS(run_scenario(c, dir), GateFailure);
    CHECK(std::ifstream(dir + "/electric_ab.csv").good());
}

TEST_CASE("unwritable output path is an execution error") {
    ScenarioConfig c = parse_scenario(slurp(kScenarioDir + "electric_ab.json"));
    c.outputs = {{"report", "/nonexistent_dir/report.txt"}};
    CHECK_THROWS_AS(run_scenario(c, ""), std::runtime_error);
}

TEST_CASE("degenerate sweep equals the baseline run") {
    std::string text = slurp(kScenarioDir + "electric_ab.json");
    ScenarioConfig c = parse_scenario(text);
    RunReport base = run_scenario(c, tmp_dir());
    std::string csv = sweep(text, "timelines.u2.volts", {1e-9}, "");
    std::istringstream lines(csv);
    std::string header, row;
    std::getline(lines, header);
    std::getline(lines, row);
    CHECK(header == csv_header());
    CHECK(row.find("electric_ab,timelines.u2.volts,1e-09,") == 0);
    char expect[64];
    std::snprintf(expect, sizeof(expect), "%.12g", base.primary_result);
    CHECK(row.find(expect) != std::string::npos);
    CHECK(row.find("ok") != std::string::npos);
}

TEST_CASE("sweep rejects non-numeric targets and survives row failures") {
    std::string text = slurp(kScenarioDir + "electric_ab.json");
    CHECK_THROWS_AS(sweep(text, "scenario", {1.0}, ""), ConfigError);
    CHECK_THROWS_AS(sweep(text, "no.such.path", {1.0}, ""), ConfigError);

    // negative sample counts make individual rows fail but not the sweep
    std::string csv = sweep(text, "timelines.u2.samples", {33, -4}, "");
    std::istringstream lines(csv);
    std::string header, good, bad;
    std::getline(lines, header);
    std::getline(lines, good);
    std::getline(lines, bad);
    CHECK(good.find("ok") != std::string::npos);
    CHECK(bad.find("error") != std::string::npos);
}

TEST_CASE("gate-failing sweep rows keep their numbers") {
    std::string text = slurp(kScenarioDir + "electric_ab.json");
    nlohmann::json j = nlohmann::json::parse(text);
    j["gates"]["relative_error"] = 1e-30;
    std::string csv = sweep(j.dump(), "timelines.u2.volts", {1e-9}, "");
    CHECK(csv.find("gate_failure") != std::string::npos);
    CHECK(csv.find("759.633724405") != std::string::npos);
}

TEST_CASE("shipped scenarios parse and declare their outputs") {
    for (const char* name : {"magnetic_ab.json", "electric_ab.json", "ac.json",
                             "shielded_ab.json", "ac_tubes.json", "lorentz_check.json"}) {
        ScenarioConfig c = load_scenario(kScenarioDir + name);
        CHECK(!c.outputs.empty());
        CHECK(!c.gates.empty());
    }
}

TEST_CASE("file-based sources: element list and wavefunction grid") {
    std::string dir = tmp_dir();
    std::string elem_path = dir + "/elements.txt";
    {
        std::ofstream f(elem_path);
        f << "emvac-elements 1\ncount 2\n"
          << "0 0 0  1e-9  0 0 0\n"
          << "0 0 1  -1e-9  0 0 0\n";
    }
    std::string grid_path = dir + "/grid.txt";
    {
        // constant real wavefunction on a 2x2x2 unit-spacing grid, normalized
        std::ofstream f(grid_path);
        f << "emvac-grid 1\norigin 5 0 0\nspacing 1\ndims 2 2 2\n"
          << "charge 1.6e-19\nmass 9.1e-31\namplitudes\n";
        for (int i = 0; i < 8; ++i) f << "0.35355339059327373 0\n";
    }
    std::string text = R"({
      "scenario": "custom_energy",
      "sources": [
        {"type": "element_list", "file": ")" + elem_path + R"("},
        {"type": "wavefunction_grid", "file": ")" + grid_path + R"("}
      ],
      "outputs": []
    })";
    ScenarioConfig c = parse_scenario(text);
    RunReport r = run_scenario(c, "");
    CHECK(r.value("charge_part") != 0.0);
    CHECK(r.value("current_part") == 0.0);
    CHECK(r.value("pair_count_used") == 16.0);
}

TEST_CASE("carrier must be exactly one of charge or moment") {
    std::string text = R"({
      "scenario": "magnetic_ab",
      "sources": [{"type": "solenoid", "radius": 0.05, "length": 2.5,
                   "turns": 1000, "current": 0.002}],
      "arms": [
        {"carrier": {"charge": 1.6e-19, "moment": [0, 0, 1e-23]},
         "shape": "semicircle", "radius": 0.1, "side": 1},
        {"carrier": {"charge": 1.6e-19}, "shape": "semicircle", "radius": 0.1,
         "side": -1}
      ]
    })";
    CHECK_THROWS_AS(parse_scenario(text), ConfigError);
}

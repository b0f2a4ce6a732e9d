#ifndef EMVAC_SCENARIO_HPP
#define EMVAC_SCENARIO_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "emvac/bem.hpp"
#include "emvac/kernel.hpp"
#include "emvac/mesh.hpp"
#include "emvac/phases.hpp"
#include "emvac/sources.hpp"

namespace emvac {

inline constexpr const char* kToolVersion = "emvac 1.0.0";

enum class ScenarioKind {
    magnetic_ab,
    electric_ab,
    shielded_ab,
    ac,
    ac_tubes,
    lorentz_check,
    custom_energy,
};

std::string to_string(ScenarioKind k);

/// Thrown for malformed or invalid scenario text; maps to exit code 3.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when a configured tolerance gate fails; maps to exit code 2.
struct GateFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SourceSpec {
    std::string type; // solenoid | wire | point_charge | wavefunction_grid | element_list
    std::optional<SolenoidSpec> solenoid;
    int solenoid_loops = 200;
    int solenoid_segments = 64;
    std::optional<WireSpec> wire;
    int wire_elements = 2000;
    double charge = 0.0;
    Vec3 position;
    Vec3 velocity;
    std::string file; // wavefunction_grid / element_list

    Distribution build(int label) const;
};

struct ArmSpec {
    std::variant<ChargeCarrier, MomentCarrier> carrier = ChargeCarrier{};
    // either explicit samples...
    std::vector<PathSample> samples;
    // ...or a generator
    std::string shape; // "semicircle" | "straight" | "" (explicit)
    double radius = 0.0;
    Vec3 center;
    Vec3 axis{0, 0, 1};
    int side = 1;
    int sample_count = 128;
    double speed = 1000.0; // m/s along the path
    Vec3 start, stop;      // straight shape

    PathSpec build() const;
};

struct ShieldSpec {
    std::string generator; // cylinder | sphere | box | plate | "" (file)
    std::string file;
    double radius = 0.0;
    double half_length = 0.0;
    double width = 0.0, height = 0.0;
    double half_extent = 0.0;
    int n_around = 36, n_axial = 16, cap_rings = 4;
    int n_lat = 24, n_lon = 42;
    int nx = 16, ny = 16;
    int n_per_edge = 10;
    Vec3 center;
    Vec3 axis{0, 0, 1};
    Vec3 normal{0, 0, 1};

    SurfaceMesh build() const;
};

struct TimelineSpec {
    std::string profile; // constant | triangle | "" (explicit samples)
    double volts = 0.0;  // constant level or triangle peak
    double t0 = 0.0, t1 = 0.0;
    int sample_count = 33;
    std::vector<std::pair<double, double>> samples;

    PotentialTimeline build() const;
};

struct OutputSpec {
    std::string kind; // phase | energy | report | csv
    std::string path;
};

struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::magnetic_ab;
    QuadratureSettings quadrature;
    std::vector<SourceSpec> sources;
    std::vector<ArmSpec> arms;
    std::optional<ShieldSpec> shield;
    std::optional<TimelineSpec> u2, u3;
    double particle_charge = 0.0; // electric_ab
    int probes_per_axis = 5;
    std::map<std::string, double> gates;
    std::vector<OutputSpec> outputs;
    std::optional<double> reference;

    nlohmann::json to_json() const;
    bool operator==(const ScenarioConfig& o) const;
};

struct RunReport {
    std::string scenario;
    std::string digest;
    double wall_ms = 0.0;
    std::string version = kToolVersion;
    std::vector<std::pair<std::string, double>> values;
    std::vector<std::pair<std::string, bool>> gate_results; // name, passed
    std::vector<std::string> output_errors;

    double primary_result = 0.0;
    std::optional<double> primary_reference;
    std::optional<double> primary_relative_error;

    bool all_gates_passed() const;
    double value(const std::string& name) const;
};

/// Strict parse: unknown keys are rejected with a nearest-key suggestion,
/// required fields checked per scenario kind, defaults filled.
ScenarioConfig parse_scenario(const std::string& text);
ScenarioConfig load_scenario(const std::string& path);

/// Executes the scenario pipeline and writes every requested output.
/// Throws GateFailure after writing outputs when a tolerance gate fails.
RunReport run_scenario(const ScenarioConfig& config, const std::string& out_dir = "");

/// One run per value of the numeric parameter at `parameter_path`
/// (dotted, e.g. "sources.0.length"); returns the CSV table text.
std::string sweep(const std::string& scenario_text, const std::string& parameter_path,
                  const std::vector<double>& values, const std::string& out_dir = "");

std::string report_text(const RunReport& report, bool with_timestamp = true);
std::string csv_row(const RunReport& report, const std::string& parameter = "",
                    const std::string& value = "", const std::string& status = "ok");
std::string csv_header();

} // namespace emvac

#endif

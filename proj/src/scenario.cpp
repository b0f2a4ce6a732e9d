#include "emvac/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "emvac/constants.hpp"

namespace emvac {

using nlohmann::json;

std::string to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::magnetic_ab: return "magnetic_ab";
        case ScenarioKind::electric_ab: return "electric_ab";
        case ScenarioKind::shielded_ab: return "shielded_ab";
        case ScenarioKind::ac: return "ac";
        case ScenarioKind::ac_tubes: return "ac_tubes";
        case ScenarioKind::lorentz_check: return "lorentz_check";
        case ScenarioKind::custom_energy: return "custom_energy";
    }
    return "?";
}

namespace {

std::string fmt12(double v) {
    if (v == 0.0) v = 0.0; // avoid "-0"
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::size_t levenshtein(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

void check_keys(const json& obj, const std::vector<std::string>& allowed,
                const std::string& context) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const std::string& key = it.key();
        if (std::find(allowed.begin(), allowed.end(), key) != allowed.end()) continue;
        std::string best;
        std::size_t best_d = 1000;
        for (const auto& cand : allowed) {
            std::size_t d = levenshtein(key, cand);
            if (d < best_d) {
                best_d = d;
                best = cand;
            }
        }
        std::string msg = "unknown key \"" + key + "\" in " + context;
        if (best_d <= 3) msg += " (did you mean \"" + best + "\"?)";
        throw ConfigError(msg);
    }
}

double get_number(const json& obj, const std::string& key, const std::string& ctx) {
    if (!obj.contains(key))
        throw ConfigError("missing required field \"" + key + "\" in " + ctx);
    if (!obj[key].is_number())
        throw ConfigError("field \"" + key + "\" in " + ctx + " must be a number");
    return obj[key].get<double>();
}

double get_number_or(const json& obj, const std::string& key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number())
        throw ConfigError("field \"" + key + "\" must be a number");
    return obj[key].get<double>();
}

int get_int_or(const json& obj, const std::string& key, int fallback) {
    if (!obj.contains(key)) return fallback;
    if (obj[key].is_number_integer()) return obj[key].get<int>();
    // sweeps rewrite numeric scalars as doubles; accept integral values
    if (obj[key].is_number()) {
        double v = obj[key].get<double>();
        if (v == std::floor(v) && std::abs(v) < 1e9) return static_cast<int>(v);
    }
    throw ConfigError("field \"" + key + "\" must be an integer");
}

std::string get_string(const json& obj, const std::string& key, const std::string& ctx) {
    if (!obj.contains(key))
        throw ConfigError("missing required field \"" + key + "\" in " + ctx);
    if (!obj[key].is_string())
        throw ConfigError("field \"" + key + "\" in " + ctx + " must be a string");
    return obj[key].get<std::string>();
}

Vec3 get_vec3_or(const json& obj, const std::string& key, const Vec3& fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj[key];
    if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() ||
        !v[2].is_number())
        throw ConfigError("field \"" + key + "\" must be an array of 3 numbers");
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

json vec3_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

void require_file_exists(const std::string& path, const std::string& ctx) {
    std::ifstream f(path);
    if (!f) throw ConfigError("referenced file does not exist: " + path + " (" + ctx + ")");
}

Distribution load_element_list(const std::string& path, int label) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open element list: " + path);
    std::string tag;
    int version = 0;
    std::size_t count = 0;
    std::string key;
    if (!(f >> tag >> version) || tag != "emvac-elements" || version != 1)
        throw std::runtime_error(path + ": expected header 'emvac-elements 1'");
    if (!(f >> key >> count) || key != "count")
        throw std::runtime_error(path + ": expected 'count <n>'");
    Distribution d;
    d.label = label;
    d.elements.resize(count);
    for (auto& e : d.elements)
        if (!(f >> e.position.x >> e.position.y >> e.position.z >> e.charge_weight >>
              e.current_moment.x >> e.current_moment.y >> e.current_moment.z))
            throw std::runtime_error(path + ": truncated element list");
    return d;
}

WavefunctionGrid load_wavefunction_grid(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open wavefunction grid: " + path);
    std::string tag, key;
    int version = 0;
    if (!(f >> tag >> version) || tag != "emvac-grid" || version != 1)
        throw std::runtime_error(path + ": expected header 'emvac-grid 1'");
    WavefunctionGrid g;
    if (!(f >> key >> g.origin.x >> g.origin.y >> g.origin.z) || key != "origin")
        throw std::runtime_error(path + ": expected 'origin x y z'");
    if (!(f >> key >> g.spacing) || key != "spacing")
        throw std::runtime_error(path + ": expected 'spacing h'");
    if (!(f >> key >> g.nx >> g.ny >> g.nz) || key != "dims")
        throw std::runtime_error(path + ": expected 'dims nx ny nz'");
    if (!(f >> key >> g.particle_charge) || key != "charge")
        throw std::runtime_error(path + ": expected 'charge q'");
    if (!(f >> key >> g.particle_mass) || key != "mass")
        throw std::runtime_error(path + ": expected 'mass m'");
    if (!(f >> key) || key != "amplitudes")
        throw std::runtime_error(path + ": expected 'amplitudes'");
    std::size_t n = static_cast<std::size_t>(g.nx) * g.ny * g.nz;
    g.amplitudes.resize(n);
    for (auto& a : g.amplitudes) {
        double re, im;
        if (!(f >> re >> im)) throw std::runtime_error(path + ": truncated amplitudes");
        a = {re, im};
    }
    return g;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace

// ---------------------------------------------------------------------------
// spec builders

Distribution SourceSpec::build(int label) const {
    if (type == "solenoid")
        return discretize_solenoid(*solenoid, solenoid_loops, solenoid_segments, label);
    if (type == "wire") return discretize_wire(*wire, wire_elements, label);
    if (type == "point_charge") {
        Distribution d;
        d.label = label;
        CurrentElement e;
        e.position = position;
        e.charge_weight = charge;
        e.current_moment = velocity * charge;
        d.elements.push_back(e);
        return d;
    }
    if (type == "wavefunction_grid")
        return current_from_wavefunction(load_wavefunction_grid(file), label);
    if (type == "element_list") return load_element_list(file, label);
    throw std::runtime_error("unhandled source type: " + type);
}

PathSpec ArmSpec::build() const {
    PathSpec p;
    p.carrier = carrier;
    if (shape.empty()) {
        p.samples = samples;
    } else if (shape == "semicircle") {
        Vec3 a = axis.normalized();
        Vec3 seed = std::abs(a.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
        Vec3 u = a.cross(seed).normalized();
        Vec3 v = a.cross(u);
        double arc = kPi * radius;
        double duration = arc / speed;
        for (int k = 0; k < sample_count; ++k) {
            double f = static_cast<double>(k) / (sample_count - 1);
            // endpoints at -v and +v; side +1 passes through +u, -1 through -u
            double phi = side >= 0 ? (-0.5 * kPi + kPi * f) : (-0.5 * kPi - kPi * f);
            p.samples.push_back({f * duration,
                                 center + radius * (std::cos(phi) * u + std::sin(phi) * v)});
        }
    } else if (shape == "straight") {
        double duration = (stop - start).norm() / speed;
        for (int k = 0; k < sample_count; ++k) {
            double f = static_cast<double>(k) / (sample_count - 1);
            p.samples.push_back({f * duration, start + (stop - start) * f});
        }
    } else {
        throw std::runtime_error("unhandled arm shape: " + shape);
    }
    p.validate();
    return p;
}

SurfaceMesh ShieldSpec::build() const {
    if (!file.empty()) return load_mesh(file);
    if (generator == "cylinder")
        return make_cylinder_mesh(radius, half_length, n_around, n_axial, cap_rings,
                                  center, axis);
    if (generator == "sphere") return make_sphere_mesh(radius, center, n_lat, n_lon);
    if (generator == "box") return make_box_mesh(center, half_extent, n_per_edge);
    if (generator == "plate") return make_plate_mesh(width, height, nx, ny, center, normal);
    throw std::runtime_error("unhandled shield generator: " + generator);
}

PotentialTimeline TimelineSpec::build() const {
    PotentialTimeline t;
    if (profile.empty()) {
        t.samples = samples;
    } else if (profile == "constant") {
        for (int k = 0; k < sample_count; ++k) {
            double f = static_cast<double>(k) / (sample_count - 1);
            t.samples.push_back({t0 + f * (t1 - t0), volts});
        }
    } else if (profile == "triangle") {
        // 0 -> volts over the first half, back to 0 over the second
        for (int k = 0; k < sample_count; ++k) {
            double f = static_cast<double>(k) / (sample_count - 1);
            double level = f <= 0.5 ? 2.0 * f * volts : 2.0 * (1.0 - f) * volts;
            t.samples.push_back({t0 + f * (t1 - t0), level});
        }
    } else {
        throw std::runtime_error("unhandled timeline profile: " + profile);
    }
    t.validate();
    return t;
}

// ---------------------------------------------------------------------------
// parsing

namespace {

SourceSpec parse_source(const json& j, std::size_t index) {
    std::string ctx = "sources[" + std::to_string(index) + "]";
    if (!j.is_object()) throw ConfigError(ctx + " must be a table");
    SourceSpec s;
    s.type = get_string(j, "type", ctx);
    if (s.type == "solenoid") {
        check_keys(j, {"type", "radius", "length", "turns", "current", "axis", "center",
                       "loops", "segments"}, ctx);
        SolenoidSpec sol;
        sol.radius = get_number(j, "radius", ctx);
        sol.length = get_number(j, "length", ctx);
        sol.turns = get_number(j, "turns", ctx);
        sol.current = get_number(j, "current", ctx);
        sol.axis = get_vec3_or(j, "axis", {0, 0, 1});
        sol.center = get_vec3_or(j, "center", {0, 0, 0});
        s.solenoid = sol;
        s.solenoid_loops = get_int_or(j, "loops", 200);
        s.solenoid_segments = get_int_or(j, "segments", 64);
    } else if (s.type == "wire") {
        check_keys(j, {"type", "lambda", "length", "axis", "center", "elements"}, ctx);
        WireSpec w;
        w.linear_charge_density = get_number(j, "lambda", ctx);
        w.length = get_number(j, "length", ctx);
        w.axis = get_vec3_or(j, "axis", {0, 0, 1});
        w.center = get_vec3_or(j, "center", {0, 0, 0});
        s.wire = w;
        s.wire_elements = get_int_or(j, "elements", 2000);
    } else if (s.type == "point_charge") {
        check_keys(j, {"type", "charge", "position", "velocity"}, ctx);
        s.charge = get_number(j, "charge", ctx);
        s.position = get_vec3_or(j, "position", {0, 0, 0});
        s.velocity = get_vec3_or(j, "velocity", {0, 0, 0});
    } else if (s.type == "wavefunction_grid" || s.type == "element_list") {
        check_keys(j, {"type", "file"}, ctx);
        s.file = get_string(j, "file", ctx);
        require_file_exists(s.file, ctx);
    } else {
        throw ConfigError(ctx + ": unknown source type \"" + s.type +
                          "\" (solenoid | wire | point_charge | wavefunction_grid | element_list)");
    }
    return s;
}

ArmSpec parse_arm(const json& j, std::size_t index) {
    std::string ctx = "arms[" + std::to_string(index) + "]";
    if (!j.is_object()) throw ConfigError(ctx + " must be a table");
    ArmSpec a;
    if (!j.contains("carrier") || !j["carrier"].is_object())
        throw ConfigError(ctx + " needs a carrier table ({\"charge\": q} or {\"moment\": [..]})");
    const json& c = j["carrier"];
    check_keys(c, {"charge", "moment"}, ctx + ".carrier");
    if (c.contains("charge") == c.contains("moment"))
        throw ConfigError(ctx + ".carrier must set exactly one of charge / moment");
    if (c.contains("charge")) a.carrier = ChargeCarrier{get_number(c, "charge", ctx)};
    else a.carrier = MomentCarrier{get_vec3_or(c, "moment", {0, 0, 0})};

    if (j.contains("samples") && j["samples"].is_array() && !j.contains("shape")) {
        check_keys(j, {"carrier", "samples"}, ctx);
        for (const auto& row : j["samples"]) {
            if (!row.is_array() || row.size() != 4)
                throw ConfigError(ctx + ".samples rows must be [t, x, y, z]");
            a.samples.push_back({row[0].get<double>(),
                                 {row[1].get<double>(), row[2].get<double>(),
                                  row[3].get<double>()}});
        }
    } else {
        a.shape = get_string(j, "shape", ctx);
        if (a.shape == "semicircle") {
            check_keys(j, {"carrier", "shape", "radius", "center", "axis", "side",
                           "samples", "speed"}, ctx);
            a.radius = get_number(j, "radius", ctx);
            a.center = get_vec3_or(j, "center", {0, 0, 0});
            a.axis = get_vec3_or(j, "axis", {0, 0, 1});
            a.side = get_int_or(j, "side", 1);
            a.sample_count = get_int_or(j, "samples", 128);
            a.speed = get_number_or(j, "speed", 1000.0);
        } else if (a.shape == "straight") {
            check_keys(j, {"carrier", "shape", "start", "stop", "samples", "speed"}, ctx);
            a.start = get_vec3_or(j, "start", {0, 0, 0});
            a.stop = get_vec3_or(j, "stop", {0, 0, 0});
            a.sample_count = get_int_or(j, "samples", 128);
            a.speed = get_number_or(j, "speed", 1000.0);
        } else {
            throw ConfigError(ctx + ": unknown arm shape \"" + a.shape +
                              "\" (semicircle | straight, or give explicit samples)");
        }
    }
    return a;
}

ShieldSpec parse_shield(const json& j) {
    if (!j.is_object()) throw ConfigError("shield must be a table");
    ShieldSpec s;
    if (j.contains("file")) {
        check_keys(j, {"file"}, "shield");
        s.file = get_string(j, "file", "shield");
        require_file_exists(s.file, "shield");
        return s;
    }
    s.generator = get_string(j, "generator", "shield");
    if (s.generator == "cylinder") {
        check_keys(j, {"generator", "radius", "half_length", "n_around", "n_axial",
                       "cap_rings", "center", "axis"}, "shield");
        s.radius = get_number(j, "radius", "shield");
        s.half_length = get_number(j, "half_length", "shield");
        s.n_around = get_int_or(j, "n_around", 36);
        s.n_axial = get_int_or(j, "n_axial", 16);
        s.cap_rings = get_int_or(j, "cap_rings", 4);
        s.center = get_vec3_or(j, "center", {0, 0, 0});
        s.axis = get_vec3_or(j, "axis", {0, 0, 1});
    } else if (s.generator == "sphere") {
        check_keys(j, {"generator", "radius", "n_lat", "n_lon", "center"}, "shield");
        s.radius = get_number(j, "radius", "shield");
        s.n_lat = get_int_or(j, "n_lat", 24);
        s.n_lon = get_int_or(j, "n_lon", 42);
        s.center = get_vec3_or(j, "center", {0, 0, 0});
    } else if (s.generator == "box") {
        check_keys(j, {"generator", "half_extent", "n_per_edge", "center"}, "shield");
        s.half_extent = get_number(j, "half_extent", "shield");
        s.n_per_edge = get_int_or(j, "n_per_edge", 10);
        s.center = get_vec3_or(j, "center", {0, 0, 0});
    } else if (s.generator == "plate") {
        check_keys(j, {"generator", "width", "height", "nx", "ny", "center", "normal"},
                   "shield");
        s.width = get_number(j, "width", "shield");
        s.height = get_number(j, "height", "shield");
        s.nx = get_int_or(j, "nx", 16);
        s.ny = get_int_or(j, "ny", 16);
        s.center = get_vec3_or(j, "center", {0, 0, 0});
        s.normal = get_vec3_or(j, "normal", {0, 0, 1});
    } else {
        throw ConfigError("shield.generator must be cylinder | sphere | box | plate");
    }
    return s;
}

TimelineSpec parse_timeline(const json& j, const std::string& ctx) {
    if (!j.is_object()) throw ConfigError(ctx + " must be a table");
    TimelineSpec t;
    if (j.contains("samples") && j["samples"].is_array() && !j.contains("profile")) {
        check_keys(j, {"samples"}, ctx);
        for (const auto& row : j["samples"]) {
            if (!row.is_array() || row.size() != 2)
                throw ConfigError(ctx + ".samples rows must be [t, volts]");
            t.samples.push_back({row[0].get<double>(), row[1].get<double>()});
        }
    } else {
        t.profile = get_string(j, "profile", ctx);
        if (t.profile != "constant" && t.profile != "triangle")
            throw ConfigError(ctx + ".profile must be constant | triangle");
        check_keys(j, {"profile", "volts", "t0", "t1", "samples"}, ctx);
        t.volts = get_number(j, "volts", ctx);
        t.t0 = get_number_or(j, "t0", 0.0);
        t.t1 = get_number(j, "t1", ctx);
        t.sample_count = get_int_or(j, "samples", 33);
        if (!(t.t1 > t.t0)) throw ConfigError(ctx + ": t1 must exceed t0");
    }
    return t;
}

} // namespace

ScenarioConfig parse_scenario(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        // recover line/column from the byte offset for a friendlier message
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError("scenario syntax error at line " + std::to_string(line) +
                          ", column " + std::to_string(col) + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("scenario must be a table at top level");

    check_keys(j, {"scenario", "quadrature", "sources", "arms", "shield", "timelines",
                   "charge", "probes_per_axis", "gates", "outputs", "reference"},
               "scenario");

    ScenarioConfig c;
    std::string kind = get_string(j, "scenario", "scenario");
    if (kind == "magnetic_ab") c.kind = ScenarioKind::magnetic_ab;
    else if (kind == "electric_ab") c.kind = ScenarioKind::electric_ab;
    else if (kind == "shielded_ab") c.kind = ScenarioKind::shielded_ab;
    else if (kind == "ac") c.kind = ScenarioKind::ac;
    else if (kind == "ac_tubes") c.kind = ScenarioKind::ac_tubes;
    else if (kind == "lorentz_check") c.kind = ScenarioKind::lorentz_check;
    else if (kind == "custom_energy") c.kind = ScenarioKind::custom_energy;
    else
        throw ConfigError("unknown scenario kind \"" + kind + "\"");

    if (j.contains("quadrature")) {
        const json& q = j["quadrature"];
        check_keys(q, {"min_separation", "softening", "deterministic"}, "quadrature");
        c.quadrature.min_separation = get_number_or(q, "min_separation", 0.0);
        if (c.quadrature.min_separation < 0)
            throw ConfigError("quadrature.min_separation must be >= 0");
        std::string soft = q.contains("softening") ? get_string(q, "softening", "quadrature")
                                                   : "exclude_pair";
        if (soft == "exclude_pair") c.quadrature.softening_mode = SofteningMode::exclude_pair;
        else if (soft == "plummer_soften")
            c.quadrature.softening_mode = SofteningMode::plummer_soften;
        else
            throw ConfigError("quadrature.softening must be exclude_pair | plummer_soften");
        c.quadrature.deterministic_reduction =
            !q.contains("deterministic") || q["deterministic"].get<bool>();
    }

    if (j.contains("sources"))
        for (std::size_t i = 0; i < j["sources"].size(); ++i)
            c.sources.push_back(parse_source(j["sources"][i], i));
    if (j.contains("arms"))
        for (std::size_t i = 0; i < j["arms"].size(); ++i)
            c.arms.push_back(parse_arm(j["arms"][i], i));
    if (j.contains("shield")) c.shield = parse_shield(j["shield"]);
    if (j.contains("timelines")) {
        const json& t = j["timelines"];
        check_keys(t, {"u2", "u3"}, "timelines");
        if (!t.contains("u2") || !t.contains("u3"))
            throw ConfigError("timelines needs both u2 and u3");
        c.u2 = parse_timeline(t["u2"], "timelines.u2");
        c.u3 = parse_timeline(t["u3"], "timelines.u3");
    }
    c.particle_charge = get_number_or(j, "charge", 0.0);
    c.probes_per_axis = get_int_or(j, "probes_per_axis", 5);
    if (j.contains("reference")) c.reference = get_number(j, "reference", "scenario");
    if (j.contains("gates")) {
        if (!j["gates"].is_object()) throw ConfigError("gates must be a table");
        for (auto it = j["gates"].begin(); it != j["gates"].end(); ++it) {
            if (!it.value().is_number())
                throw ConfigError("gate \"" + it.key() + "\" must be a number");
            c.gates[it.key()] = it.value().get<double>();
        }
    }
    if (j.contains("outputs")) {
        for (const auto& o : j["outputs"]) {
            check_keys(o, {"kind", "path"}, "outputs[]");
            OutputSpec out;
            out.kind = get_string(o, "kind", "outputs[]");
            if (out.kind != "phase" && out.kind != "energy" && out.kind != "report" &&
                out.kind != "csv")
                throw ConfigError("output kind must be phase | energy | report | csv");
            out.path = get_string(o, "path", "outputs[]");
            c.outputs.push_back(out);
        }
    }

    // per-kind required fields
    auto need = [&](bool ok, const std::string& what) {
        if (!ok) throw ConfigError("scenario kind " + kind + " requires " + what);
    };
    switch (c.kind) {
        case ScenarioKind::magnetic_ab:
            need(!c.sources.empty() && c.sources[0].type == "solenoid",
                 "sources[0] of type solenoid");
            need(c.arms.size() == 2, "exactly 2 arms");
            break;
        case ScenarioKind::electric_ab:
            need(c.u2.has_value() && c.u3.has_value(), "a timelines block");
            need(c.particle_charge != 0.0, "a nonzero charge field");
            break;
        case ScenarioKind::shielded_ab:
            need(!c.sources.empty() && c.sources[0].type == "solenoid",
                 "sources[0] of type solenoid");
            need(c.sources.size() >= 2 && c.sources[1].type == "point_charge",
                 "sources[1] of type point_charge (the passing particle)");
            need(c.shield.has_value(), "a shield block");
            break;
        case ScenarioKind::ac:
            need(!c.sources.empty() && c.sources[0].type == "wire",
                 "sources[0] of type wire");
            need(c.arms.size() == 2, "exactly 2 arms");
            break;
        case ScenarioKind::ac_tubes:
            need(!c.sources.empty() && c.sources[0].type == "wire",
                 "sources[0] of type wire");
            need(c.arms.size() == 1, "exactly 1 arm (inside the tube)");
            need(c.shield.has_value(), "a shield block (the tube)");
            break;
        case ScenarioKind::lorentz_check:
            need(!c.sources.empty() && c.sources[0].type == "point_charge",
                 "sources[0] of type point_charge");
            need(c.shield.has_value(), "a shield block (the conductor)");
            break;
        case ScenarioKind::custom_energy:
            need(c.sources.size() >= 2, "at least 2 sources");
            break;
    }
    return c;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open scenario file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_scenario(ss.str());
}

// ---------------------------------------------------------------------------
// serialization (round-trip support)

nlohmann::json ScenarioConfig::to_json() const {
    json j;
    j["scenario"] = to_string(kind);
    j["quadrature"] = {
        {"min_separation", quadrature.min_separation},
        {"softening", quadrature.softening_mode == SofteningMode::exclude_pair
                          ? "exclude_pair"
                          : "plummer_soften"},
        {"deterministic", quadrature.deterministic_reduction}};
    json srcs = json::array();
    for (const auto& s : sources) {
        json o;
        o["type"] = s.type;
        if (s.type == "solenoid") {
            o["radius"] = s.solenoid->radius;
            o["length"] = s.solenoid->length;
            o["turns"] = s.solenoid->turns;
            o["current"] = s.solenoid->current;
            o["axis"] = vec3_json(s.solenoid->axis);
            o["center"] = vec3_json(s.solenoid->center);
            o["loops"] = s.solenoid_loops;
            o["segments"] = s.solenoid_segments;
        } else if (s.type == "wire") {
            o["lambda"] = s.wire->linear_charge_density;
            o["length"] = s.wire->length;
            o["axis"] = vec3_json(s.wire->axis);
            o["center"] = vec3_json(s.wire->center);
            o["elements"] = s.wire_elements;
        } else if (s.type == "point_charge") {
            o["charge"] = s.charge;
            o["position"] = vec3_json(s.position);
            o["velocity"] = vec3_json(s.velocity);
        } else {
            o["file"] = s.file;
        }
        srcs.push_back(o);
    }
    j["sources"] = srcs;
    json arms_j = json::array();
    for (const auto& a : arms) {
        json o;
        if (a.carrier.index() == 0)
            o["carrier"] = {{"charge", std::get<ChargeCarrier>(a.carrier).charge}};
        else
            o["carrier"] = {{"moment", vec3_json(std::get<MomentCarrier>(a.carrier).moment)}};
        if (a.shape.empty()) {
            json rows = json::array();
            for (const auto& s : a.samples)
                rows.push_back({s.time, s.position.x, s.position.y, s.position.z});
            o["samples"] = rows;
        } else if (a.shape == "semicircle") {
            o["shape"] = a.shape;
            o["radius"] = a.radius;
            o["center"] = vec3_json(a.center);
            o["axis"] = vec3_json(a.axis);
            o["side"] = a.side;
            o["samples"] = a.sample_count;
            o["speed"] = a.speed;
        } else {
            o["shape"] = a.shape;
            o["start"] = vec3_json(a.start);
            o["stop"] = vec3_json(a.stop);
            o["samples"] = a.sample_count;
            o["speed"] = a.speed;
        }
        arms_j.push_back(o);
    }
    j["arms"] = arms_j;
    if (shield) {
        json o;
        if (!shield->file.empty()) {
            o["file"] = shield->file;
        } else {
            o["generator"] = shield->generator;
            if (shield->generator == "cylinder") {
                o["radius"] = shield->radius;
                o["half_length"] = shield->half_length;
                o["n_around"] = shield->n_around;
                o["n_axial"] = shield->n_axial;
                o["cap_rings"] = shield->cap_rings;
                o["center"] = vec3_json(shield->center);
                o["axis"] = vec3_json(shield->axis);
            } else if (shield->generator == "sphere") {
                o["radius"] = shield->radius;
                o["n_lat"] = shield->n_lat;
                o["n_lon"] = shield->n_lon;
                o["center"] = vec3_json(shield->center);
            } else if (shield->generator == "box") {
                o["half_extent"] = shield->half_extent;
                o["n_per_edge"] = shield->n_per_edge;
                o["center"] = vec3_json(shield->center);
            } else {
                o["width"] = shield->width;
                o["height"] = shield->height;
                o["nx"] = shield->nx;
                o["ny"] = shield->ny;
                o["center"] = vec3_json(shield->center);
                o["normal"] = vec3_json(shield->normal);
            }
        }
        j["shield"] = o;
    }
    if (u2 && u3) {
        auto tl = [](const TimelineSpec& t) {
            json o;
            if (t.profile.empty()) {
                json rows = json::array();
                for (const auto& s : t.samples) rows.push_back({s.first, s.second});
                o["samples"] = rows;
            } else {
                o["profile"] = t.profile;
                o["volts"] = t.volts;
                o["t0"] = t.t0;
                o["t1"] = t.t1;
                o["samples"] = t.sample_count;
            }
            return o;
        };
        j["timelines"] = {{"u2", tl(*u2)}, {"u3", tl(*u3)}};
    }
    if (particle_charge != 0.0) j["charge"] = particle_charge;
    j["probes_per_axis"] = probes_per_axis;
    if (reference) j["reference"] = *reference;
    if (!gates.empty()) {
        json g;
        for (const auto& [k, v] : gates) g[k] = v;
        j["gates"] = g;
    }
    json outs = json::array();
    for (const auto& o : outputs) outs.push_back({{"kind", o.kind}, {"path", o.path}});
    j["outputs"] = outs;
    return j;
}

bool ScenarioConfig::operator==(const ScenarioConfig& o) const {
    return to_json() == o.to_json();
}

// ---------------------------------------------------------------------------
// execution

bool RunReport::all_gates_passed() const {
    for (const auto& [name, ok] : gate_results)
        if (!ok) return false;
    return true;
}

double RunReport::value(const std::string& name) const {
    for (const auto& [k, v] : values)
        if (k == name) return v;
    throw std::out_of_range("no report value named " + name);
}

namespace {

struct GateSet {
    const std::map<std::string, double>* configured;
    RunReport* report;

    // value must be <= threshold (default), or >= when name ends in "_min"
    void apply(const std::string& name, double metric, std::optional<double> fallback) {
        double threshold;
        auto it = configured->find(name);
        if (it != configured->end()) threshold = it->second;
        else if (fallback) threshold = *fallback;
        else return;
        bool at_least = name.size() > 4 && name.substr(name.size() - 4) == "_min";
        bool ok = at_least ? metric >= threshold : metric <= threshold;
        report->gate_results.push_back({name, ok});
    }
};

void add(RunReport& r, const std::string& k, double v) { r.values.push_back({k, v}); }

void add_phase_result(RunReport& r, const PhaseResult& p) {
    for (std::size_t i = 0; i < p.arm_phases.size(); ++i)
        add(r, "arm" + std::to_string(i + 1) + "_phase", p.arm_phases[i]);
    add(r, "difference", p.difference);
    if (p.reference) add(r, "reference", *p.reference);
    if (p.relative_error) add(r, "relative_error", *p.relative_error);
    r.primary_result = p.difference;
    r.primary_reference = p.reference;
    r.primary_relative_error = p.relative_error;
}

void run_magnetic_ab(const ScenarioConfig& c, RunReport& r, GateSet& gates) {
    Distribution src = c.sources[0].build(2);
    PathSpec a1 = c.arms[0].build();
    PathSpec a2 = c.arms[1].build();
    PhaseResult p = magnetic_ab_loop_difference(a1, a2, src, c.quadrature,
                                                &*c.sources[0].solenoid);
    add_phase_result(r, p);
    if (p.relative_error) gates.apply("relative_error", *p.relative_error, 0.01);
}

void run_electric_ab(const ScenarioConfig& c, RunReport& r, GateSet& gates) {
    PotentialTimeline u2 = c.u2->build();
    PotentialTimeline u3 = c.u3->build();
    PhaseResult p = electric_ab_phase(u2, u3, c.particle_charge);
    if (c.reference) {
        p.set_reference(*c.reference);
    } else if (!c.u3->profile.empty() && c.u3->volts == 0.0 && !c.u2->profile.empty()) {
        double span = c.u2->t1 - c.u2->t0;
        double integral = c.u2->profile == "constant" ? c.u2->volts * span
                                                      : 0.5 * c.u2->volts * span;
        p.set_reference(c.particle_charge * integral / constants().hbar);
    }
    add_phase_result(r, p);
    if (p.relative_error) gates.apply("relative_error", *p.relative_error, 1e-10);
}

void run_ac(const ScenarioConfig& c, RunReport& r, GateSet& gates) {
    Distribution wire = c.sources[0].build(2);
    PathSpec a1 = c.arms[0].build();
    PathSpec a2 = c.arms[1].build();
    PhaseResult p = ac_loop_difference(a1, a2, wire, *c.sources[0].wire, c.quadrature);
    add_phase_result(r, p);
    if (p.relative_error) gates.apply("relative_error", *p.relative_error, 0.02);
}

void run_shielded_ab(const ScenarioConfig& c, RunReport& r, GateSet& gates) {
    const SolenoidSpec& sol = *c.sources[0].solenoid;
    Distribution solenoid = c.sources[0].build(2);
    Distribution particle = c.sources[1].build(1);
    SurfaceMesh mesh = c.shield->build();
    std::vector<Vec3> probes = solenoid_bore_probes(sol, c.probes_per_axis);

    ShieldReport rep = verify_shield_cancellation(particle, solenoid, mesh, probes,
                                                  c.quadrature);
    add(r, "delta_e12", rep.delta_e12);
    add(r, "delta_e13", rep.delta_e13);
    add(r, "delta_e23", rep.delta_e23);
    add(r, "cancellation_residual", rep.cancellation_residual);
    add(r, "residual_b", rep.residual_b);
    r.primary_result = rep.cancellation_residual;
    r.primary_reference = 0.0;
    r.primary_relative_error = rep.cancellation_residual;
    gates.apply("cancellation_residual", rep.cancellation_residual, 0.05);
    gates.apply("residual_b", rep.residual_b, 0.05);

    if (!c.arms.empty()) {
        // locality bookkeeping along the particle's arm: the phase from
        // dE12 alone is shield-independent, the dE12 + dE23 total collapses
        PathSpec arm = c.arms[0].build();
        CurrentShieldSolver solver(mesh, probes, c.quadrature);
        std::vector<double> e12(arm.samples.size()), e13(arm.samples.size()),
            e23(arm.samples.size());
        for (std::size_t k = 0; k < arm.samples.size(); ++k) {
            Distribution pk = moving_carrier_distribution(arm, arm.samples[k].time);
            e12[k] = interaction_energy(pk, solenoid, c.quadrature).value;
            Distribution induced =
                solver.induced_distribution(solver.solve(pk), 3);
            e13[k] = interaction_energy(pk, induced, c.quadrature).value;
            e23[k] = interaction_energy(solenoid, induced, c.quadrature).value;
        }
        double i12 = 0.0, i13 = 0.0, itot = 0.0;
        for (std::size_t k = 1; k < arm.samples.size(); ++k) {
            double dt = arm.samples[k].time - arm.samples[k - 1].time;
            i12 += 0.5 * dt * (e12[k] + e12[k - 1]);
            i13 += 0.5 * dt * (e13[k] + e13[k - 1]);
            itot += 0.5 * dt * (e12[k] + e23[k] + e12[k - 1] + e23[k - 1]);
        }
        const double hbar = constants().hbar;
        // local terms only: dE12 without the shield, dE12 + dE13 with it
        double phase_unshielded = -i12 / hbar;
        double phase_shielded = -(i12 + i13) / hbar;
        double phase_total = -itot / hbar;
        add(r, "locality_phase_unshielded", phase_unshielded);
        add(r, "locality_phase_shielded", phase_shielded);
        add(r, "locality_phase_total", phase_total);
        double shift = phase_unshielded != 0.0
                           ? std::abs(phase_shielded - phase_unshielded) /
                                 std::abs(phase_unshielded)
                           : 0.0;
        double collapse = phase_unshielded != 0.0
                              ? std::abs(phase_total) / std::abs(phase_unshielded)
                              : 0.0;
        add(r, "locality_shift", shift);
        add(r, "total_phase_collapse", collapse);
        gates.apply("locality_shift", shift, 0.005);
        gates.apply("total_phase_collapse", collapse, std::nullopt);
    }
}

void run_ac_tubes(const ScenarioConfig& c, RunReport& r, GateSet& gates) {
    Distribution wire = c.sources[0].build(2);
    PathSpec arm = c.arms[0].build();
    SurfaceMesh mesh = c.shield->build();
    AcTubeReport rep = verify_ac_tube_cancellation(arm, wire, mesh, c.quadrature);
    add(r, "e_wire", rep.e_wire);
    add(r, "e_induced", rep.e_induced);
    add(r, "residual", rep.residual);
    r.primary_result = rep.residual;
    r.primary_reference = 0.0;
    r.primary_relative_error = rep.residual;
    gates.apply("residual", rep.residual, 0.05);
}

void run_lorentz_check(const ScenarioConfig& c, RunReport& r, GateSet& gates) {
    Distribution q1 = c.sources[0].build(1);
    Distribution fixed;
    fixed.label = 2;
    for (std::size_t i = 1; i < c.sources.size(); ++i) {
        Distribution d = c.sources[i].build(2);
        for (const auto& e : d.elements) fixed.elements.push_back(e);
    }
    SurfaceMesh mesh = c.shield->build();
    LorentzReport rep = lorentz_consistency_check(q1, fixed, mesh, c.quadrature);
    add(r, "f_local_x", rep.f_local.x);
    add(r, "f_local_y", rep.f_local.y);
    add(r, "f_local_z", rep.f_local.z);
    add(r, "f_gradient_x", rep.f_gradient.x);
    add(r, "f_gradient_y", rep.f_gradient.y);
    add(r, "f_gradient_z", rep.f_gradient.z);
    add(r, "f_gradient_e23_x", rep.f_gradient_with_e23.x);
    add(r, "f_gradient_e23_y", rep.f_gradient_with_e23.y);
    add(r, "f_gradient_e23_z", rep.f_gradient_with_e23.z);
    double fl = rep.f_local.norm();
    double grad_vs_local = fl > 0 ? (rep.f_gradient - rep.f_local).norm() / fl : 0.0;
    double e23_dev = fl > 0 ? (rep.f_gradient_with_e23 - rep.f_local).norm() / fl : 0.0;
    add(r, "grad_vs_local", grad_vs_local);
    add(r, "e23_deviation", e23_dev);
    r.primary_result = grad_vs_local;
    gates.apply("grad_vs_local", grad_vs_local, std::nullopt);
    gates.apply("e23_deviation_min", e23_dev, std::nullopt);
}

void run_custom_energy(const ScenarioConfig& c, RunReport& r, GateSet&) {
    Distribution a = c.sources[0].build(1);
    Distribution b = c.sources[1].build(2);
    InteractionEnergy e = interaction_energy(a, b, c.quadrature);
    add(r, "value", e.value);
    add(r, "charge_part", e.charge_part);
    add(r, "current_part", e.current_part);
    add(r, "pair_count_used", static_cast<double>(e.pair_count_used));
    add(r, "pair_count_excluded", static_cast<double>(e.pair_count_excluded));
    r.primary_result = e.value;
}

std::string join_path(const std::string& dir, const std::string& path) {
    if (dir.empty() || (!path.empty() && path[0] == '/')) return path;
    return dir + "/" + path;
}

} // namespace

std::string csv_header() {
    return "scenario,parameter,value,result,reference,relative_error,wall_ms,status";
}

std::string csv_row(const RunReport& report, const std::string& parameter,
                    const std::string& value, const std::string& status) {
    std::string row = report.scenario + "," + parameter + "," + value + "," +
                      fmt12(report.primary_result) + ",";
    if (report.primary_reference) row += fmt12(*report.primary_reference);
    row += ",";
    if (report.primary_relative_error) row += fmt12(*report.primary_relative_error);
    row += ",";
    row += report.wall_ms >= 0.0 ? fmt12(report.wall_ms) : "-";
    row += "," + status;
    return row;
}

std::string report_text(const RunReport& report, bool with_timestamp) {
    std::ostringstream os;
    os << "# " << report.version << " run report\n";
    os << "scenario: " << report.scenario << "\n";
    os << "digest: " << report.digest << "\n";
    if (with_timestamp) {
        std::time_t now = std::time(nullptr);
        char buf[64];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        os << "timestamp: " << buf << "\n";
        os << "wall_ms: " << fmt12(report.wall_ms) << "\n";
    }
    os << "\n";
    for (const auto& [k, v] : report.values) os << k << ": " << fmt12(v) << "\n";
    if (!report.gate_results.empty()) {
        os << "\n";
        for (const auto& [name, ok] : report.gate_results)
            os << "gate " << name << ": " << (ok ? "pass" : "FAIL") << "\n";
    }
    for (const auto& err : report.output_errors) os << "output error: " << err << "\n";
    return os.str();
}

namespace {

RunReport run_scenario_report(const ScenarioConfig& config, const std::string& out_dir) {
    RunReport report;
    report.scenario = to_string(config.kind);
    char digest[32];
    std::snprintf(digest, sizeof(digest), "%016llx",
                  static_cast<unsigned long long>(fnv1a(config.to_json().dump())));
    report.digest = digest;

    GateSet gates{&config.gates, &report};
    auto t0 = std::chrono::steady_clock::now();
    switch (config.kind) {
        case ScenarioKind::magnetic_ab: run_magnetic_ab(config, report, gates); break;
        case ScenarioKind::electric_ab: run_electric_ab(config, report, gates); break;
        case ScenarioKind::shielded_ab: run_shielded_ab(config, report, gates); break;
        case ScenarioKind::ac: run_ac(config, report, gates); break;
        case ScenarioKind::ac_tubes: run_ac_tubes(config, report, gates); break;
        case ScenarioKind::lorentz_check: run_lorentz_check(config, report, gates); break;
        case ScenarioKind::custom_energy: run_custom_energy(config, report, gates); break;
    }
    auto t1 = std::chrono::steady_clock::now();
    report.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

    for (const auto& out : config.outputs) {
        std::string path = join_path(out_dir, out.path);
        std::ofstream f(path);
        if (!f) {
            report.output_errors.push_back("cannot open " + path);
            continue;
        }
        // wall_ms is masked in deterministic CSV so reruns are byte-identical
        if (out.kind == "report") {
            f << report_text(report, /*with_timestamp=*/true);
        } else if (out.kind == "csv") {
            RunReport masked = report;
            if (config.quadrature.deterministic_reduction) masked.wall_ms = -1.0;
            f << csv_header() << "\n" << csv_row(masked) << "\n";
        } else if (out.kind == "phase") {
            bool any = false;
            for (const auto& [k, v] : report.values)
                if (k.find("phase") != std::string::npos || k == "difference" ||
                    k == "reference" || k == "relative_error") {
                    f << k << ": " << fmt12(v) << "\n";
                    any = true;
                }
            if (!any) report.output_errors.push_back("scenario produced no phase values");
        } else if (out.kind == "energy") {
            bool any = false;
            for (const auto& [k, v] : report.values)
                if (k.find("e") == 0 || k.find("delta_e") == 0 || k == "value" ||
                    k == "charge_part" || k == "current_part") {
                    f << k << ": " << fmt12(v) << "\n";
                    any = true;
                }
            if (!any) report.output_errors.push_back("scenario produced no energy values");
        }
    }

    return report;
}

} // namespace

RunReport run_scenario(const ScenarioConfig& config, const std::string& out_dir) {
    RunReport report = run_scenario_report(config, out_dir);
    if (!report.output_errors.empty())
        throw std::runtime_error("output failure: " + report.output_errors.front());
    if (!report.all_gates_passed()) {
        std::string failing;
        for (const auto& [name, ok] : report.gate_results)
            if (!ok) failing += (failing.empty() ? "" : ", ") + name;
        throw GateFailure("tolerance gate(s) failed: " + failing);
    }
    return report;
}

std::string sweep(const std::string& scenario_text, const std::string& parameter_path,
                  const std::vector<double>& values, const std::string& out_dir) {
    json base;
    try {
        base = json::parse(scenario_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("scenario syntax error: ") + e.what());
    }
    std::string pointer = "/";
    for (char ch : parameter_path) pointer += ch == '.' ? '/' : ch;
    json::json_pointer ptr(pointer);
    if (!base.contains(ptr) || !base.at(ptr).is_number())
        throw ConfigError("sweep parameter \"" + parameter_path +
                          "\" does not address a numeric scalar");

    std::ostringstream csv;
    csv << csv_header() << "\n";
    for (double v : values) {
        json mod = base;
        mod[ptr] = v;
        try {
            ScenarioConfig cfg = parse_scenario(mod.dump());
            cfg.outputs.clear(); // sweep rows replace per-run outputs
            RunReport rep = run_scenario_report(cfg, out_dir);
            if (cfg.quadrature.deterministic_reduction) rep.wall_ms = -1.0;
            std::string status = "ok";
            for (const auto& [name, ok] : rep.gate_results)
                if (!ok) status = status == "ok" ? "gate_failure: " + name
                                                 : status + " " + name;
            csv << csv_row(rep, parameter_path, fmt12(v), status) << "\n";
        } catch (const std::exception& e) {
            RunReport rep;
            rep.scenario = "";
            rep.wall_ms = -1.0;
            csv << csv_row(rep, parameter_path, fmt12(v), std::string("error: ") + e.what())
                << "\n";
        }
    }
    return csv.str();
}

} // namespace emvac

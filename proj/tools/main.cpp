#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "emvac/constants.hpp"
#include "emvac/scenario.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

constexpr int kExitOk = 0;
constexpr int kExitExecError = 1;
constexpr int kExitGateFailure = 2;
constexpr int kExitConfigError = 3;

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw emvac::ConfigError("cannot open scenario file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void apply_global_flags(emvac::ScenarioConfig& cfg, bool deterministic, int parallel) {
    if (deterministic) cfg.quadrature.deterministic_reduction = true;
#ifdef _OPENMP
    if (parallel > 0) omp_set_num_threads(parallel);
#else
    (void)parallel;
#endif
}

int run_selftest() {
    using namespace emvac;
    int failures = 0;
    auto check = [&](const std::string& name, bool ok, const std::string& detail) {
        std::printf("%-34s %s  %s\n", name.c_str(), ok ? "pass" : "FAIL", detail.c_str());
        if (!ok) ++failures;
    };

    {
        double approx = fourier_kernel_check(1.0, 800.0, 8000, 512);
        double exact = 1.0 / (4.0 * emvac::kPi);
        double rel = std::abs(approx - exact) / exact;
        check("fourier_kernel r=1", rel < 1e-3, "relative_error=" + std::to_string(rel));
    }
    {
        const PhysicalConstants& pc = constants();
        double defect = std::abs(pc.eps0 * pc.mu0 * pc.c * pc.c - 1.0);
        check("constants eps0*mu0*c^2", defect < 1e-14,
              "defect=" + std::to_string(defect));
    }
    {
        // two opposite unit charges 1 m apart
        Distribution a, b;
        a.label = 1;
        b.label = 2;
        a.elements.push_back({{0, 0, 0}, 1.0, {}});
        b.elements.push_back({{1, 0, 0}, -1.0, {}});
        double e = interaction_energy(a, b, {}).value;
        double expected = -coulomb_constant();
        check("coulomb pair energy", std::abs(e - expected) < 1e-6 * std::abs(expected),
              "value=" + std::to_string(e));
    }
    {
        SolenoidSpec sol;
        sol.radius = 0.05;
        sol.length = 2.5;
        sol.turns = 1000;
        sol.current = 2.0;
        Distribution dist = discretize_solenoid(sol, 200, 64);
        double net = dist.net_current_moment().norm() / dist.current_moment_scale();
        check("solenoid closed circuit", net < 1e-12, "net/scale=" + std::to_string(net));
    }
    return failures == 0 ? kExitOk : kExitExecError;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"vacuum-energy interferometer phase calculator"};
    app.set_version_flag("--version", std::string(emvac::kToolVersion));
    app.require_subcommand(1);

    std::string out_dir;
    if (const char* env = std::getenv("EMVAC_OUT_DIR")) out_dir = env;
    bool deterministic = false;
    int parallel = 0;
    app.add_option("--out", out_dir, "output directory for scenario outputs");
    app.add_flag("--deterministic", deterministic,
                 "force deterministic (serial-order) reductions");
    app.add_option("--parallel", parallel, "worker thread count for inner numerics");

    std::string run_file, validate_file, sweep_file, sweep_param;
    std::vector<double> sweep_values;
    CLI::App* cmd_run = app.add_subcommand("run", "execute a scenario file");
    cmd_run->add_option("file", run_file, "scenario file")->required();
    CLI::App* cmd_validate =
        app.add_subcommand("validate", "parse and validate a scenario file");
    cmd_validate->add_option("file", validate_file, "scenario file")->required();
    CLI::App* cmd_sweep = app.add_subcommand("sweep", "run a scenario over parameter values");
    cmd_sweep->add_option("file", sweep_file, "scenario file")->required();
    cmd_sweep->add_option("--param", sweep_param, "dotted path, e.g. sources.0.length")
        ->required();
    cmd_sweep->add_option("--values", sweep_values, "values to sweep over")->required();
    app.add_subcommand("selftest", "run the kernel-identity and oracle checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("selftest")) return run_selftest();

        if (app.got_subcommand("validate")) {
            emvac::ScenarioConfig cfg = emvac::parse_scenario(read_file(validate_file));
            std::cout << "ok: " << emvac::to_string(cfg.kind) << " scenario, "
                      << cfg.sources.size() << " source(s), " << cfg.arms.size()
                      << " arm(s), " << cfg.outputs.size() << " output(s)\n";
            return kExitOk;
        }

        if (app.got_subcommand("run")) {
            emvac::ScenarioConfig cfg = emvac::parse_scenario(read_file(run_file));
            apply_global_flags(cfg, deterministic, parallel);
            emvac::RunReport report = emvac::run_scenario(cfg, out_dir);
            std::cout << emvac::report_text(report);
            return kExitOk;
        }

        if (app.got_subcommand("sweep")) {
            std::string text = read_file(sweep_file);
            {
                emvac::ScenarioConfig cfg = emvac::parse_scenario(text);
                apply_global_flags(cfg, deterministic, parallel);
            }
            if (deterministic) {
                // force deterministic reductions for every sweep point
                nlohmann::json j = nlohmann::json::parse(text);
                j["quadrature"]["deterministic"] = true;
                text = j.dump();
            }
            std::string csv = emvac::sweep(text, sweep_param, sweep_values, out_dir);
            std::cout << csv;
            return kExitOk;
        }
    } catch (const emvac::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const emvac::GateFailure& e) {
        std::cerr << "gate failure: " << e.what() << "\n";
        return kExitGateFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitExecError;
    }
    return kExitExecError;
}

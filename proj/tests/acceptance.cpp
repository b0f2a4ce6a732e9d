// Acceptance gate: one line per criterion, nonzero exit if any fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#include "emvac/bem.hpp"
#include "emvac/constants.hpp"
#include "emvac/kernel.hpp"
#include "emvac/mesh.hpp"
#include "emvac/phases.hpp"
#include "emvac/scenario.hpp"
#include "emvac/sources.hpp"

using namespace emvac;

namespace {

int failures = 0;

void report(int index, const std::string& name, bool ok, const std::string& detail) {
    std::printf("criterion %2d %-34s %s  (%s)\n", index, name.c_str(),
                ok ? "PASS" : "FAIL", detail.c_str());
    if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

const double kElectron = 1.602176634e-19;

SolenoidSpec long_solenoid() {
    SolenoidSpec s;
    s.radius = 0.05;
    s.length = 2.5;
    s.turns = 1000;
    s.current = 0.002;
    return s;
}

PathSpec semicircle(double radius, int side, int n, double q) {
    PathSpec p;
    p.carrier = ChargeCarrier{q};
    double duration = kPi * radius / 1000.0;
    for (int k = 0; k < n; ++k) {
        double f = static_cast<double>(k) / (n - 1);
        double phi = side >= 0 ? -0.5 * kPi + kPi * f : -0.5 * kPi - kPi * f;
        p.samples.push_back(
            {f * duration, {radius * std::cos(phi), radius * std::sin(phi), 0.0}});
    }
    return p;
}

// Half-ellipse from (0,-b,0) to (0,b,0) bulging to side*a on the x axis.
PathSpec half_ellipse(double a, double b, int side, int n, double q) {
    PathSpec p;
    p.carrier = ChargeCarrier{q};
    double duration = kPi * 0.5 * (a + b) / 1000.0;
    for (int k = 0; k < n; ++k) {
        double f = static_cast<double>(k) / (n - 1);
        double phi = -0.5 * kPi + kPi * f;
        p.samples.push_back(
            {f * duration, {side * a * std::cos(phi), b * std::sin(phi), 0.0}});
    }
    return p;
}

Distribution point_charge(double q, Vec3 at, int label) {
    Distribution d;
    d.label = label;
    d.elements.push_back({at, q, {}});
    return d;
}

void criterion_1_fourier() {
    auto t0 = std::chrono::steady_clock::now();
    double v = fourier_kernel_check(1.0, 800.0, 8000, 512);
    double dt = seconds_since(t0);
    double exact = 1.0 / (4.0 * kPi);
    double rel = std::abs(v - exact) / exact;
    report(1, "fourier kernel identity", rel < 1e-3 && dt < 1.0,
           "rel=" + fmt(rel) + " t=" + fmt(dt) + "s");
}

void criterion_2_coulomb() {
    Distribution a = point_charge(1.0, {0, 0, 0}, 1);
    Distribution b = point_charge(1.0, {1, 0, 0}, 2);
    QuadratureSettings s; // deterministic by default
    double e = interaction_energy(a, b, s).value;
    double expected = coulomb_constant();
    double rel = std::abs(e - expected) / expected;

    a.elements.push_back({{0.3, 0.2, -0.4}, -0.5, {1, 2, 3}});
    b.elements.push_back({{-0.7, 0.1, 0.9}, 0.25, {-2, 0, 1}});
    InteractionEnergy ab = interaction_energy(a, b, s);
    InteractionEnergy ba = interaction_energy(b, a, s);
    bool symmetric = ab.value == ba.value && ab.charge_part == ba.charge_part &&
                     ab.current_part == ba.current_part;
    report(2, "coulomb oracle + swap symmetry", rel < 1e-9 && symmetric,
           "rel=" + fmt(rel) + (symmetric ? " bit-exact swap" : " SWAP MISMATCH"));
}

void criterion_3_mutual_inductance() {
    auto t0 = std::chrono::steady_clock::now();
    const double r1 = 0.3, r2 = 0.2, dz = 0.15, i1 = 2.0, i2 = 5.0;
    auto loop = [](double radius, double z0, double current, int segments, int label) {
        Distribution d;
        d.label = label;
        for (int s = 0; s < segments; ++s) {
            double a0 = 2.0 * kPi * s / segments;
            double a1 = 2.0 * kPi * (s + 1) / segments;
            Vec3 p0{radius * std::cos(a0), radius * std::sin(a0), z0};
            Vec3 p1{radius * std::cos(a1), radius * std::sin(a1), z0};
            d.elements.push_back({(p0 + p1) * 0.5, 0.0, (p1 - p0) * current});
        }
        return d;
    };
    double part =
        interaction_energy(loop(r1, 0, i1, 256, 1), loop(r2, dz, i2, 256, 2), {})
            .current_part;

    // dense neumann double quadrature, written independently of the kernel
    const int n = 1024;
    double m = 0.0;
    for (int s = 0; s < n; ++s) {
        double a = 2.0 * kPi * (s + 0.5) / n;
        Vec3 pa{r1 * std::cos(a), r1 * std::sin(a), 0.0};
        Vec3 ta{-std::sin(a), std::cos(a), 0.0};
        for (int t = 0; t < n; ++t) {
            double b = 2.0 * kPi * (t + 0.5) / n;
            Vec3 pb{r2 * std::cos(b), r2 * std::sin(b), dz};
            Vec3 tb{-std::sin(b), std::cos(b), 0.0};
            m += ta.dot(tb) / (pa - pb).norm();
        }
    }
    m *= constants().mu0 / (4.0 * kPi) * (2.0 * kPi * r1 / n) * (2.0 * kPi * r2 / n);
    double rel = std::abs(part - (-i1 * i2 * m)) / std::abs(i1 * i2 * m);
    double dt = seconds_since(t0);
    report(3, "neumann mutual-inductance oracle", rel < 0.005 && dt < 5.0,
           "rel=" + fmt(rel) + " t=" + fmt(dt) + "s");
}

void criterion_4_magnetic_ab() {
    auto t0 = std::chrono::steady_clock::now();
    SolenoidSpec sol = long_solenoid(); // length 2.5 = 25x loop radius
    Distribution src = discretize_solenoid(sol, 200, 64);
    QuadratureSettings qs;

    PhaseResult canon = magnetic_ab_loop_difference(semicircle(0.1, 1, 256, kElectron),
                                                    semicircle(0.1, -1, 256, kElectron),
                                                    src, qs, &sol);
    bool canon_ok = canon.relative_error && *canon.relative_error < 0.01;

    // non-enclosing loop: both arms bulge to +x, outside the solenoid
    double non = magnetic_ab_loop_difference(half_ellipse(0.06, 0.1, 1, 256, kElectron),
                                             semicircle(0.1, 1, 256, kElectron), src, qs)
                     .difference;
    bool non_ok = std::abs(non) < 0.01 * std::abs(canon.difference);

    // path-shape independence across three enclosing geometries
    double g1 = canon.difference;
    double g2 = magnetic_ab_loop_difference(semicircle(0.15, 1, 256, kElectron),
                                            semicircle(0.15, -1, 256, kElectron), src, qs)
                    .difference;
    double g3 = magnetic_ab_loop_difference(half_ellipse(0.2, 0.1, 1, 256, kElectron),
                                            half_ellipse(0.12, 0.1, -1, 256, kElectron),
                                            src, qs)
                    .difference;
    double lo = std::min({g1, g2, g3}), hi = std::max({g1, g2, g3});
    double spread = (hi - lo) / std::abs((g1 + g2 + g3) / 3.0);
    double dt = seconds_since(t0);
    report(4, "magnetic ab phase",
           canon_ok && non_ok && spread < 0.005 && dt < 30.0,
           "rel=" + fmt(canon.relative_error ? *canon.relative_error : 1.0) +
               " stray=" + fmt(std::abs(non / canon.difference)) +
               " spread=" + fmt(spread) + " t=" + fmt(dt) + "s");
}

void criterion_5_electric_ab() {
    const double volts = 1e-9, duration = 1e-3;
    PotentialTimeline u2, u3;
    for (int k = 0; k <= 32; ++k) {
        double t = duration * k / 32;
        u2.samples.push_back({t, volts});
        u3.samples.push_back({t, 0.0});
    }
    PhaseResult r = electric_ab_phase(u2, u3, kElectron);
    double expected = kElectron * volts * duration / constants().hbar;
    double rel = std::abs(r.difference - expected) / expected;
    report(5, "electric ab phase", rel < 1e-10, "rel=" + fmt(rel));
}

void criterion_6_ac() {
    WireSpec w;
    w.linear_charge_density = 1e-9;
    w.length = 2.5;
    Distribution wire = discretize_wire(w, 2000);
    QuadratureSettings qs;

    auto arm = [&](int side, Vec3 mu) {
        PathSpec p = semicircle(0.05, side, 256, 0.0);
        p.carrier = MomentCarrier{mu};
        return p;
    };
    PhaseResult axis = ac_loop_difference(arm(1, {0, 0, 1e-23}), arm(-1, {0, 0, 1e-23}),
                                          wire, w, qs);
    bool axis_ok = axis.relative_error && *axis.relative_error < 0.02;

    double perp = ac_loop_difference(arm(1, {1e-23, 0, 0}), arm(-1, {1e-23, 0, 0}),
                                     wire, w, qs)
                      .difference;
    bool perp_ok = std::abs(perp) < 0.02 * std::abs(axis.difference);

    // full pairwise-energy route: the moving dipole as a discretized loop
    // whose motion charges interact with the wire's charges
    auto arm_phase_pairwise = [&](const PathSpec& p) {
        std::vector<double> e(p.samples.size());
        for (std::size_t k = 0; k < p.samples.size(); ++k) {
            Distribution dipole =
                moving_carrier_distribution(p, p.samples[k].time, 1e-4);
            e[k] = interaction_energy(dipole, wire, qs).value;
        }
        double integral = 0.0;
        for (std::size_t k = 1; k < p.samples.size(); ++k)
            integral += 0.5 * (p.samples[k].time - p.samples[k - 1].time) *
                        (e[k] + e[k - 1]);
        return -integral / constants().hbar;
    };
    double pairwise = arm_phase_pairwise(arm(-1, {0, 0, 1e-23})) -
                      arm_phase_pairwise(arm(1, {0, 0, 1e-23}));
    double route_gap = std::abs(pairwise - axis.difference) / std::abs(axis.difference);
    report(6, "ac phase",
           axis_ok && perp_ok && route_gap < 0.02,
           "rel=" + fmt(axis.relative_error ? *axis.relative_error : 1.0) +
               " perp=" + fmt(std::abs(perp / axis.difference)) +
               " routes=" + fmt(route_gap));
}

void criterion_7_bem_charges() {
    const double R = 0.2, d = 0.5, q = 1e-9;
    SurfaceMesh sphere = make_sphere_mesh(R, {0, 0, 0}, 26, 40); // 1040 panels
    ChargeSolver solver(sphere, true, {});
    InducedChargeSolution sol = solver.solve(point_charge(q, {d, 0, 0}, 1));
    double rel_q = std::abs(sol.total_charge - (-q * R / d)) / (q * R / d);

    SurfaceMesh plate = make_plate_mesh(2.0, 2.0, 32, 32, {0, 0, 0}, {0, 0, 1});
    Distribution charge = point_charge(q, {0, 0, 0.1}, 1);
    Distribution none;
    none.label = 2;
    LorentzReport lr = lorentz_consistency_check(charge, none, plate, {});
    double image = coulomb_constant() * q * q / (4.0 * 0.1 * 0.1);
    double rel_f = std::abs(lr.f_local.z + image) / image;
    report(7, "bem charge oracles",
           sphere.panels.size() >= 1000 && rel_q < 0.01 && rel_f < 0.02,
           "panels=" + std::to_string(sphere.panels.size()) + " q_rel=" + fmt(rel_q) +
               " f_rel=" + fmt(rel_f));
}

void criterion_8_shielding() {
    auto t0 = std::chrono::steady_clock::now();
    ScenarioConfig c =
        load_scenario(std::string(EMVAC_SOURCE_DIR) + "/scenarios/shielded_ab.json");
    c.outputs.clear();
    RunReport r = run_scenario(c, "");
    double canc = r.value("cancellation_residual");
    double curl = r.value("residual_b");
    double shift = r.value("locality_shift");
    double dt = seconds_since(t0);
    std::size_t panels = c.shield->build().panels.size();
    report(8, "solenoid shielding",
           canc < 0.05 && curl < 0.05 && shift < 0.005 && panels <= 3000 && dt < 300.0,
           "cancel=" + fmt(canc) + " curl=" + fmt(curl) + " shift=" + fmt(shift) +
               " panels=" + std::to_string(panels) + " t=" + fmt(dt) + "s");
}

void criterion_9_lorentz() {
    const double q = 1e-9, d = 0.1;
    SurfaceMesh plate = make_plate_mesh(2.0, 2.0, 32, 32, {0, 0, 0}, {0, 0, 1});
    Distribution charge = point_charge(q, {0, 0, d}, 1);

    Distribution none;
    none.label = 2;
    LorentzReport image = lorentz_consistency_check(charge, none, plate, {});
    double grad_rel =
        (image.f_gradient - image.f_local).norm() / image.f_local.norm();

    // three-body witness: a fixed charge close to the plate is screened, so its
    // direct force on the probe nearly cancels against its image; the spurious
    // dE23 gradient double-counts that image and dominates the error
    Distribution fixed = point_charge(10.0 * q, {0.3, 0.0, 0.05}, 2);
    LorentzReport witness = lorentz_consistency_check(charge, fixed, plate, {});
    double grad_w =
        (witness.f_gradient - witness.f_local).norm() / witness.f_local.norm();
    double with_e23 =
        (witness.f_gradient_with_e23 - witness.f_local).norm() / witness.f_local.norm();
    report(9, "lorentz-force consistency",
           grad_rel < 0.02 && grad_w < 0.02 && with_e23 > 0.10,
           "grad=" + fmt(grad_rel) + " witness_grad=" + fmt(grad_w) +
               " e23_witness=" + fmt(with_e23));
}

void criterion_10_ac_tubes() {
    ScenarioConfig c =
        load_scenario(std::string(EMVAC_SOURCE_DIR) + "/scenarios/ac_tubes.json");
    c.outputs.clear();
    RunReport r = run_scenario(c, "");
    double residual = r.value("residual");
    report(10, "ac tube screening", residual < 0.05, "residual=" + fmt(residual));
}

void criterion_11_properties() {
    bool ok = true;
    std::string detail;
    QuadratureSettings qs;

    { // linearity
        Distribution a = point_charge(1e-9, {0, 0, 0}, 1);
        a.elements[0].current_moment = {1, 0, 0};
        Distribution b = point_charge(-2e-9, {1, 0.2, 0}, 2);
        b.elements[0].current_moment = {0, 1, 0.5};
        double base = interaction_energy(a, b, qs).value;
        Distribution b3 = b;
        b3.elements[0].charge_weight *= 3.0;
        b3.elements[0].current_moment = b3.elements[0].current_moment * 3.0;
        if (std::abs(interaction_energy(a, b3, qs).value - 3.0 * base) >
            1e-12 * std::abs(base)) {
            ok = false;
            detail += " linearity";
        }
    }
    { // sign-flip antisymmetries
        SolenoidSpec sol = long_solenoid();
        Distribution src = discretize_solenoid(sol, 40, 32);
        double fwd = magnetic_ab_loop_difference(semicircle(0.1, 1, 64, kElectron),
                                                 semicircle(0.1, -1, 64, kElectron), src,
                                                 qs)
                         .difference;
        double swp = magnetic_ab_loop_difference(semicircle(0.1, -1, 64, kElectron),
                                                 semicircle(0.1, 1, 64, kElectron), src,
                                                 qs)
                         .difference;
        double neg = magnetic_ab_loop_difference(semicircle(0.1, 1, 64, -kElectron),
                                                 semicircle(0.1, -1, 64, -kElectron),
                                                 src, qs)
                         .difference;
        if (std::abs(swp + fwd) > 1e-12 * std::abs(fwd) ||
            std::abs(neg + fwd) > 1e-12 * std::abs(fwd)) {
            ok = false;
            detail += " sign-flip";
        }
    }
    { // wavefunction-derived charge normalization
        WavefunctionGrid g;
        g.nx = g.ny = g.nz = 16;
        g.spacing = 1.0 / 16;
        g.particle_charge = kElectron;
        g.particle_mass = 9.1093837015e-31;
        g.amplitudes.resize(16 * 16 * 16);
        for (int kk = 0; kk < 16; ++kk)
            for (int jj = 0; jj < 16; ++jj)
                for (int ii = 0; ii < 16; ++ii) {
                    Vec3 p = g.cell_center(ii, jj, kk);
                    g.at(ii, jj, kk) =
                        std::polar(std::exp(-2.0 * (p - Vec3{0.5, 0.5, 0.5}).norm()),
                                   3.0 * p.x + 1.0 * p.y);
                }
        g.normalize();
        Distribution d = current_from_wavefunction(g);
        if (std::abs(d.total_charge() - kElectron) > 1e-6 * kElectron) {
            ok = false;
            detail += " wf-normalization";
        }
    }
    { // finite-difference force vs the coulomb force law
        Distribution a = point_charge(1e-9, {0, 0, 0}, 1);
        double r = 0.35, h = 1e-6;
        auto energy = [&](double x) {
            return interaction_energy(a, point_charge(2e-9, {x, 0, 0}, 2), qs).value;
        };
        double f_fd = -(energy(r + h) - energy(r - h)) / (2 * h);
        double f_exact = coulomb_constant() * 1e-9 * 2e-9 / (r * r);
        if (std::abs(f_fd - f_exact) > 1e-4 * std::abs(f_exact)) {
            ok = false;
            detail += " fd-force";
        }
    }
    { // closed circuits have no net current moment
        SolenoidSpec sol = long_solenoid();
        sol.axis = {0, 1 / std::sqrt(2.0), 1 / std::sqrt(2.0)};
        Distribution d = discretize_solenoid(sol, 30, 16);
        if (d.net_current_moment().norm() > 1e-12 * d.current_moment_scale()) {
            ok = false;
            detail += " net-moment";
        }
    }
    report(11, "property suite", ok, ok ? "all properties hold" : ("failing:" + detail));
}

} // namespace

int main() {
    criterion_1_fourier();
    criterion_2_coulomb();
    criterion_3_mutual_inductance();
    criterion_4_magnetic_ab();
    criterion_5_electric_ab();
    criterion_6_ac();
    criterion_7_bem_charges();
    criterion_8_shielding();
    criterion_9_lorentz();
    criterion_10_ac_tubes();
    criterion_11_properties();
    if (failures) std::printf("%d criterion(s) FAILED\n", failures);
    else std::printf("all 11 criteria passed\n");
    return failures ? 1 : 0;
}

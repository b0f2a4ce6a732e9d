#include "emvac/phases.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "emvac/constants.hpp"

namespace emvac {

void PhaseResult::set_reference(double ref) {
    reference = ref;
    relative_error = ref != 0.0 ? std::abs(difference - ref) / std::abs(ref)
                                : std::abs(difference);
}

void PotentialTimeline::validate() const {
    if (samples.size() < 2)
        throw std::invalid_argument("timeline needs at least 2 samples");
    for (std::size_t k = 1; k < samples.size(); ++k)
        if (!(samples[k].first > samples[k - 1].first))
            throw std::invalid_argument("timeline times must be strictly increasing");
}

double PotentialTimeline::value_at(double t) const {
    if (t <= samples.front().first) return samples.front().second;
    if (t >= samples.back().first) return samples.back().second;
    auto it = std::upper_bound(samples.begin(), samples.end(), t,
                               [](double v, const std::pair<double, double>& s) {
                                   return v < s.first;
                               });
    const auto& b = *it;
    const auto& a = *(it - 1);
    double f = (t - a.first) / (b.first - a.first);
    return a.second + f * (b.second - a.second);
}

int winding_number(const PathSpec& arm1, const PathSpec& arm2,
                   const Vec3& axis_point, const Vec3& axis_dir) {
    Vec3 a = axis_dir.normalized();
    Vec3 seed = std::abs(a.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    Vec3 u = a.cross(seed).normalized();
    Vec3 v = a.cross(u);

    auto planar = [&](const Vec3& p) {
        Vec3 d = p - axis_point;
        return std::pair<double, double>{d.dot(u), d.dot(v)};
    };

    // closed loop: arm2 forward, then arm1 reversed
    std::vector<std::pair<double, double>> loop;
    for (const auto& s : arm2.samples) loop.push_back(planar(s.position));
    for (auto it = arm1.samples.rbegin(); it != arm1.samples.rend(); ++it)
        loop.push_back(planar(it->position));
    loop.push_back(loop.front());

    double total = 0.0;
    for (std::size_t k = 1; k < loop.size(); ++k) {
        auto [x0, y0] = loop[k - 1];
        auto [x1, y1] = loop[k];
        total += std::atan2(x0 * y1 - y0 * x1, x0 * x1 + y0 * y1);
    }
    return static_cast<int>(std::lround(total / (2.0 * kPi)));
}

double magnetic_ab_arm_phase(const PathSpec& arm, const Distribution& source,
                             const QuadratureSettings& settings) {
    if (!arm.has_charge_carrier())
        throw std::invalid_argument("magnetic AB phase requires a charge carrier");
    arm.validate();
    const double q_over_hbar = arm.charge() / constants().hbar;
    double phase = 0.0;
    for (std::size_t k = 1; k < arm.samples.size(); ++k) {
        Vec3 dl = arm.samples[k].position - arm.samples[k - 1].position;
        Vec3 mid = (arm.samples[k].position + arm.samples[k - 1].position) * 0.5;
        phase += q_over_hbar * dl.dot(vector_potential(source, mid, settings));
    }
    return phase;
}

namespace {

void require_shared_endpoints(const PathSpec& a, const PathSpec& b) {
    if ((a.samples.front().position - b.samples.front().position).norm() > 1e-9 ||
        (a.samples.back().position - b.samples.back().position).norm() > 1e-9)
        throw std::invalid_argument("interferometer arms must share endpoints (tolerance 1e-9 m)");
}

} // namespace

PhaseResult magnetic_ab_loop_difference(const PathSpec& arm1, const PathSpec& arm2,
                                        const Distribution& source,
                                        const QuadratureSettings& settings,
                                        const SolenoidSpec* solenoid) {
    require_shared_endpoints(arm1, arm2);
    PhaseResult r;
    r.arm_phases = {magnetic_ab_arm_phase(arm1, source, settings),
                    magnetic_ab_arm_phase(arm2, source, settings)};
    r.difference = r.arm_phases[1] - r.arm_phases[0];
    if (solenoid) {
        int w = winding_number(arm1, arm2, solenoid->center, solenoid->axis);
        double q = arm1.charge();
        r.set_reference(w * q * solenoid->ideal_flux() / constants().hbar);
    }
    return r;
}

PhaseResult electric_ab_phase(const PotentialTimeline& u2,
                              const PotentialTimeline& u3, double q) {
    u2.validate();
    u3.validate();
    double t0 = std::max(u2.samples.front().first, u3.samples.front().first);
    double t1 = std::min(u2.samples.back().first, u3.samples.back().first);
    if (!(t1 > t0))
        throw std::invalid_argument("timelines have no common time interval");

    // merged knots keep the trapezoid exact for piecewise-linear potentials
    std::vector<double> knots{t0, t1};
    for (const auto& s : u2.samples)
        if (s.first > t0 && s.first < t1) knots.push_back(s.first);
    for (const auto& s : u3.samples)
        if (s.first > t0 && s.first < t1) knots.push_back(s.first);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

    double int_u2 = 0.0, int_u3 = 0.0;
    for (std::size_t k = 1; k < knots.size(); ++k) {
        double dt = knots[k] - knots[k - 1];
        int_u2 += 0.5 * dt * (u2.value_at(knots[k - 1]) + u2.value_at(knots[k]));
        int_u3 += 0.5 * dt * (u3.value_at(knots[k - 1]) + u3.value_at(knots[k]));
    }

    const double q_over_hbar = q / constants().hbar;
    PhaseResult r;
    r.arm_phases = {-q_over_hbar * int_u2, -q_over_hbar * int_u3};
    r.difference = r.arm_phases[1] - r.arm_phases[0]; // = (q/hbar) int (U2 - U3)
    return r;
}

double ac_interaction_energy(const Vec3& v, const Vec3& e_field, const Vec3& moment) {
    const double c = constants().c;
    if (v.norm() >= 0.1 * c)
        throw std::invalid_argument("ac_interaction_energy requires |v| < 0.1c");
    return v.dot(e_field.cross(moment)) / (c * c);
}

Vec3 electric_field(const Distribution& dist, const Vec3& point, double step,
                    const QuadratureSettings& settings) {
    auto u = [&](const Vec3& p) { return scalar_potential(dist, p, settings); };
    double inv2h = 1.0 / (2.0 * step);
    return {-(u(point + Vec3{step, 0, 0}) - u(point - Vec3{step, 0, 0})) * inv2h,
            -(u(point + Vec3{0, step, 0}) - u(point - Vec3{0, step, 0})) * inv2h,
            -(u(point + Vec3{0, 0, step}) - u(point - Vec3{0, 0, step})) * inv2h};
}

namespace {

double ac_arm_phase(const PathSpec& arm, const Distribution& wire_dist,
                    const WireSpec& wire, const QuadratureSettings& settings) {
    if (arm.has_charge_carrier())
        throw std::invalid_argument("AC phase requires a magnetic-moment carrier");
    arm.validate();
    Vec3 axis = wire.axis.normalized();
    Vec3 mu = arm.moment();

    std::vector<double> energies(arm.samples.size());
    for (std::size_t k = 0; k < arm.samples.size(); ++k) {
        const Vec3& p = arm.samples[k].position;
        Vec3 rel = p - wire.center;
        double rho = (rel - axis * rel.dot(axis)).norm();
        if (rho <= settings.min_separation)
            throw std::domain_error("arm sample inside min_separation of the wire");
        Vec3 e = electric_field(wire_dist, p, 1e-4 * rho, settings);
        energies[k] = ac_interaction_energy(arm.velocity_at_sample(k), e, mu);
    }

    double integral = 0.0;
    for (std::size_t k = 1; k < arm.samples.size(); ++k)
        integral += 0.5 * (arm.samples[k].time - arm.samples[k - 1].time) *
                    (energies[k] + energies[k - 1]);
    return -integral / constants().hbar;
}

} // namespace

PhaseResult ac_loop_difference(const PathSpec& arm1, const PathSpec& arm2,
                               const Distribution& wire_dist, const WireSpec& wire,
                               const QuadratureSettings& settings) {
    require_shared_endpoints(arm1, arm2);
    PhaseResult r;
    r.arm_phases = {ac_arm_phase(arm1, wire_dist, wire, settings),
                    ac_arm_phase(arm2, wire_dist, wire, settings)};
    r.difference = r.arm_phases[1] - r.arm_phases[0];
    int w = winding_number(arm1, arm2, wire.center, wire.axis);
    double mu_axis = arm1.moment().dot(wire.axis.normalized());
    r.set_reference(w * constants().mu0 * mu_axis * wire.linear_charge_density /
                    constants().hbar);
    return r;
}

} // namespace emvac

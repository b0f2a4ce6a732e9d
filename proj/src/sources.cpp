#include "emvac/sources.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "emvac/constants.hpp"

namespace emvac {

namespace {

Vec3 require_unit_axis(const Vec3& axis) {
    double n = axis.norm();
    if (std::abs(n - 1.0) > 1e-6)
        throw std::invalid_argument("axis must be a unit vector (|axis| deviates by more than 1e-6)");
    return axis / n;
}

// Any two unit vectors orthogonal to a and to each other.
void orthonormal_frame(const Vec3& a, Vec3& u, Vec3& v) {
    Vec3 seed = std::abs(a.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    u = a.cross(seed).normalized();
    v = a.cross(u);
}

} // namespace

double Distribution::total_charge() const {
    double q = 0.0;
    for (const auto& e : elements) q += e.charge_weight;
    return q;
}

Vec3 Distribution::net_current_moment() const {
    Vec3 m;
    for (const auto& e : elements) m += e.current_moment;
    return m;
}

double Distribution::current_moment_scale() const {
    double s = 0.0;
    for (const auto& e : elements) s += e.current_moment.norm();
    return s;
}

double SolenoidSpec::ideal_flux() const {
    return constants().mu0 * (turns / length) * current * kPi * radius * radius;
}

std::complex<double>& WavefunctionGrid::at(int i, int j, int k) {
    return amplitudes[static_cast<std::size_t>((k * ny + j) * nx + i)];
}

const std::complex<double>& WavefunctionGrid::at(int i, int j, int k) const {
    return amplitudes[static_cast<std::size_t>((k * ny + j) * nx + i)];
}

Vec3 WavefunctionGrid::cell_center(int i, int j, int k) const {
    return origin + Vec3{(i + 0.5) * spacing, (j + 0.5) * spacing, (k + 0.5) * spacing};
}

double WavefunctionGrid::norm() const {
    double s = 0.0;
    for (const auto& a : amplitudes) s += std::norm(a);
    return s * spacing * spacing * spacing;
}

void WavefunctionGrid::normalize() {
    double n = norm();
    if (n <= 0.0) throw std::invalid_argument("cannot normalize a zero wavefunction");
    double f = 1.0 / std::sqrt(n);
    for (auto& a : amplitudes) a *= f;
}

void PathSpec::validate() const {
    if (samples.size() < 2)
        throw std::invalid_argument("path needs at least 2 samples");
    for (std::size_t k = 1; k < samples.size(); ++k)
        if (!(samples[k].time > samples[k - 1].time))
            throw std::invalid_argument("path times must be strictly increasing");
    double vmax = 0.1 * constants().c;
    for (std::size_t k = 0; k < samples.size(); ++k)
        if (velocity_at_sample(k).norm() >= vmax)
            throw std::invalid_argument("path velocity exceeds 0.1c (nonrelativistic regime only)");
}

Vec3 PathSpec::velocity_at_sample(std::size_t k) const {
    std::size_t n = samples.size();
    if (k == 0)
        return (samples[1].position - samples[0].position) /
               (samples[1].time - samples[0].time);
    if (k == n - 1)
        return (samples[n - 1].position - samples[n - 2].position) /
               (samples[n - 1].time - samples[n - 2].time);
    return (samples[k + 1].position - samples[k - 1].position) /
           (samples[k + 1].time - samples[k - 1].time);
}

namespace {

std::size_t segment_index(const std::vector<PathSample>& s, double t) {
    if (t < s.front().time || t > s.back().time)
        throw std::out_of_range("time outside the path's sample range");
    auto it = std::upper_bound(s.begin(), s.end(), t,
                               [](double v, const PathSample& p) { return v < p.time; });
    std::size_t k = static_cast<std::size_t>(it - s.begin());
    if (k == 0) k = 1;
    if (k == s.size()) k = s.size() - 1;
    return k - 1; // segment [k-1, k]
}

} // namespace

Vec3 PathSpec::position_at(double time) const {
    std::size_t k = segment_index(samples, time);
    const auto& a = samples[k];
    const auto& b = samples[k + 1];
    double f = (time - a.time) / (b.time - a.time);
    return a.position + (b.position - a.position) * f;
}

Vec3 PathSpec::velocity_at(double time) const {
    std::size_t k = segment_index(samples, time);
    const auto& a = samples[k];
    const auto& b = samples[k + 1];
    double f = (time - a.time) / (b.time - a.time);
    Vec3 va = velocity_at_sample(k);
    Vec3 vb = velocity_at_sample(k + 1);
    return va + (vb - va) * f;
}

PathSpec PathSpec::reversed() const {
    PathSpec r;
    r.carrier = carrier;
    double t0 = samples.front().time, t1 = samples.back().time;
    r.samples.reserve(samples.size());
    for (auto it = samples.rbegin(); it != samples.rend(); ++it)
        r.samples.push_back({t0 + (t1 - it->time), it->position});
    return r;
}

Distribution discretize_solenoid(const SolenoidSpec& spec, int loop_count,
                                 int segments_per_loop, int label) {
    if (spec.radius <= 0 || spec.length <= 0 || spec.turns < 1)
        throw std::invalid_argument("solenoid needs radius > 0, length > 0, turns >= 1");
    if (loop_count < 1) throw std::invalid_argument("loop_count must be >= 1");
    if (segments_per_loop < 8) throw std::invalid_argument("segments_per_loop must be >= 8");
    Vec3 axis = require_unit_axis(spec.axis);
    Vec3 u, v;
    orthonormal_frame(axis, u, v);

    double loop_current = spec.current * spec.turns / loop_count;
    Distribution d;
    d.label = label;
    d.elements.reserve(static_cast<std::size_t>(loop_count) * segments_per_loop);
    for (int l = 0; l < loop_count; ++l) {
        // loops evenly spaced over [-L/2, +L/2], cell-centered
        double zl = -0.5 * spec.length + (l + 0.5) * spec.length / loop_count;
        Vec3 loop_center = spec.center + axis * zl;
        for (int s = 0; s < segments_per_loop; ++s) {
            double ph0 = 2.0 * kPi * s / segments_per_loop;
            double ph1 = 2.0 * kPi * (s + 1) / segments_per_loop;
            Vec3 p0 = loop_center + spec.radius * (std::cos(ph0) * u + std::sin(ph0) * v);
            Vec3 p1 = loop_center + spec.radius * (std::cos(ph1) * u + std::sin(ph1) * v);
            CurrentElement e;
            e.position = (p0 + p1) * 0.5;
            e.current_moment = (p1 - p0) * loop_current;
            d.elements.push_back(e);
        }
    }
    return d;
}

Distribution discretize_wire(const WireSpec& spec, int element_count, int label) {
    if (spec.length <= 0) throw std::invalid_argument("wire length must be > 0");
    if (element_count < 2) throw std::invalid_argument("element_count must be >= 2");
    Vec3 axis = require_unit_axis(spec.axis);
    double dq = spec.linear_charge_density * spec.length / element_count;
    Distribution d;
    d.label = label;
    d.elements.reserve(static_cast<std::size_t>(element_count));
    for (int k = 0; k < element_count; ++k) {
        double s = -0.5 * spec.length + (k + 0.5) * spec.length / element_count;
        CurrentElement e;
        e.position = spec.center + axis * s;
        e.charge_weight = dq;
        d.elements.push_back(e);
    }
    return d;
}

Distribution current_from_wavefunction(const WavefunctionGrid& grid, int label) {
    if (grid.spacing <= 0 || grid.nx < 2 || grid.ny < 2 || grid.nz < 2)
        throw std::invalid_argument("grid needs spacing > 0 and dims >= 2");
    if (grid.amplitudes.size() !=
        static_cast<std::size_t>(grid.nx) * grid.ny * grid.nz)
        throw std::invalid_argument("amplitude count does not match dims");
    if (std::abs(grid.norm() - 1.0) > 1e-6)
        throw std::invalid_argument("wavefunction grid not normalized (|norm-1| > 1e-6)");

    const double h = grid.spacing;
    const double d3r = h * h * h;
    const double q = grid.particle_charge;
    const double coef = q * constants().hbar / grid.particle_mass;

    // central differences in the interior, one-sided at faces
    auto grad = [&](int i, int j, int k) {
        std::complex<double> gx, gy, gz;
        if (i == 0) gx = (grid.at(1, j, k) - grid.at(0, j, k)) / h;
        else if (i == grid.nx - 1) gx = (grid.at(i, j, k) - grid.at(i - 1, j, k)) / h;
        else gx = (grid.at(i + 1, j, k) - grid.at(i - 1, j, k)) / (2 * h);
        if (j == 0) gy = (grid.at(i, 1, k) - grid.at(i, 0, k)) / h;
        else if (j == grid.ny - 1) gy = (grid.at(i, j, k) - grid.at(i, j - 1, k)) / h;
        else gy = (grid.at(i, j + 1, k) - grid.at(i, j - 1, k)) / (2 * h);
        if (k == 0) gz = (grid.at(i, j, 1) - grid.at(i, j, 0)) / h;
        else if (k == grid.nz - 1) gz = (grid.at(i, j, k) - grid.at(i, j, k - 1)) / h;
        else gz = (grid.at(i, j, k + 1) - grid.at(i, j, k - 1)) / (2 * h);
        return std::array<std::complex<double>, 3>{gx, gy, gz};
    };

    Distribution d;
    d.label = label;
    d.elements.reserve(grid.amplitudes.size());
    for (int k = 0; k < grid.nz; ++k)
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i) {
                const auto psi = grid.at(i, j, k);
                auto g = grad(i, j, k);
                CurrentElement e;
                e.position = grid.cell_center(i, j, k);
                e.charge_weight = q * std::norm(psi) * d3r;
                e.current_moment = {coef * std::imag(std::conj(psi) * g[0]) * d3r,
                                    coef * std::imag(std::conj(psi) * g[1]) * d3r,
                                    coef * std::imag(std::conj(psi) * g[2]) * d3r};
                d.elements.push_back(e);
            }
    return d;
}

Distribution moving_carrier_distribution(const PathSpec& path, double time,
                                         double dipole_edge, int segments_per_edge,
                                         int label) {
    path.validate();
    Vec3 pos = path.position_at(time);
    Vec3 vel = path.velocity_at(time);
    const double c2 = constants().c * constants().c;

    Distribution d;
    d.label = label;
    if (path.has_charge_carrier()) {
        CurrentElement e;
        e.position = pos;
        e.charge_weight = path.charge();
        e.current_moment = vel * path.charge();
        d.elements.push_back(e);
        return d;
    }

    Vec3 mu = path.moment();
    double m = mu.norm();
    if (m <= 0.0) throw std::invalid_argument("moment carrier with zero magnetic moment");
    if (dipole_edge <= 0.0) throw std::invalid_argument("dipole_edge must be > 0");
    if (segments_per_edge < 1) throw std::invalid_argument("segments_per_edge must be >= 1");

    // square loop of edge dipole_edge normal to mu, current mu/edge^2
    Vec3 n = mu / m;
    Vec3 u, v;
    orthonormal_frame(n, u, v);
    double half = 0.5 * dipole_edge;
    double current = m / (dipole_edge * dipole_edge);
    Vec3 corners[4] = {pos - half * u - half * v, pos + half * u - half * v,
                       pos + half * u + half * v, pos - half * u + half * v};
    d.elements.reserve(static_cast<std::size_t>(4) * segments_per_edge);
    for (int e = 0; e < 4; ++e) {
        Vec3 a = corners[e];
        Vec3 b = corners[(e + 1) % 4];
        for (int s = 0; s < segments_per_edge; ++s) {
            Vec3 p0 = a + (b - a) * (static_cast<double>(s) / segments_per_edge);
            Vec3 p1 = a + (b - a) * (static_cast<double>(s + 1) / segments_per_edge);
            CurrentElement el;
            el.position = (p0 + p1) * 0.5;
            el.current_moment = (p1 - p0) * current;
            el.charge_weight = vel.dot(el.current_moment) / c2; // rho = v.J/c^2
            d.elements.push_back(el);
        }
    }
    return d;
}

} // namespace emvac

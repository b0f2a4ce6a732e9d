#include "emvac/bem.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "emvac/constants.hpp"
#include "emvac/phases.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace emvac {

namespace {

// integral of 1/r over a planar polygon, field point in the polygon plane
// (the solid-angle term of the Hess-Smith potential vanishes at z = 0)
double inplane_polygon_integral(const Vec3* verts, int nv, const Vec3& normal,
                                const Vec3& point) {
    double sum = 0.0;
    for (int k = 0; k < nv; ++k) {
        const Vec3& a = verts[k];
        const Vec3& b = verts[(k + 1) % nv];
        Vec3 edge = b - a;
        double len = edge.norm();
        if (len == 0.0) continue;
        Vec3 t = edge / len;
        Vec3 nu = t.cross(normal); // in-plane outward edge normal (CCW polygon)
        double h = (a - point).dot(nu);
        double sa = (point - a).dot(t) * -1.0; // signed coordinate of a along edge
        double sb = sa + len;
        double ra = (a - point).norm();
        double rb = (b - point).norm();
        double num = rb + sb;
        double den = ra + sa;
        if (num <= 0.0 || den <= 0.0) continue; // point on the edge line, no contribution
        sum += h * std::log(num / den);
    }
    return sum;
}

double polygon_near_integral(const Vec3* verts, int nv, const Vec3& point, int depth) {
    Vec3 c;
    for (int k = 0; k < nv; ++k) c += verts[k];
    c = c / nv;
    Vec3 nsum;
    for (int k = 0; k < nv; ++k)
        nsum += (verts[k] - c).cross(verts[(k + 1) % nv] - c) * 0.5;
    double area = nsum.norm();
    if (area == 0.0) return 0.0;
    double diameter = 0.0;
    for (int k = 0; k < nv; ++k) diameter = std::max(diameter, (verts[k] - c).norm());
    double d = (point - c).norm();
    if (depth >= 2 || d > 2.0 * diameter) return area / std::max(d, 1e-300);

    // in-plane points get the exact polygon integral
    Vec3 n = nsum / area;
    if (std::abs((point - c).dot(n)) < 1e-9 * diameter)
        return inplane_polygon_integral(verts, nv, n, point);

    // 4-way midpoint subdivision
    double sum = 0.0;
    if (nv == 3) {
        Vec3 m01 = (verts[0] + verts[1]) * 0.5;
        Vec3 m12 = (verts[1] + verts[2]) * 0.5;
        Vec3 m20 = (verts[2] + verts[0]) * 0.5;
        Vec3 sub[4][3] = {{verts[0], m01, m20}, {m01, verts[1], m12},
                          {m20, m12, verts[2]}, {m01, m12, m20}};
        for (auto& s : sub) sum += polygon_near_integral(s, 3, point, depth + 1);
    } else {
        Vec3 m01 = (verts[0] + verts[1]) * 0.5;
        Vec3 m12 = (verts[1] + verts[2]) * 0.5;
        Vec3 m23 = (verts[2] + verts[3]) * 0.5;
        Vec3 m30 = (verts[3] + verts[0]) * 0.5;
        Vec3 sub[4][4] = {{verts[0], m01, c, m30}, {m01, verts[1], m12, c},
                          {c, m12, verts[2], m23}, {m30, c, m23, verts[3]}};
        for (auto& s : sub) sum += polygon_near_integral(s, 4, point, depth + 1);
    }
    return sum;
}

void gather_vertices(const SurfaceMesh& mesh, const Panel& p, Vec3* out) {
    for (int k = 0; k < p.nv; ++k)
        out[k] = mesh.vertices[static_cast<std::size_t>(p.v[static_cast<std::size_t>(k)])];
}

} // namespace

double panel_unit_potential(const SurfaceMesh& mesh, std::size_t panel_index,
                            const Vec3& point) {
    const Panel& p = mesh.panels[panel_index];
    Vec3 verts[4];
    gather_vertices(mesh, p, verts);
    return coulomb_constant() * polygon_near_integral(verts, p.nv, point, 0);
}

Vec3 magnetic_field(const Distribution& dist, const Vec3& point, double step,
                    const QuadratureSettings& settings) {
    auto A = [&](const Vec3& q) { return vector_potential(dist, q, settings); };
    double inv2h = 1.0 / (2.0 * step);
    Vec3 dx = (A(point + Vec3{step, 0, 0}) - A(point - Vec3{step, 0, 0})) * inv2h;
    Vec3 dy = (A(point + Vec3{0, step, 0}) - A(point - Vec3{0, step, 0})) * inv2h;
    Vec3 dz = (A(point + Vec3{0, 0, step}) - A(point - Vec3{0, 0, step})) * inv2h;
    return {dy.z - dz.y, dz.x - dx.z, dx.y - dy.x};
}

// ---------------------------------------------------------------------------
// ChargeSolver

struct ChargeSolver::Impl {
    SurfaceMesh mesh;
    QuadratureSettings settings;
    bool grounded = true;
    bool closed = false;
    Eigen::MatrixXd potential; // N x N panel-to-centroid unit potentials
    Eigen::PartialPivLU<Eigen::MatrixXd> lu; // of the (possibly augmented) system
    double condition_estimate = 0.0;
    std::vector<Vec3> check_points;

    std::size_t n() const { return mesh.panels.size(); }

    void require_outside(const Distribution& external) const {
        if (!closed) return;
        Vec3 lo = mesh.bbox_min(), hi = mesh.bbox_max();
        for (const auto& e : external.elements) {
            const Vec3& p = e.position;
            if (p.x < lo.x || p.x > hi.x || p.y < lo.y || p.y > hi.y || p.z < lo.z ||
                p.z > hi.z)
                continue;
            if (mesh.contains(p))
                throw std::invalid_argument("external source element inside the conductor surface");
        }
    }
};

ChargeSolver::ChargeSolver(const SurfaceMesh& mesh, bool grounded,
                           const QuadratureSettings& settings)
    : impl_(std::make_unique<Impl>()) {
    if (mesh.panels.empty()) throw std::invalid_argument("empty mesh");
    impl_->mesh = mesh;
    impl_->settings = settings;
    impl_->grounded = grounded;
    impl_->closed = mesh.is_closed();
    if (!grounded && !impl_->closed)
        throw std::invalid_argument("isolated-conductor solve requires a closed mesh");

    const long long n = static_cast<long long>(mesh.panels.size());
    impl_->potential.resize(n, n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long long k = 0; k < n; ++k)
        for (long long l = 0; l < n; ++l)
            impl_->potential(k, l) = panel_unit_potential(
                mesh, static_cast<std::size_t>(l),
                mesh.panels[static_cast<std::size_t>(k)].centroid);

    if (grounded) {
        impl_->lu.compute(impl_->potential);
    } else {
        Eigen::MatrixXd aug(n + 1, n + 1);
        aug.topLeftCorner(n, n) = impl_->potential;
        for (long long k = 0; k < n; ++k) {
            aug(k, n) = -1.0; // unknown surface potential V_s
            aug(n, k) = mesh.panels[static_cast<std::size_t>(k)].area;
        }
        aug(n, n) = 0.0;
        impl_->lu.compute(aug);
    }
    Eigen::VectorXd diag = impl_->lu.matrixLU().diagonal().cwiseAbs();
    double dmax = diag.maxCoeff();
    double dmin = diag.minCoeff();
    impl_->condition_estimate = dmin > 0.0 ? dmax / dmin : INFINITY;
    if (dmin == 0.0)
        throw std::runtime_error("singular collocation system (zero pivot)");

    // off-centroid surface points used for the boundary-condition residual
    std::size_t stride = std::max<std::size_t>(1, mesh.panels.size() / 64);
    for (std::size_t k = 0; k < mesh.panels.size(); k += stride) {
        const Panel& p = mesh.panels[k];
        Vec3 v0 = mesh.vertices[static_cast<std::size_t>(p.v[0])];
        impl_->check_points.push_back(p.centroid + (v0 - p.centroid) * 0.25);
    }
}

ChargeSolver::~ChargeSolver() = default;
ChargeSolver::ChargeSolver(ChargeSolver&&) noexcept = default;

const SurfaceMesh& ChargeSolver::mesh() const { return impl_->mesh; }

InducedChargeSolution ChargeSolver::solve(const Distribution& external) const {
    impl_->require_outside(external);
    const long long n = static_cast<long long>(impl_->n());
    const long long dim = impl_->grounded ? n : n + 1;
    Eigen::VectorXd rhs(dim);
    for (long long k = 0; k < n; ++k)
        rhs(k) = -scalar_potential(external, impl_->mesh.panels[static_cast<std::size_t>(k)].centroid,
                                   impl_->settings);
    if (!impl_->grounded) rhs(n) = 0.0;

    Eigen::VectorXd x = impl_->lu.solve(rhs);
    InducedChargeSolution sol;
    sol.sigma.assign(x.data(), x.data() + n);
    sol.surface_potential = impl_->grounded ? 0.0 : x(n);
    sol.condition_estimate = impl_->condition_estimate;
    for (long long k = 0; k < n; ++k)
        sol.total_charge += sol.sigma[static_cast<std::size_t>(k)] *
                            impl_->mesh.panels[static_cast<std::size_t>(k)].area;

    double worst = 0.0;
    for (const auto& p : impl_->check_points) {
        double u = scalar_potential(external, p, impl_->settings) +
                   scalar_potential_of(sol, p) - sol.surface_potential;
        worst = std::max(worst, std::abs(u));
    }
    sol.residual = worst;
    return sol;
}

double ChargeSolver::scalar_potential_of(const InducedChargeSolution& sol,
                                         const Vec3& point) const {
    double u = 0.0;
    for (std::size_t l = 0; l < impl_->n(); ++l)
        u += sol.sigma[l] * panel_unit_potential(impl_->mesh, l, point);
    return u;
}

Distribution ChargeSolver::induced_distribution(const InducedChargeSolution& sol,
                                                int label) const {
    Distribution d;
    d.label = label;
    d.elements.reserve(impl_->n());
    for (std::size_t l = 0; l < impl_->n(); ++l) {
        CurrentElement e;
        e.position = impl_->mesh.panels[l].centroid;
        e.charge_weight = sol.sigma[l] * impl_->mesh.panels[l].area;
        d.elements.push_back(e);
    }
    return d;
}

double ChargeSolver::induced_self_energy(const InducedChargeSolution& sol) const {
    const long long n = static_cast<long long>(impl_->n());
    Eigen::Map<const Eigen::VectorXd> sigma(sol.sigma.data(), n);
    Eigen::VectorXd u = impl_->potential * sigma; // induced potential at centroids
    double w = 0.0;
    for (long long k = 0; k < n; ++k)
        w += sol.sigma[static_cast<std::size_t>(k)] *
             impl_->mesh.panels[static_cast<std::size_t>(k)].area * u(k);
    return 0.5 * w;
}

// ---------------------------------------------------------------------------
// CurrentShieldSolver

struct CurrentShieldSolver::Impl {
    SurfaceMesh mesh;
    std::vector<TrianglePatch> tris;
    std::vector<std::array<Vec3, 3>> tri_grads; // hat-function surface gradients
    std::vector<Vec3> probes;
    QuadratureSettings settings;
    double fd_step = 0.0;
    Eigen::MatrixXd response; // 3*probes x vertices
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
    bool underdetermined = false;

    Vec3 external_b(const Distribution& external, const Vec3& p) const {
        return magnetic_field(external, p, fd_step, settings);
    }
};

CurrentShieldSolver::CurrentShieldSolver(const SurfaceMesh& mesh, std::vector<Vec3> probes,
                                         const QuadratureSettings& settings)
    : impl_(std::make_unique<Impl>()) {
    if (mesh.panels.empty()) throw std::invalid_argument("empty mesh");
    if (probes.empty()) throw std::invalid_argument("no interior probes given");
    impl_->mesh = mesh;
    impl_->tris = impl_->mesh.triangles();
    impl_->probes = std::move(probes);
    impl_->settings = settings;
    impl_->fd_step = 1e-4 * (mesh.bbox_max() - mesh.bbox_min()).norm();

    if (mesh.is_closed())
        for (const auto& p : impl_->probes)
            if (!mesh.contains(p))
                throw std::invalid_argument("probe outside the closed shield surface");

    // hat gradients: grad lambda_i = n x (v_{i+2} - v_{i+1}) / (2 A)
    impl_->tri_grads.reserve(impl_->tris.size());
    for (const auto& t : impl_->tris) {
        std::array<Vec3, 3> g;
        for (int i = 0; i < 3; ++i) {
            Vec3 e = impl_->mesh.vertices[static_cast<std::size_t>(t.v[(i + 2) % 3])] -
                     impl_->mesh.vertices[static_cast<std::size_t>(t.v[(i + 1) % 3])];
            g[static_cast<std::size_t>(i)] = t.normal.cross(e) / (2.0 * t.area);
        }
        impl_->tri_grads.push_back(g);
    }

    const long long nvert = static_cast<long long>(impl_->mesh.vertices.size());
    const long long nprobe = static_cast<long long>(impl_->probes.size());
    impl_->response.resize(3 * nprobe, nvert);
    impl_->underdetermined = 3 * nprobe < nvert;

    // per-vertex basis: unit stream value on one vertex, zero elsewhere;
    // the current lives on the incident triangles only
    std::vector<std::vector<CurrentElement>> basis(static_cast<std::size_t>(nvert));
    for (std::size_t ti = 0; ti < impl_->tris.size(); ++ti) {
        const auto& t = impl_->tris[ti];
        for (int i = 0; i < 3; ++i) {
            CurrentElement e;
            e.position = t.centroid;
            e.current_moment =
                t.normal.cross(impl_->tri_grads[ti][static_cast<std::size_t>(i)]) * t.area;
            basis[static_cast<std::size_t>(t.v[static_cast<std::size_t>(i)])].push_back(e);
        }
    }

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (long long j = 0; j < nvert; ++j) {
        Distribution dj;
        dj.label = 3;
        dj.elements = basis[static_cast<std::size_t>(j)];
        if (dj.elements.empty()) {
            impl_->response.col(j).setZero();
            continue;
        }
        for (long long p = 0; p < nprobe; ++p) {
            Vec3 b = magnetic_field(dj, impl_->probes[static_cast<std::size_t>(p)],
                                    impl_->fd_step, impl_->settings);
            impl_->response(3 * p + 0, j) = b.x;
            impl_->response(3 * p + 1, j) = b.y;
            impl_->response(3 * p + 2, j) = b.z;
        }
    }
    impl_->cod.compute(impl_->response);
}

CurrentShieldSolver::~CurrentShieldSolver() = default;
CurrentShieldSolver::CurrentShieldSolver(CurrentShieldSolver&&) noexcept = default;

const std::vector<Vec3>& CurrentShieldSolver::probes() const { return impl_->probes; }

InducedCurrentSolution CurrentShieldSolver::solve(const Distribution& external) const {
    const long long nprobe = static_cast<long long>(impl_->probes.size());
    Eigen::VectorXd rhs(3 * nprobe);
    double bmax = 0.0;
    for (long long p = 0; p < nprobe; ++p) {
        Vec3 b = impl_->external_b(external, impl_->probes[static_cast<std::size_t>(p)]);
        rhs(3 * p + 0) = -b.x;
        rhs(3 * p + 1) = -b.y;
        rhs(3 * p + 2) = -b.z;
        bmax = std::max(bmax, b.norm());
    }

    InducedCurrentSolution sol;
    sol.underdetermined = impl_->underdetermined;
    if (bmax == 0.0) {
        sol.stream_values.assign(impl_->mesh.vertices.size(), 0.0);
        sol.residual_b = 0.0;
        return sol;
    }
    Eigen::VectorXd psi = impl_->cod.solve(rhs);
    sol.stream_values.assign(psi.data(), psi.data() + psi.size());
    Eigen::VectorXd resid = impl_->response * psi - rhs;
    double worst = 0.0;
    for (long long p = 0; p < nprobe; ++p)
        worst = std::max(worst, Vec3{resid(3 * p), resid(3 * p + 1), resid(3 * p + 2)}.norm());
    sol.residual_b = worst / bmax;
    return sol;
}

Distribution CurrentShieldSolver::induced_distribution(const InducedCurrentSolution& sol,
                                                       int label) const {
    Distribution d;
    d.label = label;
    d.elements.reserve(impl_->tris.size());
    for (std::size_t ti = 0; ti < impl_->tris.size(); ++ti) {
        const auto& t = impl_->tris[ti];
        Vec3 grad;
        for (int i = 0; i < 3; ++i)
            grad += impl_->tri_grads[ti][static_cast<std::size_t>(i)] *
                    sol.stream_values[static_cast<std::size_t>(t.v[static_cast<std::size_t>(i)])];
        CurrentElement e;
        e.position = t.centroid;
        e.current_moment = t.normal.cross(grad) * t.area;
        d.elements.push_back(e);
    }
    return d;
}

// ---------------------------------------------------------------------------
// one-shot wrappers and scenario verifiers

InducedChargeSolution solve_induced_charge(const SurfaceMesh& mesh,
                                           const Distribution& external, bool grounded,
                                           const QuadratureSettings& settings) {
    return ChargeSolver(mesh, grounded, settings).solve(external);
}

InducedCurrentSolution solve_induced_current(const SurfaceMesh& mesh,
                                             const Distribution& external,
                                             const std::vector<Vec3>& probes,
                                             const QuadratureSettings& settings) {
    return CurrentShieldSolver(mesh, probes, settings).solve(external);
}

std::vector<Vec3> solenoid_bore_probes(const SolenoidSpec& spec, int n_per_axis) {
    if (n_per_axis < 2) throw std::invalid_argument("need at least 2 probes per axis");
    Vec3 a = spec.axis.normalized();
    Vec3 seed = std::abs(a.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    Vec3 u = a.cross(seed).normalized();
    Vec3 v = a.cross(u);
    std::vector<Vec3> probes;
    double rmax = 0.9 * spec.radius;
    double zmax = 0.45 * spec.length;
    for (int i = 0; i < n_per_axis; ++i)
        for (int j = 0; j < n_per_axis; ++j)
            for (int k = 0; k < n_per_axis; ++k) {
                double x = -rmax + 2.0 * rmax * i / (n_per_axis - 1);
                double y = -rmax + 2.0 * rmax * j / (n_per_axis - 1);
                double z = -zmax + 2.0 * zmax * k / (n_per_axis - 1);
                if (x * x + y * y > rmax * rmax) continue;
                probes.push_back(spec.center + u * x + v * y + a * z);
            }
    return probes;
}

ShieldReport verify_shield_cancellation(const Distribution& particle,
                                        const Distribution& solenoid,
                                        const SurfaceMesh& shield_mesh,
                                        const std::vector<Vec3>& probes,
                                        const QuadratureSettings& settings) {
    if (shield_mesh.is_closed()) {
        for (const auto& e : particle.elements)
            if (shield_mesh.contains(e.position))
                throw std::invalid_argument("particle element inside the shield");
        for (const auto& e : solenoid.elements)
            if (!shield_mesh.contains(e.position))
                throw std::invalid_argument("solenoid element outside the shield");
    }
    CurrentShieldSolver solver(shield_mesh, probes, settings);
    InducedCurrentSolution sol = solver.solve(particle);
    Distribution induced = solver.induced_distribution(sol, 3);

    ShieldReport r;
    r.residual_b = sol.residual_b;
    r.delta_e12 = interaction_energy(particle, solenoid, settings).value;
    r.delta_e13 = interaction_energy(particle, induced, settings).value;
    r.delta_e23 = interaction_energy(solenoid, induced, settings).value;
    r.cancellation_residual =
        r.delta_e12 != 0.0 ? std::abs(r.delta_e23 + r.delta_e12) / std::abs(r.delta_e12)
                           : std::abs(r.delta_e23);
    return r;
}

namespace {

double nearest_panel_distance(const SurfaceMesh& mesh, const Vec3& p) {
    double d = 1e300;
    for (const auto& panel : mesh.panels) d = std::min(d, (panel.centroid - p).norm());
    return d;
}

} // namespace

LorentzReport lorentz_consistency_check(const Distribution& charge,
                                        const Distribution& fixed,
                                        const SurfaceMesh& conductor,
                                        const QuadratureSettings& settings) {
    if (charge.elements.size() != 1)
        throw std::invalid_argument("lorentz_consistency_check expects a single-element charge");
    const double q1 = charge.elements[0].charge_weight;
    const Vec3 r1 = charge.elements[0].position;
    const bool have_fixed = !fixed.elements.empty();

    ChargeSolver solver(conductor, /*grounded=*/true, settings);
    double d_mesh = nearest_panel_distance(conductor, r1);

    // By linearity the induced charge splits into the response to the probe and
    // the (position-independent) response to the fixed sources; the latter is
    // solved once.
    InducedChargeSolution sol_fixed;
    Distribution induced_fixed;
    if (have_fixed) {
        sol_fixed = solver.solve(fixed);
        induced_fixed = solver.induced_distribution(sol_fixed, 3);
    }

    auto solve_at = [&](const Vec3& pos) {
        Distribution probe;
        probe.label = charge.label;
        CurrentElement e;
        e.position = pos;
        e.charge_weight = q1;
        probe.elements.push_back(e);
        return std::pair<Distribution, InducedChargeSolution>{probe, solver.solve(probe)};
    };

    // W = dE12 + dE13 + (self-energy of the probe-driven induced charge); see
    // README for the grounded conductor energy convention. -grad W reproduces
    // the local force; adding grad dE23 double-counts the image of the fixed
    // sources, which is what the witness configuration exposes.
    auto energy = [&](const Vec3& pos, bool with_e23) {
        auto [probe, sol] = solve_at(pos);
        Distribution induced = solver.induced_distribution(sol, 3);
        double w = interaction_energy(probe, induced, settings).value +
                   solver.induced_self_energy(sol);
        if (have_fixed) {
            w += interaction_energy(probe, fixed, settings).value +
                 interaction_energy(probe, induced_fixed, settings).value;
            if (with_e23) {
                w += interaction_energy(fixed, induced, settings).value +
                     interaction_energy(fixed, induced_fixed, settings).value;
            }
        }
        return w;
    };

    LorentzReport rep;
    {
        auto [probe, sol] = solve_at(r1);
        double h = 1e-4 * d_mesh;
        auto u_env = [&](const Vec3& p) {
            double u = solver.scalar_potential_of(sol, p);
            if (have_fixed)
                u += scalar_potential(fixed, p, settings) +
                     solver.scalar_potential_of(sol_fixed, p);
            return u;
        };
        double inv2h = 1.0 / (2.0 * h);
        Vec3 e_total{-(u_env(r1 + Vec3{h, 0, 0}) - u_env(r1 - Vec3{h, 0, 0})) * inv2h,
                     -(u_env(r1 + Vec3{0, h, 0}) - u_env(r1 - Vec3{0, h, 0})) * inv2h,
                     -(u_env(r1 + Vec3{0, 0, h}) - u_env(r1 - Vec3{0, 0, h})) * inv2h};
        rep.f_local = e_total * q1;
    }

    double hg = 1e-4 * d_mesh;
    auto grad = [&](bool with_e23) {
        Vec3 g;
        g.x = (energy(r1 + Vec3{hg, 0, 0}, with_e23) - energy(r1 - Vec3{hg, 0, 0}, with_e23)) /
              (2 * hg);
        g.y = (energy(r1 + Vec3{0, hg, 0}, with_e23) - energy(r1 - Vec3{0, hg, 0}, with_e23)) /
              (2 * hg);
        g.z = (energy(r1 + Vec3{0, 0, hg}, with_e23) - energy(r1 - Vec3{0, 0, hg}, with_e23)) /
              (2 * hg);
        return -g;
    };
    rep.f_gradient = grad(false);
    rep.f_gradient_with_e23 = grad(true);
    return rep;
}

AcTubeReport verify_ac_tube_cancellation(const PathSpec& arm_inside_tube,
                                         const Distribution& wire,
                                         const SurfaceMesh& tube_mesh,
                                         const QuadratureSettings& settings) {
    if (arm_inside_tube.has_charge_carrier())
        throw std::invalid_argument("AC tube check requires a moment carrier");
    arm_inside_tube.validate();
    const Vec3 mu = arm_inside_tube.moment();

    ChargeSolver solver(tube_mesh, /*grounded=*/true, settings);

    auto wire_distance = [&](const Vec3& p) {
        double d = 1e300;
        for (const auto& e : wire.elements) d = std::min(d, (e.position - p).norm());
        return d;
    };

    // The tube grounds out the wire's field; the dipole's own motion-induced
    // charges are v.J/c^2-suppressed and do not enter the screening balance.
    InducedChargeSolution sol = solver.solve(wire);

    const auto& samples = arm_inside_tube.samples;
    std::vector<double> e_w(samples.size()), e_i(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const Vec3& p = samples[k].position;
        Vec3 v = arm_inside_tube.velocity_at_sample(k);
        double dw = wire_distance(p);
        if (dw <= settings.min_separation)
            throw std::domain_error("arm sample inside min_separation of the wire");

        Vec3 e_field_wire = electric_field(wire, p, 1e-4 * dw, settings);
        double dp = nearest_panel_distance(tube_mesh, p);
        double h = 1e-4 * dp;
        double inv2h = 1.0 / (2.0 * h);
        auto ui = [&](const Vec3& q) { return solver.scalar_potential_of(sol, q); };
        Vec3 e_field_ind{-(ui(p + Vec3{h, 0, 0}) - ui(p - Vec3{h, 0, 0})) * inv2h,
                         -(ui(p + Vec3{0, h, 0}) - ui(p - Vec3{0, h, 0})) * inv2h,
                         -(ui(p + Vec3{0, 0, h}) - ui(p - Vec3{0, 0, h})) * inv2h};
        e_w[k] = ac_interaction_energy(v, e_field_wire, mu);
        e_i[k] = ac_interaction_energy(v, e_field_ind, mu);
    }

    AcTubeReport rep;
    double num = 0.0, den = 0.0;
    for (std::size_t k = 1; k < samples.size(); ++k) {
        double dt = samples[k].time - samples[k - 1].time;
        rep.e_wire += 0.5 * dt * (e_w[k] + e_w[k - 1]);
        rep.e_induced += 0.5 * dt * (e_i[k] + e_i[k - 1]);
        num += 0.5 * dt * (std::abs(e_w[k] + e_i[k]) + std::abs(e_w[k - 1] + e_i[k - 1]));
        den += 0.5 * dt * (std::abs(e_w[k]) + std::abs(e_w[k - 1]));
    }
    rep.residual = den > 0.0 ? num / den : 0.0;
    return rep;
}

} // namespace emvac

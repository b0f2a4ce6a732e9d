#include "emvac/kernel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "emvac/constants.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace emvac {

namespace {

// Effective inverse distance under the regularization settings.
// Returns 0 when the pair is excluded.
inline double inv_distance(double r, const QuadratureSettings& s) {
    if (s.softening_mode == SofteningMode::plummer_soften) {
        double eps = s.min_separation;
        return 1.0 / std::sqrt(r * r + eps * eps);
    }
    if (r <= s.min_separation || r == 0.0) return 0.0;
    return 1.0 / r;
}

} // namespace

double scalar_potential(const Distribution& dist, const Vec3& point,
                        const QuadratureSettings& settings) {
    if (dist.elements.empty())
        throw std::invalid_argument("scalar_potential on an empty distribution");
    const double k = coulomb_constant();
    double sum = 0.0;
    for (const auto& e : dist.elements) {
        double r = (point - e.position).norm();
        if (r == 0.0 && settings.softening_mode == SofteningMode::exclude_pair &&
            settings.min_separation == 0.0)
            throw std::domain_error("potential evaluated exactly on an element with no regularization");
        sum += e.charge_weight * inv_distance(r, settings);
    }
    return k * sum;
}

Vec3 vector_potential(const Distribution& dist, const Vec3& point,
                      const QuadratureSettings& settings) {
    if (dist.elements.empty())
        throw std::invalid_argument("vector_potential on an empty distribution");
    const double k = constants().mu0 / (4.0 * kPi);
    Vec3 sum;
    for (const auto& e : dist.elements) {
        double r = (point - e.position).norm();
        if (r == 0.0 && settings.softening_mode == SofteningMode::exclude_pair &&
            settings.min_separation == 0.0)
            throw std::domain_error("potential evaluated exactly on an element with no regularization");
        sum += e.current_moment * inv_distance(r, settings);
    }
    return k * sum;
}

InteractionEnergy interaction_energy(const Distribution& dist_i,
                                     const Distribution& dist_j,
                                     const QuadratureSettings& settings) {
    if (dist_i.label == dist_j.label)
        throw std::invalid_argument("self-energy excluded: distributions share label " +
                                    std::to_string(dist_i.label));
    if (dist_i.elements.empty() || dist_j.elements.empty())
        throw std::invalid_argument("interaction_energy on an empty distribution");

    // label-canonical order makes the sum bit-exact under argument swap
    const Distribution* a = &dist_i;
    const Distribution* b = &dist_j;
    if (a->label > b->label) std::swap(a, b);

    const double inv_eps0 = 1.0 / constants().eps0;
    const double mu0 = constants().mu0;
    const double quarter_pi_inv = 1.0 / (4.0 * kPi);
    const long long na = static_cast<long long>(a->elements.size());
    const long long nb = static_cast<long long>(b->elements.size());

    double charge_sum = 0.0, current_sum = 0.0;
    long long used = 0, excluded = 0;

    const bool det = settings.deterministic_reduction;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : charge_sum, current_sum, used, excluded) if (!det)
#endif
    for (long long k = 0; k < na; ++k) {
        const auto& ek = a->elements[static_cast<std::size_t>(k)];
        double cs = 0.0, js = 0.0;
        long long u = 0, x = 0;
        for (long long l = 0; l < nb; ++l) {
            const auto& el = b->elements[static_cast<std::size_t>(l)];
            double r = (ek.position - el.position).norm();
            double ir = inv_distance(r, settings);
            if (ir == 0.0) {
                ++x;
                continue;
            }
            cs += ek.charge_weight * el.charge_weight * ir;
            js += ek.current_moment.dot(el.current_moment) * ir;
            ++u;
        }
        charge_sum += cs;
        current_sum += js;
        used += u;
        excluded += x;
    }

    InteractionEnergy e;
    e.charge_part = quarter_pi_inv * inv_eps0 * charge_sum;
    e.current_part = -quarter_pi_inv * mu0 * current_sum;
    e.value = e.charge_part + e.current_part;
    e.pair_count_used = used;
    e.pair_count_excluded = excluded;
    return e;
}

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.resize(static_cast<std::size_t>(n));
    w.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double xi = std::cos(kPi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = xi;
            for (int j = 2; j <= n; ++j) {
                double p2 = ((2 * j - 1) * xi * p1 - (j - 1) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            double dp = n * (xi * p1 - p0) / (xi * xi - 1.0);
            double dx = p1 / dp;
            xi -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double p0 = 1.0, p1 = xi;
        for (int j = 2; j <= n; ++j) {
            double p2 = ((2 * j - 1) * xi * p1 - (j - 1) * p0) / j;
            p0 = p1;
            p1 = p2;
        }
        double dp = n * (xi * p1 - p0) / (xi * xi - 1.0);
        x[static_cast<std::size_t>(i)] = xi;
        w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - xi * xi) * dp * dp);
    }
}

} // namespace

double fourier_kernel_check(double r, double k_max, int radial_points,
                            int angular_points) {
    if (r <= 0.0) throw std::domain_error("fourier_kernel_check requires r > 0");
    if (k_max <= 0.0 || radial_points < 2 || angular_points < 2)
        throw std::invalid_argument("fourier_kernel_check: bad quadrature parameters");

    std::vector<double> gx, gw;
    gauss_legendre(angular_points, gx, gw);

    // after the azimuthal integral: (1/(4 pi^2)) int_0^kmax dk int_-1^1 cos(k r u) du
    auto angular = [&](double k) {
        double s = 0.0;
        for (std::size_t i = 0; i < gx.size(); ++i)
            s += gw[i] * std::cos(k * r * gx[i]);
        return s;
    };

    int n = radial_points % 2 == 0 ? radial_points : radial_points + 1; // Simpson needs even
    double h = k_max / n;
    double sum = angular(0.0) + angular(k_max);
    for (int i = 1; i < n; ++i)
        sum += (i % 2 == 1 ? 4.0 : 2.0) * angular(i * h);
    double radial = sum * h / 3.0;
    return radial / (4.0 * kPi * kPi);
}

} // namespace emvac

#ifndef EMVAC_KERNEL_HPP
#define EMVAC_KERNEL_HPP

#include "emvac/sources.hpp"
#include "emvac/vec3.hpp"

namespace emvac {

enum class SofteningMode { exclude_pair, plummer_soften };

struct QuadratureSettings {
    double min_separation = 0.0; // m, pair-exclusion / softening radius
    SofteningMode softening_mode = SofteningMode::exclude_pair;
    /// When set, pairwise sums run in fixed index order and results are
    /// bit-reproducible; otherwise the outer loop is parallel.
    bool deterministic_reduction = true;
};

/// Vacuum-energy interaction between two element clouds, split into the
/// rho*rho/eps0 and -mu0 J.J parts.
struct InteractionEnergy {
    double value = 0.0;        // J
    double charge_part = 0.0;  // J
    double current_part = 0.0; // J
    long long pair_count_used = 0;
    long long pair_count_excluded = 0;
};

/// Effective scalar potential sum_k q_k / (4 pi eps0 |p - r_k|), volts.
double scalar_potential(const Distribution& dist, const Vec3& point,
                        const QuadratureSettings& settings);

/// Effective vector potential sum_k mu0 m_k / (4 pi |p - r_k|), T m.
Vec3 vector_potential(const Distribution& dist, const Vec3& point,
                      const QuadratureSettings& settings);

/// Pairwise double sum of [q_k q_l / eps0 - mu0 m_k . m_l] / (4 pi r_kl).
/// Symmetric under argument swap; bit-exact so under deterministic
/// reduction (pairs are visited in label-canonical order).
InteractionEnergy interaction_energy(const Distribution& dist_i,
                                     const Distribution& dist_j,
                                     const QuadratureSettings& settings);

/// Truncated numerical evaluation of the Coulomb kernel's Fourier
/// representation, int d3k e^{ik.r} / ((2 pi)^3 k^2) up to k_max.
/// Converges to 1/(4 pi r). Angular integral by Gauss-Legendre with
/// angular_points nodes, radial by composite Simpson on radial_points
/// intervals.
double fourier_kernel_check(double r, double k_max, int radial_points,
                            int angular_points);

} // namespace emvac

#endif

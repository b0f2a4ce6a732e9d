#ifndef EMVAC_PHASES_HPP
#define EMVAC_PHASES_HPP

#include <optional>
#include <vector>

#include "emvac/kernel.hpp"
#include "emvac/sources.hpp"

namespace emvac {

struct PhaseResult {
    std::vector<double> arm_phases; // rad, one per arm
    double difference = 0.0;        // rad, arm2 - arm1
    std::optional<double> reference;      // rad, analytic value when known
    std::optional<double> relative_error; // |difference - reference| / |reference|

    void set_reference(double ref);
};

/// Sampled effective scalar potential U(t) seen by one arm.
struct PotentialTimeline {
    std::vector<std::pair<double, double>> samples; // (time s, potential V)

    void validate() const;
    double value_at(double t) const; // linear interpolation
};

/// Signed number of times the closed loop (arm2 forward, arm1 reversed)
/// encircles the line through axis_point along axis_dir.
int winding_number(const PathSpec& arm1, const PathSpec& arm2,
                   const Vec3& axis_point, const Vec3& axis_dir);

/// Accumulated phase (q/hbar) sum_segments dl . A_source(midpoint), the
/// line-integral form of -int dt dE_12/hbar.
double magnetic_ab_arm_phase(const PathSpec& arm, const Distribution& source,
                             const QuadratureSettings& settings);

/// Phase difference between two endpoint-sharing arms. When the solenoid
/// that built the source is supplied, the analytic reference
/// winding * q Phi_B / hbar is attached.
PhaseResult magnetic_ab_loop_difference(const PathSpec& arm1, const PathSpec& arm2,
                                        const Distribution& source,
                                        const QuadratureSettings& settings,
                                        const SolenoidSpec* solenoid = nullptr);

/// (q/hbar) int dt [U2(t) - U3(t)] over the common time interval,
/// trapezoid with linear interpolation.
PhaseResult electric_ab_phase(const PotentialTimeline& u2,
                              const PotentialTimeline& u3, double q);

/// Moving-dipole interaction energy (1/c^2) v . (E x mu), J.
double ac_interaction_energy(const Vec3& v, const Vec3& e_field, const Vec3& moment);

/// Per-arm phase -int dt dE_12/hbar with dE_12 = (1/c^2) v.(E x mu) and E
/// from central differences of the wire's scalar potential. Reference is
/// winding * mu0 * mu_axis * lambda / hbar.
PhaseResult ac_loop_difference(const PathSpec& arm1, const PathSpec& arm2,
                               const Distribution& wire_dist, const WireSpec& wire,
                               const QuadratureSettings& settings);

/// E = -grad U of a distribution by central differences with the given step.
Vec3 electric_field(const Distribution& dist, const Vec3& point, double step,
                    const QuadratureSettings& settings);

} // namespace emvac

#endif

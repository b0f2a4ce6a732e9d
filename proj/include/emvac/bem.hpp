#ifndef EMVAC_BEM_HPP
#define EMVAC_BEM_HPP

#include <memory>
#include <vector>

#include "emvac/kernel.hpp"
#include "emvac/mesh.hpp"
#include "emvac/sources.hpp"

namespace emvac {

struct InducedChargeSolution {
    std::vector<double> sigma; // C/m^2 per panel
    double total_charge = 0.0; // C
    double residual = 0.0;     // max |potential deviation| at check points, V
    double surface_potential = 0.0; // V_s (0 when grounded)
    double condition_estimate = 0.0;
};

struct InducedCurrentSolution {
    std::vector<double> stream_values; // A per mesh vertex
    double residual_b = 0.0; // max |B_total| / max |B_external| over probes
    bool underdetermined = false;
};

struct ShieldReport {
    double delta_e12 = 0.0; // J
    double delta_e13 = 0.0; // J
    double delta_e23 = 0.0; // J
    double cancellation_residual = 0.0; // |dE23 + dE12| / |dE12|
    double residual_b = 0.0;
};

struct LorentzReport {
    Vec3 f_local;            // N, q1 * E_total(r1)
    Vec3 f_gradient;         // N, -grad (dE12 + dE13 + induced self-energy)
    Vec3 f_gradient_with_e23; // N, same with dE23 added
};

struct AcTubeReport {
    double e_wire = 0.0;    // J, time integral weight of the wire-field energy
    double e_induced = 0.0; // J, same for the induced-charge field
    double residual = 0.0;  // int |e_w + e_i| dt / int |e_w| dt
};

/// Potential at `point` from unit surface charge density on one panel,
/// in volts: exact in-plane polygon integral for the panel's own centroid,
/// 4-way sub-panel quadrature in the near field, centroid monopole far away.
double panel_unit_potential(const SurfaceMesh& mesh, std::size_t panel_index,
                            const Vec3& point);

/// First-kind collocation solver for induced surface charge on a perfect
/// conductor. The dense matrix is factorized once; solve() per external
/// source reuses the factorization.
class ChargeSolver {
  public:
    ChargeSolver(const SurfaceMesh& mesh, bool grounded,
                 const QuadratureSettings& settings);
    ~ChargeSolver();
    ChargeSolver(ChargeSolver&&) noexcept;

    InducedChargeSolution solve(const Distribution& external) const;
    Distribution induced_distribution(const InducedChargeSolution& sol, int label) const;
    /// (1/2) sum_k sigma_k area_k U_induced(c_k): the induced surface
    /// charge's own field energy.
    double induced_self_energy(const InducedChargeSolution& sol) const;
    double scalar_potential_of(const InducedChargeSolution& sol, const Vec3& point) const;
    const SurfaceMesh& mesh() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Least-squares stream-function solver: vertex stream values whose
/// divergence-free surface current cancels the external B at the probes.
class CurrentShieldSolver {
  public:
    CurrentShieldSolver(const SurfaceMesh& mesh, std::vector<Vec3> probes,
                        const QuadratureSettings& settings);
    ~CurrentShieldSolver();
    CurrentShieldSolver(CurrentShieldSolver&&) noexcept;

    InducedCurrentSolution solve(const Distribution& external) const;
    Distribution induced_distribution(const InducedCurrentSolution& sol, int label) const;
    const std::vector<Vec3>& probes() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// B = curl A by central differences of the pairwise vector potential.
Vec3 magnetic_field(const Distribution& dist, const Vec3& point, double step,
                    const QuadratureSettings& settings);

// -- one-shot wrappers -------------------------------------------------------

InducedChargeSolution solve_induced_charge(const SurfaceMesh& mesh,
                                           const Distribution& external, bool grounded,
                                           const QuadratureSettings& settings);

InducedCurrentSolution solve_induced_current(const SurfaceMesh& mesh,
                                             const Distribution& external,
                                             const std::vector<Vec3>& probes,
                                             const QuadratureSettings& settings);

/// Regular grid of probe points filling the solenoid bore (n^3 candidates,
/// those inside the bore kept).
std::vector<Vec3> solenoid_bore_probes(const SolenoidSpec& spec, int n_per_axis = 5);

/// Shielded-solenoid energy bookkeeping: solves the induced shield current
/// against the particle's field and reports dE12, dE13, dE23 and the
/// cancellation residual |dE23 + dE12| / |dE12|.
ShieldReport verify_shield_cancellation(const Distribution& particle,
                                        const Distribution& solenoid,
                                        const SurfaceMesh& shield_mesh,
                                        const std::vector<Vec3>& probes,
                                        const QuadratureSettings& settings);

/// Electrostatic three-body force bookkeeping. The gradient energies use
/// the grounded-conductor convention described in the README (the induced
/// charge's self-energy is part of the potential-energy function).
LorentzReport lorentz_consistency_check(const Distribution& charge,
                                        const Distribution& fixed,
                                        const SurfaceMesh& conductor,
                                        const QuadratureSettings& settings);

/// Moving-dipole arm inside a grounded tube near a charged wire: checks
/// that the induced-charge field cancels the wire field along the arm.
AcTubeReport verify_ac_tube_cancellation(const PathSpec& arm_inside_tube,
                                         const Distribution& wire,
                                         const SurfaceMesh& tube_mesh,
                                         const QuadratureSettings& settings);

} // namespace emvac

#endif

#ifndef EMVAC_SOURCES_HPP
#define EMVAC_SOURCES_HPP

#include <complex>
#include <variant>
#include <vector>

#include "emvac/vec3.hpp"

namespace emvac {

/// Discretization atom carrying both a charge weight rho*d3r and a current
/// moment J*d3r. Every source in the simulator reduces to a cloud of these.
struct CurrentElement {
    Vec3 position;        // m
    double charge_weight = 0.0; // C
    Vec3 current_moment;  // A m
};

/// Labeled cloud of current elements. Labels follow the subsystem indexing
/// convention: 1 = quantum particle, 2 = solenoid/wire/tube, 3 = shield.
struct Distribution {
    int label = 0;
    std::vector<CurrentElement> elements;

    double total_charge() const;
    Vec3 net_current_moment() const;
    /// Sum of |current_moment| over elements, the scale against which a
    /// closed circuit's net moment is compared.
    double current_moment_scale() const;
};

struct SolenoidSpec {
    double radius = 0.0;  // m
    double length = 0.0;  // m
    double turns = 1.0;
    double current = 0.0; // A
    Vec3 axis{0, 0, 1};
    Vec3 center{0, 0, 0};

    /// Ideal interior flux mu0*(turns/length)*current*pi*radius^2, Wb.
    double ideal_flux() const;
};

struct WireSpec {
    double linear_charge_density = 0.0; // C/m
    Vec3 axis{0, 0, 1};
    Vec3 center{0, 0, 0};
    double length = 0.0; // m
};

/// Uniform cubic-cell grid of a complex wavefunction, used to derive the
/// particle charge/current densities.
struct WavefunctionGrid {
    Vec3 origin;
    double spacing = 0.0; // m
    int nx = 0, ny = 0, nz = 0;
    std::vector<std::complex<double>> amplitudes; // nx*ny*nz, x fastest
    double particle_charge = 0.0; // C
    double particle_mass = 0.0;   // kg

    std::complex<double>& at(int i, int j, int k);
    const std::complex<double>& at(int i, int j, int k) const;
    Vec3 cell_center(int i, int j, int k) const;
    double norm() const; // sum |psi|^2 spacing^3
    void normalize();
};

struct ChargeCarrier {
    double charge = 0.0; // C
};

struct MomentCarrier {
    Vec3 moment; // A m^2
};

struct PathSample {
    double time = 0.0; // s
    Vec3 position;     // m
};

/// Timed polyline for one interferometer arm. Velocities come from central
/// finite differences of the samples (one-sided at the endpoints).
struct PathSpec {
    std::vector<PathSample> samples;
    std::variant<ChargeCarrier, MomentCarrier> carrier = ChargeCarrier{};

    bool has_charge_carrier() const { return std::holds_alternative<ChargeCarrier>(carrier); }
    double charge() const { return std::get<ChargeCarrier>(carrier).charge; }
    Vec3 moment() const { return std::get<MomentCarrier>(carrier).moment; }

    /// Throws std::invalid_argument on any violated path invariant
    /// (non-monotonic times, fewer than 2 samples, relativistic speeds).
    void validate() const;

    Vec3 velocity_at_sample(std::size_t k) const;
    Vec3 position_at(double time) const;
    Vec3 velocity_at(double time) const;
    PathSpec reversed() const;
};

// -- construction operations ------------------------------------------------

/// Solenoid as loop_count stacked circular loops of straight segments,
/// each loop carrying current*turns/loop_count.
Distribution discretize_solenoid(const SolenoidSpec& spec, int loop_count,
                                 int segments_per_loop, int label = 2);

/// Line charge as element_count point charges along the axis.
Distribution discretize_wire(const WireSpec& spec, int element_count, int label = 2);

/// One element per grid cell: charge q|psi|^2 d3r and current
/// (q hbar / m) Im(psi* grad psi) d3r with central-difference gradients.
Distribution current_from_wavefunction(const WavefunctionGrid& grid, int label = 1);

/// Point carrier or small-square-loop dipole at the interpolated path
/// position. For a moment carrier the loop edge is dipole_edge and each
/// element additionally carries the motion-induced charge v.(J d3r)/c^2.
Distribution moving_carrier_distribution(const PathSpec& path, double time,
                                         double dipole_edge = 1e-3,
                                         int segments_per_edge = 8,
                                         int label = 1);

} // namespace emvac

#endif

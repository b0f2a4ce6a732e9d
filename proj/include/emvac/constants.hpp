#ifndef EMVAC_CONSTANTS_HPP
#define EMVAC_CONSTANTS_HPP

namespace emvac {

/// SI physical constants (CODATA 2018). eps0 is derived from mu0 and c so
/// that c^2 * eps0 * mu0 == 1 holds to machine precision.
struct PhysicalConstants {
    double c = 299792458.0;            // speed of light, m/s
    double mu0 = 1.25663706212e-6;     // vacuum permeability, H/m
    double eps0 = 1.0 / (1.25663706212e-6 * 299792458.0 * 299792458.0); // F/m
    double hbar = 1.054571817e-34;     // reduced Planck constant, J s
};

inline const PhysicalConstants& constants() {
    static const PhysicalConstants k{};
    return k;
}

/// 1/(4 pi eps0), the Coulomb constant in V m / C.
inline double coulomb_constant() {
    static const double k = 1.0 / (4.0 * 3.14159265358979323846 * constants().eps0);
    return k;
}

inline constexpr double kPi = 3.14159265358979323846;

} // namespace emvac

#endif

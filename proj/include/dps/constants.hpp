#pragma once

#include <numbers>

namespace dps {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Vacuum permittivity, F/m (CODATA 2018).
inline constexpr double eps0 = 8.8541878128e-12;
/// Speed of light in vacuum, m/s.
inline constexpr double c0 = 299792458.0;

inline constexpr double rad_to_deg = 180.0 / std::numbers::pi;
inline constexpr double deg_to_rad = std::numbers::pi / 180.0;

/// Numerical tolerances used across the network algebra.
struct Tolerances {
    /// Relative tolerance for determinant / reciprocity / round-trip checks.
    double relative = 1e-9;
    /// Floor below which the ABCD->S denominator is treated as singular.
    double singular_floor = 1e-15;
    /// Relative distance from the shunt-admittance pole treated as "on" the pole.
    double pole_relative = 1e-12;
};

inline constexpr Tolerances default_tolerances{};

inline constexpr double default_z0 = 50.0;

}  // namespace dps

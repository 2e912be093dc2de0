#pragma once

#include <numbers>

namespace fcqed::constants {

// CODATA 2018 exact / recommended values, SI.
inline constexpr double c = 299792458.0;             // m/s
inline constexpr double hbar = 1.054571817e-34;      // J s
inline constexpr double h = 6.62607015e-34;          // J s
inline constexpr double epsilon0 = 8.8541878128e-12; // F/m
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Cesium D2 line (6S1/2 -> 6P3/2), D. A. Steck, "Cesium D Line Data", rev. 2.2.1.
inline constexpr double cs_d2_wavelength = 852.34727582e-9;     // vacuum wavelength, m
inline constexpr double cs_d2_natural_linewidth = 5.2227e6;     // Gamma / 2pi, Hz

} // namespace fcqed::constants

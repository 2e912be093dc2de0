// fiber_mode.hpp - fundamental guided mode of a step-index fiber, the cavity
// mode volume built from it and the resulting atom-cavity coupling rate.
//
// The HE11 mode is solved from the full vector dispersion relation. The scalar
// LP01 solution of the weakly guiding approximation is kept alongside it as an
// independent cross-check.

#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "fcqed/units.hpp"

namespace fcqed {

struct FiberSpec {
    double core_radius = 2.8e-6;  // m
    double n_core = 0.0;
    double n_clad = 0.0;
    double wavelength = 852.3e-9; // m

    double numerical_aperture() const;
    double v_number() const;
};

inline constexpr double single_mode_cutoff = 2.404825557695773;  // first zero of J0

// Malitson (1965) Sellmeier fit for fused silica, wavelength in metres.
double fused_silica_index(double wavelength);

// Cladding from fused silica at the given wavelength, core from the NA.
FiberSpec fiber_from_na(double core_radius, double numerical_aperture, double wavelength);
// SM800-class default: 2.8 um core radius, NA 0.12, at 852.3 nm.
FiberSpec default_fiber(double wavelength = 852.3e-9);

FiberSpec validate(const FiberSpec& fiber);

enum class ModeModel { VectorHE11, ScalarLP01 };

struct ModeOptions {
    int radial_panels = 48;            // Gauss-Legendre panels per region (core, cladding)
    double outer_radius_factor = 15.0; // integrate to this many core radii
};

class ModeSolution {
public:
    ModeModel model = ModeModel::VectorHE11;
    double n_eff = 0.0;
    double u = 0.0;  // core transverse parameter a sqrt(k0^2 n_core^2 - beta^2)
    double w = 0.0;  // cladding decay parameter a sqrt(beta^2 - k0^2 n_clad^2)
    double v = 0.0;
    double core_radius = 0.0;
    double effective_area = 0.0;      // integral of |phi|^2 over the cross section, m^2
    double truncation_error = 0.0;    // estimated area beyond the outer radius, m^2
    double residual = 0.0;            // dispersion-relation residual at the root, scaled by u^2
    std::vector<std::string> warnings;

    // |phi(r)|^2 with max |phi| = 1 (polarization-averaged for HE11).
    double intensity(double r) const;
    // Unnormalized field components (|E_r|, |E_phi|, |E_z|) of the circularly
    // polarized HE11 mode; for LP01 only the first entry is populated.
    std::array<double, 3> field_components(double r) const;

    friend ModeSolution solve_fundamental_mode(const FiberSpec&, const ModeOptions&);
    friend ModeSolution solve_lp01_mode(const FiberSpec&, const ModeOptions&);

private:
    double raw_intensity(double r) const;
    double beta_ = 0.0;
    double s_ = 0.0;
    double peak_ = 1.0;
};

class ModeSolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

ModeSolution solve_fundamental_mode(const FiberSpec& fiber, const ModeOptions& options = {});
ModeSolution solve_lp01_mode(const FiberSpec& fiber, const ModeOptions& options = {});

// Left side minus right side of the HE11 characteristic equation, scaled by u^2.
double he11_characteristic(const FiberSpec& fiber, double u);

// Integrate an already-solved profile over the cross section.
double integrate_effective_area(const ModeSolution& mode, const ModeOptions& options = {});

// Marcuse's Gaussian mode-field radius w / a = 0.65 + 1.619 V^-1.5 + 2.879 V^-6
// and the matching area pi w^2 / 2.
double marcuse_mode_radius(const FiberSpec& fiber);
double gaussian_effective_area(const FiberSpec& fiber);

// V_mode = L_cav * effective_area; tapers and nanofiber neglected.
double mode_volume(const ModeSolution& mode, const CavityGeometry& geom);

struct AtomSpec {
    double dipole_moment = 0.0;        // C m
    AngularRate transition_frequency;  // rad/s
};

AtomSpec validate(const AtomSpec& atom);

// Cesium D2 F=4 -> F'=5' cycling transition. The dipole moment is the
// two-level value fixed by the natural linewidth,
// mu^2 = 3 pi eps0 hbar c^3 Gamma / omega^3.
AtomSpec cesium_d2_cycling();

// g = sqrt(mu^2 omega / (2 hbar eps0 V_mode)) phi
AngularRate coupling_rate(const AtomSpec& atom, double mode_volume, double phi = 1.0);

} // namespace fcqed

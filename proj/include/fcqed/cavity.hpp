// cavity.hpp - closed-form steady-state observables of the atom-cavity system
// in the weak-driving limit.

#pragma once

#include <complex>
#include <span>
#include <vector>

#include "fcqed/units.hpp"

namespace fcqed {

// Transmission through the cavity for probe detuning delta = omega_P - omega_A:
//
//   T = |2 sqrt(k1 k2) (i delta + gamma)|^2 / |(i (delta - delta_C) + kappa)(i delta + gamma) + g^2|^2
//
// delta_C is SystemParams::cavity_detuning; with delta_C = 0 this is the usual
// co-resonant expression.
double transmission(const SystemParams& params, AngularRate delta);

// Peak empty-cavity transmission 4 k1 k2 / kappa^2.
double empty_cavity_peak(const SystemParams& params);

// transmission / transmission(g = 0, delta = 0). Throws ValidationError when
// the empty cavity does not transmit (k1 k2 = 0).
double normalized_transmission(const SystemParams& params, AngularRate delta);

std::vector<double> normalized_spectrum(const SystemParams& params, std::span<const AngularRate> deltas);

// Complex denominator of the transmission amplitude.
std::complex<double> response_denominator(const SystemParams& params, AngularRate delta);

struct NormalModes {
    AngularRate plus_detuning;
    AngularRate minus_detuning;
    AngularRate plus_linewidth;  // 2 x imaginary part of the complex root
    AngularRate minus_linewidth;
    bool resolved = false;       // g^2 > ((kappa - gamma) / 2)^2

    AngularRate splitting() const { return plus_detuning - minus_detuning; }
};

// Complex roots of the response denominator.
NormalModes normal_modes(const SystemParams& params);

// Field decay rate of one mirror (or of a round-trip loss) from its power
// transmission fraction, low-loss approximation: kappa_i = c f / (4 n_eff L).
AngularRate mirror_to_rate(double fraction, const CavityGeometry& geom);
// Inverse of mirror_to_rate.
double rate_to_fraction(AngularRate rate, const CavityGeometry& geom);
// Single-pass power transmission from a round-trip power loss.
double one_way_transmission(double round_trip_loss);
double round_trip_loss(double one_way_transmission);

enum class Coupling { Undercoupled, CriticallyCoupled, Overcoupled };

struct CouplingRegime {
    Coupling label = Coupling::CriticallyCoupled;
    AngularRate margin;  // kappa2 - kappa1 - kappa_loss
};

// |margin| <= critical_tolerance * kappa is labelled critical.
inline constexpr double critical_tolerance = 1e-3;

CouplingRegime classify_coupling(const SystemParams& params);
const char* to_string(Coupling c);

// C = g^2 / (2 kappa gamma)
double cooperativity(const SystemParams& params);
// g > kappa and g > gamma
bool is_strongly_coupled(const SystemParams& params);

} // namespace fcqed

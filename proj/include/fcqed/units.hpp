// units.hpp - angular-rate type, system parameters and their validation.
//
// Every rate and detuning in the library is an angular frequency in rad/s.
// The "2pi x MHz" notation used in the lab only appears at I/O boundaries
// (parse_rate / format_two_pi_mhz and the JSON helpers in io.hpp).

#pragma once

#include <compare>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fcqed/constants.hpp"

namespace fcqed {

class AngularRate {
public:
    constexpr AngularRate() = default;

    static constexpr AngularRate rad_per_s(double v) { return AngularRate(v); }
    static constexpr AngularRate two_pi_mhz(double v) { return AngularRate(v * constants::two_pi * 1e6); }
    static constexpr AngularRate two_pi_hz(double v) { return AngularRate(v * constants::two_pi); }

    constexpr double rad_per_s() const { return value_; }
    constexpr double two_pi_mhz() const { return value_ / (constants::two_pi * 1e6); }

    constexpr AngularRate operator-() const { return AngularRate(-value_); }
    constexpr AngularRate& operator+=(AngularRate o) { value_ += o.value_; return *this; }
    constexpr AngularRate& operator-=(AngularRate o) { value_ -= o.value_; return *this; }
    friend constexpr AngularRate operator+(AngularRate a, AngularRate b) { return AngularRate(a.value_ + b.value_); }
    friend constexpr AngularRate operator-(AngularRate a, AngularRate b) { return AngularRate(a.value_ - b.value_); }
    friend constexpr AngularRate operator*(AngularRate a, double s) { return AngularRate(a.value_ * s); }
    friend constexpr AngularRate operator*(double s, AngularRate a) { return AngularRate(a.value_ * s); }
    friend constexpr AngularRate operator/(AngularRate a, double s) { return AngularRate(a.value_ / s); }
    friend constexpr double operator/(AngularRate a, AngularRate b) { return a.value_ / b.value_; }
    friend constexpr auto operator<=>(AngularRate, AngularRate) = default;

private:
    constexpr explicit AngularRate(double v) : value_(v) {}
    double value_ = 0.0;
};

namespace literals {
constexpr AngularRate operator""_2pi_MHz(long double v) { return AngularRate::two_pi_mhz(static_cast<double>(v)); }
constexpr AngularRate operator""_2pi_MHz(unsigned long long v) { return AngularRate::two_pi_mhz(static_cast<double>(v)); }
} // namespace literals

// Parses "2π×6.4 MHz", "2pi*6.4 MHz", "2pi x 6.4MHz" or "4.02e7 rad/s".
AngularRate parse_rate(std::string_view text);
// Canonical 3-decimal form, e.g. "2π×6.400 MHz".
std::string format_two_pi_mhz(AngularRate rate);

// Raised by every validate() overload; what() names the violated invariant.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct SystemParams {
    AngularRate kappa1;          // field decay through the input mirror (FBG1)
    AngularRate kappa2;          // field decay through the output coupler (FBG2)
    AngularRate kappa_loss;      // intracavity round-trip loss
    AngularRate gamma;           // atomic polarization decay
    AngularRate g;               // atom-cavity coupling
    std::optional<AngularRate> omega_A;  // absolute atomic frequency, only needed for wavelengths
    AngularRate cavity_detuning; // omega_C - omega_A

    constexpr AngularRate kappa() const { return kappa1 + kappa2 + kappa_loss; }
};

struct CavityGeometry {
    double length = 0.33;          // m
    double effective_index = 1.45; // guided-mode index
};

SystemParams validate(const SystemParams& params);
CavityGeometry validate(const CavityGeometry& geom);

// Free spectral range 2 pi c / (2 n_eff L).
AngularRate fsr(const CavityGeometry& geom);

// Critically coupled empty-cavity configuration matching the measured rates:
// kappa = 2pi x 6.4 MHz, gamma = 2pi x 2.6 MHz, kappa1 = 2pi x 0.12 MHz,
// kappa2 = kappa1 + kappa_loss. The atom coupling is set to 2pi x 7.8 MHz.
SystemParams reference_params();

// n evenly spaced points including both ends.
std::vector<double> linspace(double lo, double hi, std::size_t n);

} // namespace fcqed

// ringdown.hpp - reflected intensity of the one-sided cavity after the drive
// is switched off, as a closed-form solution and as a numerical integration of
// the coupled-mode equations.
//
// Model (rotating frame, carrier factored out):
//   da/dt = -kappa a + sqrt(2 kappa2) s_in(t)
//   s_out = -s_in + sqrt(2 kappa2) a
//   s_in  = s0                     t < 0
//         = s0 exp(-kappa_s t)     t >= 0

#pragma once

#include <complex>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fcqed/units.hpp"

namespace fcqed {

struct RingdownParams {
    AngularRate kappa1;
    AngularRate kappa2;
    AngularRate kappa_loss;
    AngularRate kappa_s = default_switch_off_rate();  // input switch-off rate, must exceed kappa
    double s0 = 1.0;                                  // sqrt(W)
    AngularRate omega0;                               // carrier; only a phase

    AngularRate kappa() const { return kappa1 + kappa2 + kappa_loss; }

    static constexpr AngularRate default_switch_off_rate() { return AngularRate::two_pi_mhz(50.0); }
};

struct RingdownTrace {
    std::vector<double> times;        // s, strictly increasing
    std::vector<double> intensities;  // |s_out|^2
};

RingdownParams validate(const RingdownParams& params);
void validate(const RingdownTrace& trace);

RingdownParams ringdown_params(const SystemParams& system, AngularRate kappa_s = RingdownParams::default_switch_off_rate(),
                               double s0 = 1.0);

// |s_out(t)|^2, both branches of the closed-form solution.
double reflected_intensity_analytic(const RingdownParams& params, double t);
// Intracavity field a(t) including the carrier phase exp(i omega0 t).
std::complex<double> cavity_field_analytic(const RingdownParams& params, double t);

RingdownTrace analytic_trace(const RingdownParams& params, std::span<const double> t_grid);

struct IntegratorOptions {
    double relative_tolerance = 1e-9;
    double absolute_tolerance = 1e-15;  // in units of the steady-state field
};

class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double t) : std::runtime_error(what), time(t) {}
    double time;
};

// Adaptive Dormand-Prince integration of the coupled-mode equations, sampled
// on t_grid (sorted). Points before t = 0 take the steady-state value.
RingdownTrace integrate_ringdown(const RingdownParams& params, std::span<const double> t_grid,
                                 const IntegratorOptions& options = {});

// Pointwise |I_a - I_b| / max(I_a, floor * s0^2), maximised over the trace.
double max_relative_deviation(const RingdownTrace& reference, const RingdownTrace& other, double s0,
                              double floor = 1e-6);

// Photon lifetime (2 kappa)^-1 and its inverse.
double photon_lifetime(AngularRate kappa);
AngularRate kappa_from_lifetime(double lifetime);
// kappa2 = kappa(lifetime) - kappa1 - kappa_loss
AngularRate kappa2_from_lifetime(double lifetime, AngularRate kappa1, AngularRate kappa_loss);
// Intracavity loss from a lifetime measured at critical coupling:
// kappa = 2 (kappa1 + kappa_loss).
AngularRate kappa_loss_from_critical_lifetime(double lifetime, AngularRate kappa1);

// Window [5 / (kappa_s - kappa), 10 / kappa] in which the switch-off
// transient has died out and the trace is a single exponential.
std::pair<double, double> tail_window(const RingdownParams& params);

// Piecewise-linear kappa2(temperature) through measured operating points.
// This is an interpolation model of the output-coupler band edge, not data.
class BandEdgeModel {
public:
    BandEdgeModel(std::vector<double> temperatures, std::vector<AngularRate> kappa2);
    AngularRate kappa2(double temperature) const;

private:
    std::vector<std::pair<double, AngularRate>> points_;
};

} // namespace fcqed

// fit.hpp - damped Gauss-Newton least squares and the fitting recipes built
// on it: empty-cavity Lorentzian, vacuum-Rabi spectrum with g as the only free
// parameter, exponential recovery, and ring-down tail rate.

#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fcqed/ringdown.hpp"
#include "fcqed/units.hpp"

namespace fcqed {

struct Spectrum {
    std::vector<AngularRate> deltas;
    std::vector<double> values;  // normalized transmission
    std::vector<double> sigmas;  // standard error per point; empty when unknown

    bool has_sigmas() const { return !sigmas.empty(); }
    std::vector<double> deltas_two_pi_mhz() const;
};

Spectrum validate(const Spectrum& spectrum);

struct Bounds {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
};

// Parametric model y = f(x; p). The gradient is optional; when absent the
// engine differentiates by central differences.
struct Model {
    std::vector<std::string> names;
    std::vector<std::string> units;
    std::function<double(double x, std::span<const double> p)> value;
    std::function<void(double x, std::span<const double> p, std::span<double> dp)> gradient;
    // Parameters whose relative uncertainty is meaningful (false for
    // location-like parameters that may legitimately sit at zero).
    std::vector<bool> scale_checked;
    // Typical magnitude per parameter, used for finite-difference steps at p = 0.
    std::vector<double> typical;
};

struct FitOptions {
    int max_iterations = 200;
    double initial_damping = 1e-3;
    double relative_tolerance = 1e-10;  // on the cost, between accepted steps
    double gradient_tolerance = 1e-10;  // on the scaled projected gradient
    double fd_step = 1e-6;              // relative central-difference step
    bool analytic_jacobian = true;      // use Model::gradient when available
};

struct FitResult {
    std::vector<std::string> names;
    std::vector<std::string> units;
    std::vector<double> estimates;
    std::vector<double> uncertainties;  // 1 sigma; +inf when not identifiable
    double residual_norm = 0.0;         // sqrt of the (weighted) sum of squared residuals
    bool converged = false;
    bool degenerate = false;            // singular, pinned at a bound, or sigma > |estimate|
    int iterations = 0;
    std::string message;

    double value(std::string_view name) const;
    double uncertainty(std::string_view name) const;
};

// Weighted by 1/sigma^2 when sigma is non-empty; otherwise uniform weights and
// the covariance is scaled by the residual variance. Bounds are enforced by
// projection after every step.
FitResult fit_least_squares(const Model& model, std::span<const double> x, std::span<const double> y,
                            std::span<const double> sigma, std::vector<double> initial, std::vector<Bounds> bounds,
                            const FitOptions& options = {});

// Central-difference Jacobian row, used by the engine and by tests to audit
// analytic gradients.
std::vector<double> numeric_gradient(const Model& model, double x, std::span<const double> p, double rel_step = 1e-6);

// ---- built-in models ------------------------------------------------------

// amplitude kappa^2 / ((x - center)^2 + kappa^2); x, kappa, center in 2pi MHz.
Model lorentzian_model(bool with_center);
// normalized_transmission with every rate but g held fixed; x, g in 2pi MHz.
Model rabi_model(const SystemParams& fixed);
// baseline - amplitude exp(-x / lifetime)
Model exponential_recovery_model();
// log_amplitude - rate x (log of a single exponential)
Model log_linear_model();

// ---- recipes ----------------------------------------------------------------

struct EmptyCavityOptions {
    bool fit_center = false;
    bool use_sigmas = false;
};

// Names: amplitude, kappa [rad/s], center [rad/s] (optional), photon_lifetime [s].
FitResult fit_empty_cavity(const Spectrum& spectrum, const EmptyCavityOptions& options = {});

struct RabiOptions {
    bool use_sigmas = false;
    AngularRate g_max = AngularRate::two_pi_mhz(50.0);
    std::optional<AngularRate> initial;  // default: coarse scan of the cost over [0, g_max]
};

// Single free parameter g [rad/s]; kappa1, kappa2, kappa_loss, gamma and
// cavity_detuning taken from `fixed`.
FitResult fit_rabi_g(const Spectrum& spectrum, const SystemParams& fixed, const RabiOptions& options = {});

// Names: baseline, amplitude, lifetime [s].
FitResult fit_exponential_recovery(std::span<const double> times, std::span<const double> values,
                                   std::span<const double> sigmas = {});

// Log-linear fit of the trace for t >= tail_start (and t <= tail_end).
// Names: amplitude, rate [1/s], photon_lifetime [s] (= 1/rate), kappa [rad/s] (= rate/2).
FitResult fit_ringdown_tail(const RingdownTrace& trace, double tail_start,
                            double tail_end = std::numeric_limits<double>::infinity());

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace fcqed

#include "fcqed/fiber_mode.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

namespace fcqed {

namespace {

double J(int n, double x) { return std::cyl_bessel_j(static_cast<double>(n), x); }
double K(int n, double x) { return std::cyl_bessel_k(static_cast<double>(n), x); }

constexpr double first_zero_j1 = 3.831705970207512;

double wavenumber(const FiberSpec& f) { return constants::two_pi / f.wavelength; }

double w_of_u(double v, double u) { return std::sqrt(std::max(v * v - u * u, 0.0)); }

double lp01_characteristic(double v, double u)
{
    const double w = w_of_u(v, u);
    return u * J(1, u) / J(0, u) - w * K(1, w) / K(0, w);
}

// Bracket the first sign change of f on (lo, hi) by scanning, then refine.
double first_root(const std::function<double(double)>& f, double lo, double hi, const char* what)
{
    constexpr int samples = 4000;
    double prev_x = lo;
    double prev_f = f(lo);
    for (int i = 1; i <= samples; ++i) {
        const double x = lo + (hi - lo) * i / samples;
        const double fx = f(x);
        if (std::isfinite(prev_f) && std::isfinite(fx) && (prev_f > 0) != (fx > 0)) {
            std::uintmax_t iters = 200;
            auto tol = boost::math::tools::eps_tolerance<double>(std::numeric_limits<double>::digits - 2);
            auto [a, b] = boost::math::tools::toms748_solve(f, prev_x, x, prev_f, fx, tol, iters);
            const double ra = std::abs(f(a));
            const double rb = std::abs(f(b));
            return ra <= rb ? a : b;
        }
        prev_x = x;
        prev_f = fx;
    }
    throw ModeSolverError(fmt::format("no {} root in the guided-mode bracket", what));
}

void finish(ModeSolution& mode, const FiberSpec& f, const ModeOptions& options)
{
    if (f.v_number() >= single_mode_cutoff)
        mode.warnings.push_back(fmt::format(
            "V = {:.4f} >= {:.3f}: fiber is not single mode at this wavelength; only the fundamental mode is reported",
            f.v_number(), single_mode_cutoff));
    mode.effective_area = integrate_effective_area(mode, options);
    // K_n(x) ~ exp(-x) / sqrt(x): the tail integral of |phi|^2 r dr beyond R
    // is approximately |phi(R)|^2 R a / (2 w).
    const double outer = options.outer_radius_factor * f.core_radius;
    mode.truncation_error = constants::two_pi * mode.intensity(outer) * outer * f.core_radius / (2.0 * mode.w);
}

} // namespace

double FiberSpec::numerical_aperture() const { return std::sqrt(n_core * n_core - n_clad * n_clad); }

double FiberSpec::v_number() const { return constants::two_pi / wavelength * core_radius * numerical_aperture(); }

double fused_silica_index(double wavelength)
{
    const double l2 = std::pow(wavelength * 1e6, 2);
    const double n2 = 1.0 + 0.6961663 * l2 / (l2 - 0.0684043 * 0.0684043)
                      + 0.4079426 * l2 / (l2 - 0.1162414 * 0.1162414)
                      + 0.8974794 * l2 / (l2 - 9.896161 * 9.896161);
    return std::sqrt(n2);
}

FiberSpec fiber_from_na(double core_radius, double numerical_aperture, double wavelength)
{
    FiberSpec f;
    f.core_radius = core_radius;
    f.wavelength = wavelength;
    f.n_clad = fused_silica_index(wavelength);
    f.n_core = std::sqrt(f.n_clad * f.n_clad + numerical_aperture * numerical_aperture);
    return f;
}

FiberSpec default_fiber(double wavelength) { return fiber_from_na(2.8e-6, 0.12, wavelength); }

FiberSpec validate(const FiberSpec& f)
{
    if (!(std::isfinite(f.core_radius) && f.core_radius > 0))
        throw ValidationError("core_radius must be positive");
    if (!(std::isfinite(f.wavelength) && f.wavelength > 0))
        throw ValidationError("wavelength must be positive");
    if (!(f.n_clad > 1.0))
        throw ValidationError("n_clad must exceed 1");
    if (!(f.n_core > f.n_clad))
        throw ValidationError("n_core must exceed n_clad");
    return f;
}

double he11_characteristic(const FiberSpec& fiber, double u)
{
    const double v = fiber.v_number();
    const double w = w_of_u(v, u);
    const double r = (fiber.n_clad * fiber.n_clad) / (fiber.n_core * fiber.n_core);
    const double eta_core = (J(0, u) - J(1, u) / u) / (u * J(1, u));
    const double eta_clad = (-K(0, w) - K(1, w) / w) / (w * K(1, w));
    const double iu = 1.0 / (u * u);
    const double iw = 1.0 / (w * w);
    const double half_diff = 0.5 * (1.0 - r) * eta_clad;
    // HE branch (the EH modes take the opposite sign of the square root).
    const double rhs = -0.5 * (1.0 + r) * eta_clad - std::sqrt(half_diff * half_diff + (iu + iw) * (iu + r * iw));
    return (eta_core - rhs) * u * u;
}

double ModeSolution::raw_intensity(double r) const
{
    const auto e = field_components(r);
    return e[0] * e[0] + e[1] * e[1] + e[2] * e[2];
}

double ModeSolution::intensity(double r) const { return raw_intensity(r) / peak_; }

std::array<double, 3> ModeSolution::field_components(double r) const
{
    const double a = core_radius;
    const double h = u / a;
    const double q = w / a;
    if (model == ModeModel::ScalarLP01) {
        if (r <= a)
            return {J(0, h * r), 0.0, 0.0};
        return {J(0, u) / K(0, w) * K(0, q * r), 0.0, 0.0};
    }
    // Circularly polarized HE11 (amplitude A = 1):
    //   core:     E_r ~ beta/(2h) [(1-s) J0 - (1+s) J2],  E_phi ~ beta/(2h) [(1-s) J0 + (1+s) J2],  E_z = J1
    //   cladding: E_r ~ c beta/(2q) [(1-s) K0 + (1+s) K2], E_phi ~ c beta/(2q) [(1-s) K0 - (1+s) K2], E_z = c K1
    // with c = J1(u) / K1(w).
    const double s = s_;
    if (r <= a) {
        const double x = h * r;
        const double pre = beta_ / (2.0 * h);
        return {std::abs(pre * ((1 - s) * J(0, x) - (1 + s) * J(2, x))),
                std::abs(pre * ((1 - s) * J(0, x) + (1 + s) * J(2, x))), std::abs(J(1, x))};
    }
    const double x = q * r;
    const double c = J(1, u) / K(1, w);
    const double pre = c * beta_ / (2.0 * q);
    return {std::abs(pre * ((1 - s) * K(0, x) + (1 + s) * K(2, x))),
            std::abs(pre * ((1 - s) * K(0, x) - (1 + s) * K(2, x))), std::abs(c * K(1, x))};
}

double integrate_effective_area(const ModeSolution& mode, const ModeOptions& options)
{
    using boost::math::quadrature::gauss;
    const double a = mode.core_radius;
    const double outer = options.outer_radius_factor * a;
    const int n = std::max(1, options.radial_panels);
    auto integrand = [&](double r) { return mode.intensity(r) * r; };
    auto region = [&](double lo, double hi) {
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x0 = lo + (hi - lo) * i / n;
            const double x1 = lo + (hi - lo) * (i + 1) / n;
            sum += gauss<double, 20>::integrate(integrand, x0, x1);
        }
        return sum;
    };
    return constants::two_pi * (region(0.0, a) + region(a, outer));
}

ModeSolution solve_fundamental_mode(const FiberSpec& fiber, const ModeOptions& options)
{
    const auto f = validate(fiber);
    const double v = f.v_number();
    const double hi = std::min(v, first_zero_j1) * (1.0 - 1e-9);
    auto fn = [&](double u) { return he11_characteristic(f, u); };

    ModeSolution m;
    m.model = ModeModel::VectorHE11;
    m.v = v;
    m.core_radius = f.core_radius;
    m.u = first_root(fn, hi * 1e-6, hi, "HE11");
    m.w = w_of_u(v, m.u);
    const double k0 = wavenumber(f);
    m.n_eff = std::sqrt(f.n_core * f.n_core - std::pow(m.u / (f.core_radius * k0), 2));
    m.residual = std::abs(fn(m.u));
    m.beta_ = k0 * m.n_eff;
    const double eta_core = (J(0, m.u) - J(1, m.u) / m.u) / (m.u * J(1, m.u));
    const double eta_clad = (-K(0, m.w) - K(1, m.w) / m.w) / (m.w * K(1, m.w));
    m.s_ = (1.0 / (m.u * m.u) + 1.0 / (m.w * m.w)) / (eta_core + eta_clad);

    // The circular HE11 intensity peaks on axis; scan anyway in case of strong guidance.
    double peak = m.raw_intensity(0.0);
    for (int i = 1; i <= 400; ++i)
        peak = std::max(peak, m.raw_intensity(2.0 * f.core_radius * i / 400.0));
    m.peak_ = peak;
    if (!(m.n_eff > f.n_clad && m.n_eff < f.n_core))
        throw ModeSolverError("HE11 effective index outside (n_clad, n_core)");
    finish(m, f, options);
    return m;
}

ModeSolution solve_lp01_mode(const FiberSpec& fiber, const ModeOptions& options)
{
    const auto f = validate(fiber);
    const double v = f.v_number();
    const double hi = std::min(v, single_mode_cutoff) * (1.0 - 1e-9);
    auto fn = [&](double u) { return lp01_characteristic(v, u); };

    ModeSolution m;
    m.model = ModeModel::ScalarLP01;
    m.v = v;
    m.core_radius = f.core_radius;
    m.u = first_root(fn, hi * 1e-6, hi, "LP01");
    m.w = w_of_u(v, m.u);
    const double k0 = wavenumber(f);
    m.n_eff = std::sqrt(f.n_core * f.n_core - std::pow(m.u / (f.core_radius * k0), 2));
    m.residual = std::abs(fn(m.u));
    m.beta_ = k0 * m.n_eff;
    m.peak_ = 1.0;
    finish(m, f, options);
    return m;
}

double marcuse_mode_radius(const FiberSpec& fiber)
{
    const double v = validate(fiber).v_number();
    return fiber.core_radius * (0.65 + 1.619 / std::pow(v, 1.5) + 2.879 / std::pow(v, 6));
}

double gaussian_effective_area(const FiberSpec& fiber)
{
    const double w = marcuse_mode_radius(fiber);
    return 0.5 * std::numbers::pi * w * w;
}

double mode_volume(const ModeSolution& mode, const CavityGeometry& geom)
{
    return validate(geom).length * mode.effective_area;
}

AtomSpec validate(const AtomSpec& atom)
{
    if (!(atom.dipole_moment > 0) || !std::isfinite(atom.dipole_moment))
        throw ValidationError("dipole moment must be positive");
    if (!(atom.transition_frequency.rad_per_s() > 0))
        throw ValidationError("transition frequency must be positive");
    return atom;
}

AtomSpec cesium_d2_cycling()
{
    using namespace constants;
    const double omega = two_pi * c / cs_d2_wavelength;
    const double gamma = two_pi * cs_d2_natural_linewidth;
    AtomSpec a;
    a.transition_frequency = AngularRate::rad_per_s(omega);
    a.dipole_moment = std::sqrt(3.0 * std::numbers::pi * epsilon0 * hbar * c * c * c * gamma / (omega * omega * omega));
    return a;
}

AngularRate coupling_rate(const AtomSpec& atom, double mode_volume, double phi)
{
    const auto a = validate(atom);
    if (!(mode_volume > 0) || !std::isfinite(mode_volume))
        throw ValidationError("mode volume must be positive");
    if (!(phi >= 0.0 && phi <= 1.0))
        throw ValidationError("mode amplitude phi must lie in [0, 1]");
    const double mu = a.dipole_moment;
    const double omega = a.transition_frequency.rad_per_s();
    return AngularRate::rad_per_s(std::sqrt(mu * mu * omega / (2.0 * constants::hbar * constants::epsilon0 * mode_volume))
                                  * phi);
}

} // namespace fcqed

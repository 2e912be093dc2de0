#include "fcqed/ringdown.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <boost/numeric/odeint.hpp>
#include <fmt/format.h>

namespace fcqed {

namespace {

void require(bool ok, const char* what)
{
    if (!ok)
        throw ValidationError(what);
}

} // namespace

RingdownParams validate(const RingdownParams& p)
{
    require(std::isfinite(p.kappa1.rad_per_s()) && std::isfinite(p.kappa2.rad_per_s())
                && std::isfinite(p.kappa_loss.rad_per_s()) && std::isfinite(p.kappa_s.rad_per_s()),
            "rates must be finite");
    require(p.kappa1.rad_per_s() >= 0 && p.kappa2.rad_per_s() >= 0 && p.kappa_loss.rad_per_s() >= 0,
            "decay rates non-negative");
    require(p.kappa().rad_per_s() > 0, "kappa must be positive");
    require(p.kappa_s > p.kappa(), "kappa_s must exceed kappa");
    require(std::isfinite(p.s0) && p.s0 > 0, "s0 must be positive");
    return p;
}

void validate(const RingdownTrace& trace)
{
    require(trace.times.size() == trace.intensities.size(), "times and intensities must have equal length");
    for (std::size_t i = 1; i < trace.times.size(); ++i)
        require(trace.times[i] > trace.times[i - 1], "times must be strictly increasing");
    for (double v : trace.intensities)
        require(std::isfinite(v) && v >= 0, "intensities must be finite and non-negative");
}

RingdownParams ringdown_params(const SystemParams& system, AngularRate kappa_s, double s0)
{
    RingdownParams p;
    p.kappa1 = system.kappa1;
    p.kappa2 = system.kappa2;
    p.kappa_loss = system.kappa_loss;
    p.kappa_s = kappa_s;
    p.s0 = s0;
    if (system.omega_A)
        p.omega0 = *system.omega_A;
    return validate(p);
}

double reflected_intensity_analytic(const RingdownParams& params, double t)
{
    const auto p = validate(params);
    const double k = p.kappa().rad_per_s();
    const double k2 = p.kappa2.rad_per_s();
    const double ks = p.kappa_s.rad_per_s();
    const double s0sq = p.s0 * p.s0;
    if (t < 0) {
        const double r = 2.0 * k2 / k - 1.0;
        return r * r * s0sq;
    }
    const double c_slow = 2.0 * k2 / k + 2.0 * k2 / (ks - k);
    const double c_fast = 1.0 + 2.0 * k2 / (ks - k);
    const double amp = c_slow * std::exp(-k * t) - c_fast * std::exp(-ks * t);
    return amp * amp * s0sq;
}

std::complex<double> cavity_field_analytic(const RingdownParams& params, double t)
{
    const auto p = validate(params);
    const double k = p.kappa().rad_per_s();
    const double ks = p.kappa_s.rad_per_s();
    const double steady = std::sqrt(2.0 * p.kappa2.rad_per_s()) / k * p.s0;
    const auto carrier = std::polar(1.0, p.omega0.rad_per_s() * t);
    if (t < 0)
        return steady * carrier;
    const double r = k / (ks - k);
    return steady * ((1.0 + r) * std::exp(-k * t) - r * std::exp(-ks * t)) * carrier;
}

RingdownTrace analytic_trace(const RingdownParams& params, std::span<const double> t_grid)
{
    const auto p = validate(params);
    RingdownTrace tr;
    tr.times.assign(t_grid.begin(), t_grid.end());
    tr.intensities.reserve(t_grid.size());
    for (double t : t_grid)
        tr.intensities.push_back(reflected_intensity_analytic(p, t));
    return tr;
}

RingdownTrace integrate_ringdown(const RingdownParams& params, std::span<const double> t_grid,
                                 const IntegratorOptions& options)
{
    namespace ode = boost::numeric::odeint;
    using state = std::array<double, 1>;

    const auto p = validate(params);
    require(std::is_sorted(t_grid.begin(), t_grid.end()), "t_grid must be sorted");

    // Dimensionless time tau = kappa t and field b = a kappa / (sqrt(2 kappa) s0),
    // so the steady state is b = sqrt(kappa2 / kappa) and
    //   db/dtau = -b + sqrt(kappa2 / kappa) exp(-(kappa_s / kappa) tau)
    //   s_out / s0 = -exp(-kappa_s t) + 2 sqrt(kappa2 / kappa) b
    const double k = p.kappa().rad_per_s();
    const double drive = std::sqrt(p.kappa2.rad_per_s() / k);
    const double switch_ratio = p.kappa_s.rad_per_s() / k;
    const double s0sq = p.s0 * p.s0;

    auto reflected = [&](double tau, double b) {
        const double s = -std::exp(-switch_ratio * tau) + 2.0 * drive * b;
        return s * s * s0sq;
    };

    RingdownTrace tr;
    tr.times.assign(t_grid.begin(), t_grid.end());
    tr.intensities.resize(t_grid.size());

    std::vector<double> taus;
    std::vector<std::size_t> index;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (t_grid[i] < 0) {
            const double r = 2.0 * drive * drive - 1.0;
            tr.intensities[i] = r * r * s0sq;
        } else {
            taus.push_back(k * t_grid[i]);
            index.push_back(i);
        }
    }
    if (taus.empty())
        return tr;

    auto rhs = [&](const state& b, state& dbdt, double tau) {
        dbdt[0] = -b[0] + drive * std::exp(-switch_ratio * tau);
    };

    // Observation times must start at the initial time.
    std::vector<double> obs;
    obs.reserve(taus.size() + 1);
    const bool prepend = taus.front() > 0.0;
    if (prepend)
        obs.push_back(0.0);
    obs.insert(obs.end(), taus.begin(), taus.end());

    std::size_t seen = 0;
    double last_tau = 0.0;
    auto observer = [&](const state& b, double tau) {
        last_tau = tau;
        if (prepend && seen == 0) {
            ++seen;
            return;
        }
        const std::size_t j = seen - (prepend ? 1 : 0);
        tr.intensities[index[j]] = reflected(tau, b[0]);
        ++seen;
    };

    state b{drive};
    auto stepper = ode::make_controlled(options.absolute_tolerance, options.relative_tolerance,
                                        ode::runge_kutta_dopri5<state>());
    const double dt0 = std::min(1e-3, 0.1 / switch_ratio);
    try {
        ode::integrate_times(stepper, rhs, b, obs.begin(), obs.end(), dt0, observer,
                             ode::max_step_checker(1000000));
    } catch (const std::exception& e) {
        const double t = last_tau / k;
        throw IntegrationError(fmt::format("ring-down integration failed near t = {:.6g} s: {}", t, e.what()), t);
    }
    for (double v : tr.intensities)
        if (!std::isfinite(v))
            throw IntegrationError("ring-down integration produced a non-finite intensity", last_tau / k);
    return tr;
}

double max_relative_deviation(const RingdownTrace& reference, const RingdownTrace& other, double s0, double floor)
{
    if (reference.intensities.size() != other.intensities.size())
        throw ValidationError("traces must have equal length");
    double worst = 0.0;
    const double scale = floor * s0 * s0;
    for (std::size_t i = 0; i < reference.intensities.size(); ++i) {
        const double ref = reference.intensities[i];
        worst = std::max(worst, std::abs(other.intensities[i] - ref) / std::max(ref, scale));
    }
    return worst;
}

double photon_lifetime(AngularRate kappa)
{
    if (!(kappa.rad_per_s() > 0))
        throw ValidationError("kappa must be positive");
    return 1.0 / (2.0 * kappa.rad_per_s());
}

AngularRate kappa_from_lifetime(double lifetime)
{
    if (!(lifetime > 0) || !std::isfinite(lifetime))
        throw ValidationError("lifetime must be positive");
    return AngularRate::rad_per_s(1.0 / (2.0 * lifetime));
}

AngularRate kappa2_from_lifetime(double lifetime, AngularRate kappa1, AngularRate kappa_loss)
{
    const auto k2 = kappa_from_lifetime(lifetime) - kappa1 - kappa_loss;
    if (k2.rad_per_s() < 0)
        throw ValidationError("lifetime too long for the given kappa1 and kappa_loss");
    return k2;
}

AngularRate kappa_loss_from_critical_lifetime(double lifetime, AngularRate kappa1)
{
    const auto loss = kappa_from_lifetime(lifetime) / 2.0 - kappa1;
    if (loss.rad_per_s() < 0)
        throw ValidationError("lifetime too long for the given kappa1");
    return loss;
}

std::pair<double, double> tail_window(const RingdownParams& params)
{
    const auto p = validate(params);
    const double k = p.kappa().rad_per_s();
    return {5.0 / (p.kappa_s.rad_per_s() - k), 10.0 / k};
}

BandEdgeModel::BandEdgeModel(std::vector<double> temperatures, std::vector<AngularRate> kappa2)
{
    require(temperatures.size() == kappa2.size() && temperatures.size() >= 2,
            "band-edge model needs at least two (temperature, kappa2) points");
    for (std::size_t i = 0; i < temperatures.size(); ++i)
        points_.emplace_back(temperatures[i], kappa2[i]);
    std::sort(points_.begin(), points_.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < points_.size(); ++i)
        require(points_[i].first > points_[i - 1].first, "temperatures must be distinct");
}

AngularRate BandEdgeModel::kappa2(double temperature) const
{
    auto hi = std::upper_bound(points_.begin(), points_.end(), temperature,
                               [](double t, const auto& p) { return t < p.first; });
    if (hi == points_.begin())
        ++hi;
    if (hi == points_.end())
        --hi;
    const auto lo = hi - 1;
    const double f = (temperature - lo->first) / (hi->first - lo->first);
    auto k2 = lo->second + (hi->second - lo->second) * f;
    return std::max(k2, AngularRate{});
}

} // namespace fcqed

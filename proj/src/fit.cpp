#include "fcqed/fit.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "fcqed/cavity.hpp"

namespace fcqed {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double project(double v, const Bounds& b) { return std::clamp(v, b.lo, b.hi); }

struct Problem {
    const Model& model;
    std::span<const double> x;
    std::span<const double> y;
    std::span<const double> sigma;
    const FitOptions& options;

    double weight(std::size_t i) const { return sigma.empty() ? 1.0 : 1.0 / sigma[i]; }

    // Weighted residuals (y - f) / sigma.
    Eigen::VectorXd residuals(const std::vector<double>& p) const
    {
        Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
        for (std::size_t i = 0; i < x.size(); ++i)
            r[static_cast<Eigen::Index>(i)] = (y[i] - model.value(x[i], p)) * weight(i);
        return r;
    }

    // Weighted model Jacobian df/dp / sigma.
    Eigen::MatrixXd jacobian(const std::vector<double>& p, const std::vector<Bounds>& bounds) const
    {
        const auto n = static_cast<Eigen::Index>(x.size());
        const auto m = static_cast<Eigen::Index>(p.size());
        Eigen::MatrixXd J(n, m);
        std::vector<double> row(p.size());
        const bool analytic = options.analytic_jacobian && static_cast<bool>(model.gradient);
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (analytic) {
                model.gradient(x[i], p, row);
            } else {
                std::vector<double> q = p;
                for (std::size_t j = 0; j < p.size(); ++j) {
                    const double typical = j < model.typical.size() ? model.typical[j] : 1.0;
                    const double h = options.fd_step * std::max(std::abs(p[j]), typical);
                    // One-sided at an active bound.
                    const double up = std::min(p[j] + h, bounds[j].hi);
                    const double dn = std::max(p[j] - h, bounds[j].lo);
                    q[j] = up;
                    const double fu = model.value(x[i], q);
                    q[j] = dn;
                    const double fd = model.value(x[i], q);
                    q[j] = p[j];
                    row[j] = (up > dn) ? (fu - fd) / (up - dn) : 0.0;
                }
            }
            for (std::size_t j = 0; j < p.size(); ++j)
                J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j] * weight(i);
        }
        return J;
    }
};

// Max over free directions of |J_j . r| / (|J_j| |r|).
double scaled_gradient(const Eigen::MatrixXd& J, const Eigen::VectorXd& r, const std::vector<double>& p,
                       const std::vector<Bounds>& bounds)
{
    const double rn = r.norm();
    if (rn == 0.0)
        return 0.0;
    const Eigen::VectorXd b = J.transpose() * r;  // descent direction of the cost
    double worst = 0.0;
    for (Eigen::Index j = 0; j < b.size(); ++j) {
        const auto k = static_cast<std::size_t>(j);
        if (p[k] <= bounds[k].lo && b[j] < 0)
            continue;
        if (p[k] >= bounds[k].hi && b[j] > 0)
            continue;
        const double cn = J.col(j).norm();
        if (cn == 0.0)
            continue;
        worst = std::max(worst, std::abs(b[j]) / (cn * rn));
    }
    return worst;
}

} // namespace

std::vector<double> Spectrum::deltas_two_pi_mhz() const
{
    std::vector<double> out;
    out.reserve(deltas.size());
    for (auto d : deltas)
        out.push_back(d.two_pi_mhz());
    return out;
}

Spectrum validate(const Spectrum& s)
{
    if (s.deltas.size() != s.values.size())
        throw ValidationError("spectrum deltas and values must have equal length");
    if (s.has_sigmas() && s.sigmas.size() != s.values.size())
        throw ValidationError("spectrum sigmas must match values in length");
    for (double v : s.values)
        if (!std::isfinite(v))
            throw ValidationError("spectrum values must be finite");
    for (double v : s.sigmas)
        if (!(v > 0) || !std::isfinite(v))
            throw ValidationError("spectrum sigmas must be positive");
    return s;
}

double FitResult::value(std::string_view name) const
{
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name)
            return estimates[i];
    throw std::out_of_range(fmt::format("no fit parameter '{}'", name));
}

double FitResult::uncertainty(std::string_view name) const
{
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name)
            return uncertainties[i];
    throw std::out_of_range(fmt::format("no fit parameter '{}'", name));
}

std::vector<double> numeric_gradient(const Model& model, double x, std::span<const double> p, double rel_step)
{
    std::vector<double> q(p.begin(), p.end());
    std::vector<double> out(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double typical = j < model.typical.size() ? model.typical[j] : 1.0;
        const double h = rel_step * std::max(std::abs(p[j]), typical);
        q[j] = p[j] + h;
        const double fu = model.value(x, q);
        q[j] = p[j] - h;
        const double fd = model.value(x, q);
        q[j] = p[j];
        out[j] = (fu - fd) / (2.0 * h);
    }
    return out;
}

FitResult fit_least_squares(const Model& model, std::span<const double> x, std::span<const double> y,
                            std::span<const double> sigma, std::vector<double> initial, std::vector<Bounds> bounds,
                            const FitOptions& options)
{
    const std::size_t np = initial.size();
    if (model.names.size() != np)
        throw FitError("model parameter names do not match the initial vector");
    if (x.size() != y.size() || (!sigma.empty() && sigma.size() != y.size()))
        throw FitError("x, y and sigma must have equal length");
    if (x.size() < np)
        throw FitError(fmt::format("need at least {} data points, got {}", np, x.size()));
    if (bounds.empty())
        bounds.assign(np, Bounds{});
    if (bounds.size() != np)
        throw FitError("bounds do not match the parameter count");
    for (std::size_t j = 0; j < np; ++j) {
        if (!(bounds[j].lo <= bounds[j].hi))
            throw FitError(fmt::format("empty bounds for parameter '{}'", model.names[j]));
        if (initial[j] < bounds[j].lo || initial[j] > bounds[j].hi)
            throw FitError(fmt::format("initial value of '{}' outside its bounds", model.names[j]));
    }

    const Problem prob{model, x, y, sigma, options};
    std::vector<double> p = initial;
    Eigen::VectorXd r = prob.residuals(p);
    double cost = 0.5 * r.squaredNorm();
    double lambda = options.initial_damping;

    FitResult res;
    res.names = model.names;
    res.units = model.units;
    if (res.units.size() != np)
        res.units.assign(np, "");

    bool singular = false;
    int iter = 0;
    for (; iter <= options.max_iterations; ++iter) {
        const Eigen::MatrixXd J = prob.jacobian(p, bounds);
        if (!r.allFinite() || !J.allFinite()) {
            res.message = "non-finite residual or Jacobian";
            break;
        }
        if (scaled_gradient(J, r, p, bounds) < options.gradient_tolerance) {
            res.converged = true;
            res.message = "gradient criterion met";
            break;
        }
        if (iter == options.max_iterations) {
            res.message = "maximum iterations reached";
            break;
        }
        const Eigen::MatrixXd A = J.transpose() * J;
        const Eigen::VectorXd b = J.transpose() * r;
        const double max_diag = A.diagonal().maxCoeff();
        if (!(max_diag > 0)) {
            singular = true;
            res.message = "singular Jacobian";
            break;
        }

        bool accepted = false;
        bool stalled = false;
        while (!accepted) {
            Eigen::MatrixXd damped = A;
            for (Eigen::Index j = 0; j < A.rows(); ++j)
                damped(j, j) += lambda * std::max(A(j, j), 1e-12 * max_diag);
            const Eigen::VectorXd step = damped.ldlt().solve(b);
            std::vector<double> trial(np);
            for (std::size_t j = 0; j < np; ++j)
                trial[j] = project(p[j] + step[static_cast<Eigen::Index>(j)], bounds[j]);
            const Eigen::VectorXd rt = prob.residuals(trial);
            const double ct = 0.5 * rt.squaredNorm();
            if (std::isfinite(ct) && ct < cost) {
                const double rel = (cost - ct) / std::max(cost, std::numeric_limits<double>::min());
                p = std::move(trial);
                r = rt;
                cost = ct;
                lambda = std::max(lambda / 10.0, 1e-15);
                accepted = true;
                if (rel < options.relative_tolerance) {
                    res.converged = true;
                    res.message = "relative cost change below tolerance";
                }
            } else {
                lambda *= 10.0;
                if (lambda > 1e16) {
                    stalled = true;
                    break;
                }
            }
        }
        if (res.converged) {
            ++iter;
            break;
        }
        if (stalled) {
            // No step reduces the cost: a minimum to working precision.
            res.converged = true;
            res.message = "no further decrease possible";
            break;
        }
    }

    res.iterations = iter;
    res.estimates = p;
    res.residual_norm = r.norm();

    // Covariance of the linearized problem.
    res.uncertainties.assign(np, inf);
    if (!singular) {
        const Eigen::MatrixXd J = prob.jacobian(p, bounds);
        const Eigen::MatrixXd A = J.transpose() * J;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
        if (lu.isInvertible()) {
            Eigen::MatrixXd cov = lu.inverse();
            if (sigma.empty()) {
                const auto dof = static_cast<double>(x.size()) - static_cast<double>(np);
                cov *= dof > 0 ? 2.0 * cost / dof : inf;
            }
            for (std::size_t j = 0; j < np; ++j) {
                const double v = cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
                res.uncertainties[j] = (std::isfinite(v) && v >= 0) ? std::sqrt(v) : inf;
            }
        } else {
            singular = true;
        }
    }

    res.degenerate = singular;
    for (std::size_t j = 0; j < np; ++j) {
        const bool checked = j >= model.scale_checked.size() || model.scale_checked[j];
        if (!std::isfinite(res.uncertainties[j]))
            res.degenerate = true;
        if (p[j] <= bounds[j].lo || p[j] >= bounds[j].hi)
            res.degenerate = true;
        if (checked && res.uncertainties[j] > std::abs(p[j]))
            res.degenerate = true;
    }
    if (singular && res.message.empty())
        res.message = "singular covariance";
    return res;
}

// ---- models -----------------------------------------------------------------

Model lorentzian_model(bool with_center)
{
    Model m;
    m.names = {"amplitude", "kappa"};
    m.units = {"1", "two_pi_mhz"};
    m.scale_checked = {true, true};
    m.typical = {1.0, 1.0};
    if (with_center) {
        m.names.push_back("center");
        m.units.push_back("two_pi_mhz");
        m.scale_checked.push_back(false);
        m.typical.push_back(1.0);
    }
    m.value = [with_center](double x, std::span<const double> p) {
        const double d = x - (with_center ? p[2] : 0.0);
        const double k2 = p[1] * p[1];
        return p[0] * k2 / (d * d + k2);
    };
    m.gradient = [with_center](double x, std::span<const double> p, std::span<double> dp) {
        const double d = x - (with_center ? p[2] : 0.0);
        const double k = p[1];
        const double den = d * d + k * k;
        dp[0] = k * k / den;
        dp[1] = p[0] * 2.0 * k * d * d / (den * den);
        if (with_center)
            dp[2] = p[0] * k * k * 2.0 * d / (den * den);
    };
    return m;
}

Model rabi_model(const SystemParams& fixed)
{
    auto base = validate(fixed);
    Model m;
    m.names = {"g"};
    m.units = {"two_pi_mhz"};
    m.scale_checked = {true};
    m.typical = {1.0};
    auto eval = [base](double x, double g, double* dTdg) {
        SystemParams p = base;
        p.g = AngularRate::two_pi_mhz(std::abs(g));
        const auto delta = AngularRate::two_pi_mhz(x);
        const double t = normalized_transmission(p, delta);
        if (dTdg) {
            // T ~ 1 / |D|^2 with dD/dg = 2 g, so dT/dg = -4 g T Re(D) / |D|^2 (in 2pi MHz units).
            const auto D = response_denominator(p, delta) / std::pow(constants::two_pi * 1e6, 2);
            *dTdg = -4.0 * g * t * D.real() / std::norm(D);
        }
        return t;
    };
    m.value = [eval](double x, std::span<const double> p) { return eval(x, p[0], nullptr); };
    m.gradient = [eval](double x, std::span<const double> p, std::span<double> dp) { eval(x, p[0], &dp[0]); };
    return m;
}

Model exponential_recovery_model()
{
    Model m;
    m.names = {"baseline", "amplitude", "lifetime"};
    m.units = {"1", "1", "s"};
    m.scale_checked = {false, true, true};
    m.typical = {1.0, 1.0, 1.0};
    m.value = [](double x, std::span<const double> p) { return p[0] - p[1] * std::exp(-x / p[2]); };
    m.gradient = [](double x, std::span<const double> p, std::span<double> dp) {
        const double e = std::exp(-x / p[2]);
        dp[0] = 1.0;
        dp[1] = -e;
        dp[2] = -p[1] * e * x / (p[2] * p[2]);
    };
    return m;
}

Model log_linear_model()
{
    Model m;
    m.names = {"log_amplitude", "rate"};
    m.units = {"1", "1/ns"};
    m.scale_checked = {false, true};
    m.typical = {1.0, 1.0};
    m.value = [](double x, std::span<const double> p) { return p[0] - p[1] * x; };
    m.gradient = [](double x, std::span<const double>, std::span<double> dp) {
        dp[0] = 1.0;
        dp[1] = -x;
    };
    return m;
}

// ---- recipes ----------------------------------------------------------------

FitResult fit_empty_cavity(const Spectrum& spectrum, const EmptyCavityOptions& options)
{
    const auto s = validate(spectrum);
    const auto x = s.deltas_two_pi_mhz();
    if (x.size() < 3)
        throw FitError("empty-cavity fit needs at least 3 points");

    const auto imax = static_cast<std::size_t>(std::distance(s.values.begin(), std::max_element(s.values.begin(), s.values.end())));
    const double peak = s.values[imax];
    const auto [xmin_it, xmax_it] = std::minmax_element(x.begin(), x.end());
    const double span = *xmax_it - *xmin_it;
    const double centre0 = options.fit_center ? x[imax] : 0.0;
    double lo = inf, hi = -inf;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (s.values[i] >= 0.5 * peak) {
            lo = std::min(lo, x[i]);
            hi = std::max(hi, x[i]);
        }
    double kappa0 = 0.5 * (hi - lo);
    if (!(kappa0 > 0))
        kappa0 = span / static_cast<double>(x.size());
    kappa0 = std::clamp(kappa0, 1e-6 * span, 100.0 * span);

    auto model = lorentzian_model(options.fit_center);
    std::vector<double> init = {std::max(peak, 1e-12), kappa0};
    std::vector<Bounds> bounds = {{0.0, inf}, {1e-6 * span, 100.0 * span}};
    if (options.fit_center) {
        init.push_back(centre0);
        bounds.push_back({*xmin_it, *xmax_it});
    }
    std::span<const double> sig;
    if (options.use_sigmas && s.has_sigmas())
        sig = s.sigmas;
    auto r = fit_least_squares(model, x, s.values, sig, init, bounds);

    // Report rates in rad/s and append the photon lifetime.
    const double to_rad = constants::two_pi * 1e6;
    for (std::size_t j = 1; j < r.estimates.size(); ++j) {
        r.estimates[j] *= to_rad;
        r.uncertainties[j] *= to_rad;
        r.units[j] = "rad_per_s";
    }
    const double kappa = r.estimates[1];
    r.names.push_back("photon_lifetime");
    r.units.push_back("s");
    r.estimates.push_back(1.0 / (2.0 * kappa));
    r.uncertainties.push_back(r.uncertainties[1] / (2.0 * kappa * kappa));
    return r;
}

FitResult fit_rabi_g(const Spectrum& spectrum, const SystemParams& fixed, const RabiOptions& options)
{
    const auto s = validate(spectrum);
    const auto x = s.deltas_two_pi_mhz();
    if (x.empty())
        throw FitError("Rabi fit needs at least one point");
    auto model = rabi_model(fixed);
    const double gmax = options.g_max.two_pi_mhz();
    std::span<const double> sig;
    if (options.use_sigmas && s.has_sigmas())
        sig = s.sigmas;

    double g0 = 0.0;
    if (options.initial) {
        g0 = std::clamp(options.initial->two_pi_mhz(), 0.0, gmax);
    } else {
        double best = inf;
        constexpr int n = 200;
        for (int k = 0; k <= n; ++k) {
            const double g = gmax * k / n;
            const std::array<double, 1> p{g};
            double c = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double w = sig.empty() ? 1.0 : 1.0 / sig[i];
                const double d = (s.values[i] - model.value(x[i], p)) * w;
                c += d * d;
            }
            if (c < best) {
                best = c;
                g0 = g;
            }
        }
    }
    auto r = fit_least_squares(model, x, s.values, sig, {g0}, {{0.0, gmax}});
    const double to_rad = constants::two_pi * 1e6;
    r.estimates[0] *= to_rad;
    r.uncertainties[0] *= to_rad;
    r.units[0] = "rad_per_s";
    return r;
}

FitResult fit_exponential_recovery(std::span<const double> times, std::span<const double> values,
                                   std::span<const double> sigmas)
{
    if (times.size() != values.size())
        throw FitError("times and values must have equal length");
    if (times.size() < 4)
        throw FitError("exponential fit needs at least 4 points");
    std::vector<std::size_t> order(times.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return times[a] < times[b]; });
    const double t0 = times[order.front()];
    const double t1 = times[order.back()];
    const double span = t1 - t0;
    if (!(span > 0))
        throw FitError("exponential fit needs distinct times");

    const double baseline0 = values[order.back()];
    const double amplitude0 = baseline0 - values[order.front()];
    double lifetime0 = span / 3.0;
    const double target = baseline0 - amplitude0 / std::numbers::e;
    for (std::size_t k = 1; k < order.size(); ++k) {
        const double a = values[order[k - 1]] - target;
        const double b = values[order[k]] - target;
        if ((a <= 0) != (b <= 0)) {
            lifetime0 = std::max(times[order[k]] - t0, span / 100.0);
            break;
        }
    }
    auto model = exponential_recovery_model();
    model.typical = {1.0, 1.0, span};
    const std::vector<Bounds> bounds = {{-inf, inf}, {-inf, inf}, {1e-6 * span, 1e3 * span}};
    return fit_least_squares(model, times, values, sigmas, {baseline0, amplitude0, lifetime0}, bounds);
}

FitResult fit_ringdown_tail(const RingdownTrace& trace, double tail_start, double tail_end)
{
    if (trace.times.size() != trace.intensities.size())
        throw FitError("trace times and intensities must have equal length");
    std::vector<double> t_ns, logi;
    for (std::size_t i = 0; i < trace.times.size(); ++i) {
        const double t = trace.times[i];
        if (t < tail_start || t > tail_end)
            continue;
        const double v = trace.intensities[i];
        if (!(v > 0))
            throw FitError(fmt::format("non-positive intensity {} at t = {} s in the tail window", v, t));
        t_ns.push_back(t * 1e9);
        logi.push_back(std::log(v));
    }
    if (t_ns.size() < 3)
        throw FitError("fewer than 3 points in the ring-down tail window");

    // Closed-form start, then the engine for the covariance.
    const double n = static_cast<double>(t_ns.size());
    const double mt = std::accumulate(t_ns.begin(), t_ns.end(), 0.0) / n;
    const double ml = std::accumulate(logi.begin(), logi.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < t_ns.size(); ++i) {
        sxy += (t_ns[i] - mt) * (logi[i] - ml);
        sxx += (t_ns[i] - mt) * (t_ns[i] - mt);
    }
    const double rate0 = -sxy / sxx;
    const double loga0 = ml + rate0 * mt;
    auto r = fit_least_squares(log_linear_model(), t_ns, logi, {}, {loga0, rate0}, {});

    const double loga = r.estimates[0];
    const double rate = r.estimates[1] * 1e9;
    const double rate_sigma = r.uncertainties[1] * 1e9;
    FitResult out = r;
    out.names = {"amplitude", "rate", "photon_lifetime", "kappa"};
    out.units = {"1", "1/s", "s", "rad_per_s"};
    out.estimates = {std::exp(loga), rate, 1.0 / rate, rate / 2.0};
    out.uncertainties = {std::exp(loga) * r.uncertainties[0], rate_sigma, rate_sigma / (rate * rate), rate_sigma / 2.0};
    return out;
}

} // namespace fcqed

#include "fcqed/cavity.hpp"

#include <cmath>

namespace fcqed {

using cplx = std::complex<double>;

std::complex<double> response_denominator(const SystemParams& p, AngularRate delta)
{
    const double d = delta.rad_per_s();
    const cplx cav(p.kappa().rad_per_s(), d - p.cavity_detuning.rad_per_s());
    const cplx atom(p.gamma.rad_per_s(), d);
    const double g = p.g.rad_per_s();
    return cav * atom + g * g;
}

double transmission(const SystemParams& params, AngularRate delta)
{
    const auto p = validate(params);
    const double d = delta.rad_per_s();
    const cplx num = 2.0 * std::sqrt(p.kappa1.rad_per_s() * p.kappa2.rad_per_s()) * cplx(p.gamma.rad_per_s(), d);
    return std::norm(num / response_denominator(p, delta));
}

double empty_cavity_peak(const SystemParams& params)
{
    const auto p = validate(params);
    const double k = p.kappa().rad_per_s();
    return 4.0 * p.kappa1.rad_per_s() * p.kappa2.rad_per_s() / (k * k);
}

double normalized_transmission(const SystemParams& params, AngularRate delta)
{
    auto empty = validate(params);
    empty.g = AngularRate{};
    const double ref = transmission(empty, AngularRate{});
    if (!(ref > 0))
        throw ValidationError("empty-cavity transmission must be positive (kappa1 kappa2 > 0)");
    return transmission(params, delta) / ref;
}

std::vector<double> normalized_spectrum(const SystemParams& params, std::span<const AngularRate> deltas)
{
    std::vector<double> out;
    out.reserve(deltas.size());
    for (auto d : deltas)
        out.push_back(normalized_transmission(params, d));
    return out;
}

NormalModes normal_modes(const SystemParams& params)
{
    const auto p = validate(params);
    // Roots x of (i(x - dc) + kappa)(i x + gamma) + g^2 = 0:
    //   x = i (A + gamma) / 2 +- sqrt(g^2 - ((A - gamma) / 2)^2),  A = kappa - i dc
    const cplx A(p.kappa().rad_per_s(), -p.cavity_detuning.rad_per_s());
    const double gamma = p.gamma.rad_per_s();
    const double g = p.g.rad_per_s();
    const cplx half_diff = (A - gamma) / 2.0;
    const cplx root = std::sqrt(g * g - half_diff * half_diff);
    const cplx centre = cplx(0.0, 1.0) * (A + gamma) / 2.0;
    cplx plus = centre + root;
    cplx minus = centre - root;
    if (plus.real() < minus.real())
        std::swap(plus, minus);

    const double k = p.kappa().rad_per_s();
    NormalModes m;
    m.plus_detuning = AngularRate::rad_per_s(plus.real());
    m.minus_detuning = AngularRate::rad_per_s(minus.real());
    m.plus_linewidth = AngularRate::rad_per_s(2.0 * plus.imag());
    m.minus_linewidth = AngularRate::rad_per_s(2.0 * minus.imag());
    m.resolved = g * g > 0.25 * (k - gamma) * (k - gamma);
    return m;
}

AngularRate mirror_to_rate(double fraction, const CavityGeometry& geom)
{
    const auto g = validate(geom);
    if (!(fraction >= 0.0 && fraction < 1.0))
        throw ValidationError("transmission or loss fraction must lie in [0, 1)");
    return AngularRate::rad_per_s(constants::c * fraction / (4.0 * g.effective_index * g.length));
}

double rate_to_fraction(AngularRate rate, const CavityGeometry& geom)
{
    const auto g = validate(geom);
    return rate.rad_per_s() * 4.0 * g.effective_index * g.length / constants::c;
}

double one_way_transmission(double round_trip_loss)
{
    if (!(round_trip_loss >= 0.0 && round_trip_loss <= 1.0))
        throw ValidationError("round-trip loss must lie in [0, 1]");
    return std::sqrt(1.0 - round_trip_loss);
}

double round_trip_loss(double one_way)
{
    if (!(one_way >= 0.0 && one_way <= 1.0))
        throw ValidationError("one-way transmission must lie in [0, 1]");
    return 1.0 - one_way * one_way;
}

CouplingRegime classify_coupling(const SystemParams& params)
{
    const auto p = validate(params);
    CouplingRegime r;
    r.margin = p.kappa2 - p.kappa1 - p.kappa_loss;
    const double band = critical_tolerance * p.kappa().rad_per_s();
    if (std::abs(r.margin.rad_per_s()) <= band)
        r.label = Coupling::CriticallyCoupled;
    else
        r.label = r.margin.rad_per_s() < 0 ? Coupling::Undercoupled : Coupling::Overcoupled;
    return r;
}

const char* to_string(Coupling c)
{
    switch (c) {
    case Coupling::Undercoupled: return "undercoupled";
    case Coupling::CriticallyCoupled: return "critically_coupled";
    case Coupling::Overcoupled: return "overcoupled";
    }
    return "unknown";
}

double cooperativity(const SystemParams& params)
{
    const auto p = validate(params);
    const double g = p.g.rad_per_s();
    return g * g / (2.0 * p.kappa().rad_per_s() * p.gamma.rad_per_s());
}

bool is_strongly_coupled(const SystemParams& params)
{
    const auto p = validate(params);
    return p.g > p.kappa() && p.g > p.gamma;
}

} // namespace fcqed

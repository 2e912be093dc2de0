#include "fcqed/units.hpp"

#include <charconv>
#include <cmath>
#include <regex>

#include <fmt/format.h>

namespace fcqed {

namespace {

double parse_number(const std::string& s, std::string_view original)
{
    double v = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v))
        throw std::invalid_argument(fmt::format("cannot parse rate '{}'", original));
    return v;
}

void require(bool ok, const char* what)
{
    if (!ok)
        throw ValidationError(what);
}

bool finite(AngularRate r) { return std::isfinite(r.rad_per_s()); }

} // namespace

AngularRate parse_rate(std::string_view text)
{
    static const std::regex two_pi(
        R"(^\s*2\s*(?:\xCF\x80|pi)\s*(?:\xC3\x97|\*|x)\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*(MHz|kHz|Hz)\s*$)",
        std::regex::icase);
    static const std::regex rad(
        R"(^\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*rad\s*/\s*s\s*$)");

    const std::string s(text);
    std::smatch m;
    if (std::regex_match(s, m, two_pi)) {
        const double v = parse_number(m[1].str(), text);
        std::string unit = m[2].str();
        for (auto& ch : unit)
            ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        const double scale = unit == "mhz" ? 1e6 : unit == "khz" ? 1e3 : 1.0;
        return AngularRate::two_pi_hz(v * scale);
    }
    if (std::regex_match(s, m, rad))
        return AngularRate::rad_per_s(parse_number(m[1].str(), text));
    throw std::invalid_argument(fmt::format("cannot parse rate '{}'", text));
}

std::string format_two_pi_mhz(AngularRate rate)
{
    return fmt::format("2π×{:.3f} MHz", rate.two_pi_mhz());
}

SystemParams validate(const SystemParams& p)
{
    require(finite(p.kappa1) && finite(p.kappa2) && finite(p.kappa_loss) && finite(p.gamma) && finite(p.g)
                && finite(p.cavity_detuning),
            "rates must be finite");
    require(p.kappa1.rad_per_s() >= 0 && p.kappa2.rad_per_s() >= 0 && p.kappa_loss.rad_per_s() >= 0,
            "decay rates non-negative");
    require(p.kappa().rad_per_s() > 0, "kappa must be positive");
    require(p.gamma.rad_per_s() > 0, "gamma must be positive");
    require(p.g.rad_per_s() >= 0, "g must be non-negative");
    if (p.omega_A)
        require(finite(*p.omega_A) && p.omega_A->rad_per_s() > 0, "omega_A must be positive");
    return p;
}

CavityGeometry validate(const CavityGeometry& geom)
{
    require(std::isfinite(geom.length) && geom.length > 0, "cavity length must be positive");
    require(geom.effective_index >= 1 && geom.effective_index < 2, "effective index must lie in [1, 2)");
    return geom;
}

AngularRate fsr(const CavityGeometry& geom)
{
    const auto g = validate(geom);
    return AngularRate::two_pi_hz(constants::c / (2.0 * g.effective_index * g.length));
}

SystemParams reference_params()
{
    SystemParams p;
    p.kappa1 = AngularRate::two_pi_mhz(0.12);
    p.kappa2 = AngularRate::two_pi_mhz(3.2);
    p.kappa_loss = AngularRate::two_pi_mhz(3.08);
    p.gamma = AngularRate::two_pi_mhz(2.6);
    p.g = AngularRate::two_pi_mhz(7.8);
    p.omega_A = AngularRate::rad_per_s(constants::two_pi * constants::c / constants::cs_d2_wavelength);
    return p;
}

std::vector<double> linspace(double lo, double hi, std::size_t n)
{
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    for (std::size_t i = 0; i < n; ++i)
        v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

} // namespace fcqed

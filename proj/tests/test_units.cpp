#include "doctest.h"

#include <cmath>

#include "fcqed/units.hpp"

using namespace fcqed;
using namespace fcqed::literals;

TEST_SUITE("units") {

TEST_CASE("two_pi_mhz and rad_per_s agree") {
    auto r = AngularRate::two_pi_mhz(6.4);
    CHECK(r.rad_per_s() == doctest::Approx(2 * M_PI * 6.4e6).epsilon(1e-15));
    CHECK(r.two_pi_mhz() == doctest::Approx(6.4).epsilon(1e-15));
    CHECK((7.8_2pi_MHz).two_pi_mhz() == doctest::Approx(7.8));
    CHECK(AngularRate::two_pi_hz(1.0).rad_per_s() == doctest::Approx(2 * M_PI));
}

TEST_CASE("parse then format is the canonical 3-decimal form") {
    CHECK(format_two_pi_mhz(parse_rate("2π×6.4 MHz")) == "2π×6.400 MHz");
    CHECK(format_two_pi_mhz(parse_rate("2pi*6.4 MHz")) == "2π×6.400 MHz");
    CHECK(format_two_pi_mhz(parse_rate("2pi x 6.4MHz")) == "2π×6.400 MHz");
    CHECK(format_two_pi_mhz(parse_rate("2π×120 kHz")) == "2π×0.120 MHz");
    CHECK(parse_rate("4.02e7 rad/s").rad_per_s() == 4.02e7);
    CHECK_THROWS_AS(parse_rate("6.4 MHz"), std::invalid_argument);
    CHECK_THROWS_AS(parse_rate("2π×abc MHz"), std::invalid_argument);
}

TEST_CASE("validate examples") {
    SystemParams ok{1.0_2pi_MHz, 1.0_2pi_MHz, {}, 1.0_2pi_MHz, 1.0_2pi_MHz, {}, {}};
    CHECK_NOTHROW(validate(ok));

    auto p = ok;
    p.gamma = {};
    CHECK_THROWS_WITH_AS(validate(p), "gamma must be positive", ValidationError);

    p = ok;
    p.kappa1 = AngularRate::two_pi_mhz(-1);
    CHECK_THROWS_WITH_AS(validate(p), "decay rates non-negative", ValidationError);

    p = ok;
    p.kappa1 = p.kappa2 = {};
    CHECK_THROWS_WITH_AS(validate(p), "kappa must be positive", ValidationError);

    p = ok;
    p.g = AngularRate::rad_per_s(NAN);
    CHECK_THROWS_AS(validate(p), ValidationError);
}

TEST_CASE("validate is idempotent") {
    auto p = reference_params();
    auto once = validate(p);
    auto twice = validate(once);
    CHECK(once.kappa() == twice.kappa());
    CHECK(once.g == twice.g);
    CHECK(once.gamma == twice.gamma);
    CavityGeometry geom;
    CHECK(validate(validate(geom)).length == geom.length);
}

TEST_CASE("free spectral range") {
    CavityGeometry geom;
    // c / (2 n L) directly
    CHECK(fsr(geom).two_pi_mhz() == doctest::Approx(299792458.0 / (2 * 1.45 * 0.33) / 1e6).epsilon(1e-12));
    CHECK(fsr(geom).two_pi_mhz() == doctest::Approx(313.3).epsilon(1e-3));
    auto doubled = geom;
    doubled.length *= 2;
    CHECK(fsr(doubled) / fsr(geom) == doctest::Approx(0.5));
    CavityGeometry unit{299792458.0 / 2, 1.0};
    CHECK(fsr(unit).rad_per_s() == doctest::Approx(2 * M_PI));
    CHECK_THROWS_AS(fsr(CavityGeometry{0.0, 1.45}), ValidationError);
    CHECK_THROWS_AS(fsr(CavityGeometry{0.33, 0.9}), ValidationError);
}

TEST_CASE("reference params are critically coupled at kappa = 2pi x 6.4 MHz") {
    auto p = reference_params();
    CHECK(p.kappa().two_pi_mhz() == doctest::Approx(6.4).epsilon(1e-12));
    CHECK(p.kappa2.two_pi_mhz() == doctest::Approx((p.kappa1 + p.kappa_loss).two_pi_mhz()).epsilon(1e-12));
}

TEST_CASE("linspace") {
    auto v = linspace(-1, 1, 5);
    REQUIRE(v.size() == 5);
    CHECK(v.front() == -1);
    CHECK(v.back() == 1);
    CHECK(v[2] == 0);
}

}

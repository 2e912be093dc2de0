#include "doctest.h"

#include <random>

#include "fcqed/fit.hpp"
#include "fcqed/ringdown.hpp"
#include "oracles.hpp"

using namespace fcqed;
using namespace fcqed::literals;

namespace {

RingdownParams random_params(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> rate(0.01, 10.0), ratio(1.2, 20.0), s0(0.1, 3.0);
    RingdownParams p;
    p.kappa1 = AngularRate::two_pi_mhz(rate(rng));
    p.kappa2 = AngularRate::two_pi_mhz(rate(rng));
    p.kappa_loss = AngularRate::two_pi_mhz(rate(rng));
    p.kappa_s = p.kappa() * ratio(rng);
    p.s0 = s0(rng);
    return p;
}

std::vector<double> grid_for(const RingdownParams& p, std::size_t n = 400) {
    const double k = p.kappa().rad_per_s();
    return linspace(-2.0 / k, 10.0 / k, n);
}

} // namespace

TEST_SUITE("ringdown") {

TEST_CASE("closed form matches the convolution oracle") {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 100; ++i) {
        auto p = random_params(rng);
        for (double t : grid_for(p, 200)) {
            const double want = oracle::reflected_intensity(p.kappa1.rad_per_s(), p.kappa2.rad_per_s(),
                                                            p.kappa_loss.rad_per_s(), p.kappa_s.rad_per_s(), p.s0, t);
            CHECK(std::abs(reflected_intensity_analytic(p, t) - want) <= 1e-12 * p.s0 * p.s0 + 1e-10 * want);
        }
    }
}

TEST_CASE("integration agrees with the closed form on 100 random parameter sets") {
    std::mt19937_64 rng(99);
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
        auto p = random_params(rng);
        auto t = grid_for(p);
        auto a = analytic_trace(p, t);
        auto b = integrate_ringdown(p, t);
        // independent metric: relative to the oracle intensity with a 1e-6 s0^2 floor
        for (std::size_t j = 0; j < t.size(); ++j) {
            const double want = oracle::reflected_intensity(p.kappa1.rad_per_s(), p.kappa2.rad_per_s(),
                                                            p.kappa_loss.rad_per_s(), p.kappa_s.rad_per_s(), p.s0, t[j]);
            worst = std::max(worst, std::abs(b.intensities[j] - want) / std::max(want, 1e-6 * p.s0 * p.s0));
        }
        CHECK(max_relative_deviation(a, b, p.s0) < 1e-6);
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("continuity at t = 0") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        auto p = random_params(rng);
        const double before = reflected_intensity_analytic(p, -1e-300);
        const double after = reflected_intensity_analytic(p, 0.0);
        CHECK(std::abs(after - before) <= 1e-12 * std::max(before, 1e-300) + 1e-14 * p.s0 * p.s0);
    }
}

TEST_CASE("critical coupling nulls the steady reflection") {
    RingdownParams p = ringdown_params(reference_params());
    p.kappa2 = p.kappa1 + p.kappa_loss;
    CHECK(reflected_intensity_analytic(p, -1e-9) < 1e-20 * p.s0 * p.s0);
    CHECK(integrate_ringdown(p, std::vector<double>{-1e-8}).intensities[0] < 1e-20);
}

TEST_CASE("cavity field examples") {
    auto p = ringdown_params(reference_params());
    const double k = p.kappa().rad_per_s();
    auto a = cavity_field_analytic(p, -1e-9);
    CHECK(std::norm(a) == doctest::Approx(2 * p.kappa2.rad_per_s() * p.s0 * p.s0 / (k * k)).epsilon(1e-12));
    CHECK(std::abs(cavity_field_analytic(p, 60.0 / k)) < 1e-20);

    auto fast = p;
    fast.kappa_s = p.kappa() * 1e6;
    const double a0 = std::abs(cavity_field_analytic(fast, 0.0));
    for (double t : {0.5 / k, 1.0 / k, 3.0 / k})
        CHECK(std::abs(cavity_field_analytic(fast, t)) == doctest::Approx(a0 * std::exp(-k * t)).epsilon(1e-4));

    p.omega0 = AngularRate::rad_per_s(1e15);
    CHECK(std::abs(cavity_field_analytic(p, 3e-9)) == doctest::Approx(std::abs(cavity_field_analytic(ringdown_params(reference_params()), 3e-9))));
}

TEST_CASE("no output coupler: pure reflection of the input") {
    RingdownParams p;
    p.kappa1 = 0.12_2pi_MHz;
    p.kappa2 = {};
    p.kappa_loss = 3.0_2pi_MHz;
    p.kappa_s = 50.0_2pi_MHz;
    std::vector<double> t = linspace(-10e-9, 100e-9, 300);
    auto tr = integrate_ringdown(p, t);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double in = t[i] < 0 ? 1.0 : std::exp(-2 * p.kappa_s.rad_per_s() * t[i]);
        CHECK(tr.intensities[i] == doctest::Approx(in).epsilon(1e-8).scale(1e-12));
        CHECK(reflected_intensity_analytic(p, t[i]) == doctest::Approx(in).epsilon(1e-12));
    }
}

TEST_CASE("under and over coupling differ after switch-off") {
    auto base = ringdown_params(reference_params());
    auto under = base, over = base;
    under.kappa2 = (base.kappa1 + base.kappa_loss) * 0.3;
    over.kappa2 = (base.kappa1 + base.kappa_loss) * 3.0;
    const double k = base.kappa().rad_per_s();
    auto t = linspace(0, 5.0 / k, 2000);
    auto u = analytic_trace(under, t), o = analytic_trace(over, t);
    // undercoupled: the reflected field changes sign, so the intensity dips
    // to zero and revives; overcoupled: it stays positive and decays after the
    // switch-off transient.
    const auto early = static_cast<std::ptrdiff_t>(t.size() / 5);  // t <= 1/kappa
    double umin = *std::min_element(u.intensities.begin(), u.intensities.begin() + early);
    double omin = *std::min_element(o.intensities.begin(), o.intensities.begin() + early);
    CHECK(umin < 1e-4 * u.intensities.front());
    CHECK(omin > 1e-3 * o.intensities.front());
    auto peak = std::max_element(o.intensities.begin(), o.intensities.end());
    CHECK(std::is_sorted(peak, o.intensities.end(), std::greater<>()));
}

TEST_CASE("tail fit recovers 2 kappa to 0.1%") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> rate(0.05, 8.0), ratio(5.0, 30.0);
    for (int i = 0; i < 30; ++i) {
        RingdownParams p;
        p.kappa1 = AngularRate::two_pi_mhz(rate(rng));
        p.kappa2 = AngularRate::two_pi_mhz(rate(rng));
        p.kappa_loss = AngularRate::two_pi_mhz(rate(rng));
        p.kappa_s = p.kappa() * ratio(rng);
        auto [t0, t1] = tail_window(p);
        auto t = linspace(t0, t1, 400);
        auto fr = fit_ringdown_tail(analytic_trace(p, t), t0, t1);
        CHECK(fr.converged);
        CHECK(fr.value("kappa") == doctest::Approx(p.kappa().rad_per_s()).epsilon(1e-3));
    }
}

TEST_CASE("lifetimes") {
    CHECK(photon_lifetime(6.4_2pi_MHz) * 1e9 == doctest::Approx(12.43).epsilon(1e-3));
    CHECK(photon_lifetime(12.8_2pi_MHz) == doctest::Approx(photon_lifetime(6.4_2pi_MHz) / 2));
    CHECK(kappa_from_lifetime(18.4e-9).two_pi_mhz() == doctest::Approx(4.33).epsilon(1e-3));
    CHECK(kappa_from_lifetime(photon_lifetime(6.4_2pi_MHz)).two_pi_mhz() == doctest::Approx(6.4));
    auto loss = kappa_loss_from_critical_lifetime(12.5e-9, 0.12_2pi_MHz);
    auto k2 = kappa2_from_lifetime(12.5e-9, 0.12_2pi_MHz, loss);
    CHECK(k2.rad_per_s() == doctest::Approx((0.12_2pi_MHz + loss).rad_per_s()));
    CHECK(kappa2_from_lifetime(18.4e-9, 0.12_2pi_MHz, loss) < k2);
    CHECK_THROWS_AS(kappa2_from_lifetime(1e-6, 0.12_2pi_MHz, loss), ValidationError);
    CHECK_THROWS_AS(photon_lifetime(AngularRate{}), ValidationError);
}

TEST_CASE("band edge model") {
    BandEdgeModel m({26.4, 22.6, 19.0}, {1.14_2pi_MHz, 3.18_2pi_MHz, 7.7_2pi_MHz});
    CHECK(m.kappa2(22.6).two_pi_mhz() == doctest::Approx(3.18));
    CHECK(m.kappa2(24.5).two_pi_mhz() == doctest::Approx((1.14 + 3.18) / 2));
    CHECK(m.kappa2(40.0).rad_per_s() >= 0);
    CHECK_THROWS_AS(BandEdgeModel({1.0}, {1.0_2pi_MHz}), ValidationError);
}

TEST_CASE("validation") {
    auto p = ringdown_params(reference_params());
    p.kappa_s = p.kappa();
    CHECK_THROWS_WITH_AS(validate(p), "kappa_s must exceed kappa", ValidationError);
    p = ringdown_params(reference_params());
    std::vector<double> unsorted{1e-9, 0.0};
    CHECK_THROWS_AS(integrate_ringdown(p, unsorted), ValidationError);
}

}

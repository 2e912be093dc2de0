#include "doctest.h"

#include <random>

#include "fcqed/cavity.hpp"
#include "oracles.hpp"

using namespace fcqed;
using namespace fcqed::literals;

namespace {

SystemParams measured(double g_mhz = 7.8) {
    auto p = reference_params();
    p.g = AngularRate::two_pi_mhz(g_mhz);
    return p;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

} // namespace

TEST_SUITE("cavity") {

TEST_CASE("transmission matches the expanded oracle") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.05, 10.0), d(-40, 40);
    for (int trial = 0; trial < 500; ++trial) {
        SystemParams p{AngularRate::two_pi_mhz(u(rng)), AngularRate::two_pi_mhz(u(rng)), AngularRate::two_pi_mhz(u(rng)),
                       AngularRate::two_pi_mhz(u(rng)), AngularRate::two_pi_mhz(u(rng)), {},
                       AngularRate::two_pi_mhz(d(rng) / 4)};
        const double delta = d(rng) * oracle::two_pi_mhz;
        const double expected = oracle::transmission(p.kappa1.rad_per_s(), p.kappa2.rad_per_s(), p.kappa_loss.rad_per_s(),
                                                     p.gamma.rad_per_s(), p.g.rad_per_s(), delta,
                                                     p.cavity_detuning.rad_per_s());
        CHECK(rel(transmission(p, AngularRate::rad_per_s(delta)), expected) < 1e-12);
    }
}

TEST_CASE("g = 0 reduces to the Lorentzian on 1000 points") {
    auto p = measured(0);
    const double k = p.kappa().rad_per_s();
    double worst = 0;
    for (double mhz : linspace(-50, 50, 1000)) {
        const double d = mhz * oracle::two_pi_mhz;
        worst = std::max(worst, rel(transmission(p, AngularRate::rad_per_s(d)),
                                    oracle::lorentzian(p.kappa1.rad_per_s(), p.kappa2.rad_per_s(), k, d)));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("transmission examples") {
    SystemParams sym{1.0_2pi_MHz, 1.0_2pi_MHz, {}, 1.0_2pi_MHz, {}, {}, {}};
    CHECK(transmission(sym, {}) == doctest::Approx(1.0).epsilon(1e-14));

    auto crit = measured(0);
    CHECK(transmission(crit, crit.kappa()) == doctest::Approx(transmission(crit, {}) / 2).epsilon(1e-13));
    CHECK(normalized_transmission(crit, {}) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(normalized_transmission(crit, crit.kappa()) == doctest::Approx(0.5).epsilon(1e-13));

    auto p = measured();
    CHECK(normalized_transmission(p, {}) < 0.2);
    // Dip at zero, two maxima near +-7.6 MHz (fine-grid oracle).
    auto xs = linspace(-25, 25, 50001);
    std::vector<double> ys;
    for (double x : xs) ys.push_back(oracle::transmission(p.kappa1.rad_per_s(), p.kappa2.rad_per_s(),
                                                          p.kappa_loss.rad_per_s(), p.gamma.rad_per_s(),
                                                          p.g.rad_per_s(), x * oracle::two_pi_mhz));
    auto peaks = oracle::local_maxima(xs, ys);
    REQUIRE(peaks.size() == 2);
    CHECK(transmission(p, {}) < transmission(p, 1.0_2pi_MHz));
    CHECK(std::abs(peaks[1]) == doctest::Approx(std::abs(peaks[0])).epsilon(1e-9));
    MESSAGE("grid maxima at +-" << peaks[1] << " MHz");
    CHECK(peaks[1] > 7.0);
    CHECK(peaks[1] < 9.0);
}

TEST_CASE("even in delta without cavity detuning") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    for (int i = 0; i < 200; ++i) {
        SystemParams p{AngularRate::two_pi_mhz(u(rng)), AngularRate::two_pi_mhz(u(rng)), AngularRate::two_pi_mhz(u(rng)),
                       AngularRate::two_pi_mhz(u(rng)), AngularRate::two_pi_mhz(u(rng)), {}, {}};
        auto d = AngularRate::two_pi_mhz(u(rng) * 3);
        CHECK(transmission(p, d) == doctest::Approx(transmission(p, -d)).epsilon(1e-14));
    }
}

TEST_CASE("transmission never exceeds the empty-cavity peak") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.01, 20.0), d(-60, 60);
    for (int i = 0; i < 2000; ++i) {
        SystemParams p{AngularRate::two_pi_mhz(u(rng)), AngularRate::two_pi_mhz(u(rng)), AngularRate::two_pi_mhz(u(rng)),
                       AngularRate::two_pi_mhz(u(rng)), AngularRate::two_pi_mhz(u(rng)), {}, {}};
        CHECK(transmission(p, AngularRate::two_pi_mhz(d(rng))) <= empty_cavity_peak(p) * (1 + 1e-12));
    }
}

TEST_CASE("normalized transmission needs a transmitting cavity") {
    auto p = measured();
    p.kappa1 = {};
    CHECK_THROWS_AS(normalized_transmission(p, {}), ValidationError);
}

TEST_CASE("normal modes agree with the eigenvalue oracle") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    for (int i = 0; i < 300; ++i) {
        auto p = measured();
        p.kappa2 = AngularRate::two_pi_mhz(u(rng));
        p.gamma = AngularRate::two_pi_mhz(u(rng));
        p.g = AngularRate::two_pi_mhz(u(rng));
        p.cavity_detuning = AngularRate::two_pi_mhz(u(rng) - 5);
        auto nm = normal_modes(p);
        auto roots = oracle::normal_mode_roots(p.kappa().rad_per_s(), p.gamma.rad_per_s(), p.g.rad_per_s(),
                                               p.cavity_detuning.rad_per_s());
        const double scale = p.kappa().rad_per_s();
        CHECK(std::abs(nm.plus_detuning.rad_per_s() - roots[0].detuning) < 1e-9 * scale);
        CHECK(std::abs(nm.minus_detuning.rad_per_s() - roots[1].detuning) < 1e-9 * scale);
        CHECK(std::abs(nm.plus_linewidth.rad_per_s() - 2 * roots[0].half_width) < 1e-9 * scale);
        CHECK(std::abs(nm.minus_linewidth.rad_per_s() - 2 * roots[1].half_width) < 1e-9 * scale);
    }
}

TEST_CASE("normal mode examples") {
    auto p = measured(0);
    auto nm = normal_modes(p);
    CHECK(nm.plus_detuning.rad_per_s() == doctest::Approx(0).scale(1e6));
    CHECK(nm.minus_detuning.rad_per_s() == doctest::Approx(0).scale(1e6));
    double w1 = nm.plus_linewidth.two_pi_mhz(), w2 = nm.minus_linewidth.two_pi_mhz();
    CHECK(std::max(w1, w2) == doctest::Approx(2 * 6.4));
    CHECK(std::min(w1, w2) == doctest::Approx(2 * 2.6));
    CHECK_FALSE(nm.resolved);

    nm = normal_modes(measured(7.8));
    CHECK(nm.resolved);
    CHECK(nm.splitting().two_pi_mhz() == doctest::Approx(2 * std::sqrt(7.8 * 7.8 - 1.9 * 1.9)).epsilon(1e-12));
    CHECK(nm.splitting().two_pi_mhz() == doctest::Approx(15.13).epsilon(1e-3));

    nm = normal_modes(measured(1000));
    CHECK(nm.splitting().two_pi_mhz() / 2000 == doctest::Approx(1).epsilon(1e-5));
    CHECK(nm.plus_linewidth.two_pi_mhz() == doctest::Approx(6.4 + 2.6));
}

TEST_CASE("transmission peaks approach the normal modes in strong coupling") {
    // The numerator (i delta + gamma) shifts the maxima away from the
    // normal-mode frequencies; the shift vanishes as g grows.
    double prev = 1e9;
    for (double g : {7.8, 20.0, 60.0, 200.0}) {
        auto p = measured(g);
        auto nm = normal_modes(p);
        auto xs = linspace(-1.3 * g, 1.3 * g, 200001);
        std::vector<double> ys;
        for (double x : xs) ys.push_back(transmission(p, AngularRate::two_pi_mhz(x)));
        auto peaks = oracle::local_maxima(xs, ys);
        REQUIRE(peaks.size() == 2);
        const double off = std::abs(peaks[1] - nm.plus_detuning.two_pi_mhz()) / g;
        CHECK(off < prev);
        prev = off;
    }
    CHECK(prev < 1e-3);
}

TEST_CASE("mirror conversion") {
    CavityGeometry geom;
    auto k1 = mirror_to_rate(0.005, geom);
    CHECK(k1.two_pi_mhz() == doctest::Approx(0.12).epsilon(0.10));
    CHECK(k1.two_pi_mhz() == doctest::Approx(299792458.0 * 0.005 / (4 * 1.45 * 0.33) / (2 * M_PI) / 1e6).epsilon(1e-12));
    CHECK(mirror_to_rate(0.0, geom).rad_per_s() == 0);
    CHECK(mirror_to_rate(0.01, geom) / mirror_to_rate(0.005, geom) == doctest::Approx(2));
    CHECK(mirror_to_rate(0.003, geom).rad_per_s() ==
          doctest::Approx(mirror_to_rate(0.001, geom).rad_per_s() + mirror_to_rate(0.002, geom).rad_per_s()));
    auto kl = mirror_to_rate(0.128, geom);
    CHECK(kl.two_pi_mhz() == doctest::Approx(3.2).epsilon(0.01));
    CHECK(one_way_transmission(0.128) == doctest::Approx(std::sqrt(1 - 0.128)));
    CHECK(one_way_transmission(0.128) == doctest::Approx(0.94).epsilon(0.01 / 0.94));
    CHECK(round_trip_loss(one_way_transmission(0.128)) == doctest::Approx(0.128));
    CHECK(rate_to_fraction(kl, geom) == doctest::Approx(0.128));
    CHECK_THROWS_AS(mirror_to_rate(1.0, geom), ValidationError);
    CHECK_THROWS_AS(mirror_to_rate(-0.1, geom), ValidationError);
}

TEST_CASE("coupling regime") {
    auto p = measured();
    CHECK(classify_coupling(p).label == Coupling::CriticallyCoupled);
    p.kappa2 = 2 * (p.kappa1 + p.kappa_loss);
    CHECK(classify_coupling(p).label == Coupling::Overcoupled);
    p.kappa2 = (p.kappa1 + p.kappa_loss) / 2;
    CHECK(classify_coupling(p).label == Coupling::Undercoupled);
    CHECK(std::string(to_string(Coupling::CriticallyCoupled)) == "critically_coupled");

    // Outside the tolerance band only the sign of the margin matters.
    auto base = measured();
    const double k = base.kappa().rad_per_s();
    for (double m : {-0.5, -0.01, -0.002, 0.002, 0.01, 0.5}) {
        auto q = base;
        q.kappa2 = base.kappa1 + base.kappa_loss + AngularRate::rad_per_s(m * k);
        auto want = m > 0 ? Coupling::Overcoupled : Coupling::Undercoupled;
        CHECK(classify_coupling(q).label == want);
    }
}

TEST_CASE("cooperativity and strong coupling") {
    auto p = measured();
    CHECK(cooperativity(p) == doctest::Approx(7.8 * 7.8 / (2 * 6.4 * 2.6)).epsilon(1e-12));
    CHECK(cooperativity(p) == doctest::Approx(1.83).epsilon(0.005));
    CHECK(cooperativity(measured(0)) == 0);
    CHECK(cooperativity(measured(15.6)) == doctest::Approx(4 * cooperativity(p)));
    CHECK(is_strongly_coupled(p));
    auto q = measured(6.4);
    q.g = q.kappa();
    CHECK_FALSE(is_strongly_coupled(q));
    CHECK(is_strongly_coupled(measured(1e4)));
}

}

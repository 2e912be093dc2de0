#include "doctest.h"

#include <random>

#include "fcqed/io.hpp"
#include "fcqed/svg.hpp"

using namespace fcqed;
using namespace fcqed::literals;

TEST_SUITE("io") {

TEST_CASE("shortest round-trip doubles") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int i = 0; i < 1000; ++i) {
        double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(12.5) == "12.5");
    CHECK_THROWS_AS(format_double(NAN), NonFiniteOutput);
    CHECK_THROWS_AS(format_double(INFINITY), NonFiniteOutput);
}

TEST_CASE("spectrum csv") {
    Spectrum s;
    s.deltas = {-1.0_2pi_MHz, 0.0_2pi_MHz, 1.0_2pi_MHz};
    s.values = {0.5, 1.0, 0.5};
    auto text = spectrum_csv(s);
    CHECK(text.rfind("delta_two_pi_mhz,transmission_normalized\n", 0) == 0);
    auto back = parse_spectrum_csv(text);
    CHECK(back.values == s.values);
    CHECK(spectrum_csv(back) == text);
    s.sigmas = {0.1, 0.1, 0.1};
    auto with = spectrum_csv(s);
    CHECK(with.rfind("delta_two_pi_mhz,transmission_normalized,sigma\n", 0) == 0);
    CHECK(parse_spectrum_csv(with).sigmas == s.sigmas);
    CHECK_THROWS_AS(parse_spectrum_csv("a,b\n1,2\n"), IoError);
    CHECK_THROWS_AS(parse_spectrum_csv("delta_two_pi_mhz,transmission_normalized\n1,nan\n"), IoError);
    CHECK_THROWS_AS(parse_spectrum_csv("1,2\n"), IoError);
    s.values[1] = NAN;
    CHECK_THROWS_AS(spectrum_csv(s), NonFiniteOutput);
}

TEST_CASE("trace csv round trip is bit exact") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    TraceTable t;
    double time = -50;
    for (int i = 0; i < 500; ++i) {
        time += u(rng) * 0.37;
        t.t_ns.push_back(time);
        t.intensity.push_back(u(rng) * u(rng));
    }
    auto text = trace_csv(t);
    auto back = parse_trace_csv(text);
    CHECK(back.t_ns == t.t_ns);
    CHECK(back.intensity == t.intensity);
    CHECK(trace_csv(back) == text);
    CHECK_THROWS_AS(parse_trace_csv("t_ns,intensity_normalized\n2,1\n1,1\n"), IoError);
}

TEST_CASE("rates in json") {
    auto r = rate_from_json(json{{"value", 6.4}, {"unit", "two_pi_mhz"}}, "/k");
    CHECK(r.two_pi_mhz() == doctest::Approx(6.4));
    CHECK(rate_from_json(json{{"value", 1e7}, {"unit", "rad_per_s"}}, "/k").rad_per_s() == 1e7);
    CHECK(rate_from_json(json("2π×6.4 MHz"), "/k").two_pi_mhz() == doctest::Approx(6.4));
    CHECK(rate_from_json(rate_to_json(r), "/k") == r);
    try {
        rate_from_json(json{{"value", 1}, {"unit", "Hz"}}, "/system/kappa1");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.pointer == "/system/kappa1/unit");
    }
}

TEST_CASE("system params json round trip and pointer errors") {
    auto p = reference_params();
    auto back = system_params_from_json(to_json(p), "", {});
    CHECK(back.kappa1 == p.kappa1);
    CHECK(back.g == p.g);
    CHECK(back.omega_A->rad_per_s() == p.omega_A->rad_per_s());
    try {
        system_params_from_json(json{{"gamma", {{"value", 0}, {"unit", "two_pi_mhz"}}}}, "/system", p);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.pointer == "/system");
        CHECK(std::string(e.what()).find("gamma must be positive") != std::string::npos);
    }
    try {
        system_params_from_json(json{{"kapa1", 1}}, "/system", p);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.pointer == "/system/kapa1");
    }
}

TEST_CASE("sequence config round trip") {
    SequenceConfig c;
    c.rng_seed = 99;
    c.loading = LoadingMode::PoissonNumber;
    auto j = to_json(c);
    auto back = sequence_config_from_json(j, "", {});
    CHECK(to_json(back).dump() == j.dump());
}

TEST_CASE("fiber json") {
    auto f = fiber_from_json(json{{"numerical_aperture", 0.12}}, "/fiber", default_fiber());
    CHECK(f.numerical_aperture() == doctest::Approx(0.12));
    CHECK_THROWS_AS(fiber_from_json(json{{"n_core", 1.4}, {"n_clad", 1.45}}, "/fiber", default_fiber()), ConfigError);
}

TEST_CASE("fit result json uses null for infinite sigma") {
    FitResult r;
    r.names = {"g"};
    r.units = {"rad_per_s"};
    r.estimates = {1.0};
    r.uncertainties = {INFINITY};
    auto j = to_json(r);
    CHECK(j["uncertainties"][0].is_null());
    CHECK(j["converged"] == false);
}

TEST_CASE("atomic write") {
    auto dir = std::filesystem::temp_directory_path() / "fcqed_io_test";
    std::filesystem::create_directories(dir);
    auto path = dir / "x.txt";
    write_file_atomic(path, "one\n");
    write_file_atomic(path, "two\n");
    CHECK(read_file(path) == "two\n");
    CHECK_FALSE(std::filesystem::exists(dir / "x.txt.tmp"));
    CHECK_THROWS_AS(read_file(dir / "missing"), IoError);
    CHECK_THROWS_AS(write_file_atomic(dir / "no" / "such" / "dir.txt", "x"), IoError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("svg") {
    Panel p{"t", "x", "y", {Series{"a", {0, 1, 2}, {0, 1, 4}}}};
    auto svg = render_svg({p, p}, "title");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("polyline") != std::string::npos);
    CHECK(svg.find("nan") == std::string::npos);
    p.series[0].y[1] = NAN;
    CHECK_THROWS_AS(render_svg({p}), NonFiniteOutput);
    CHECK(render_svg({Panel{}}).find("</svg>") != std::string::npos);
}

}

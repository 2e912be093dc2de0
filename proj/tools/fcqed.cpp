// fcqed - command-line front end: spectrum | ringdown | fit | mode-solve | experiment

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"

#include "fcqed/cavity.hpp"
#include "fcqed/experiment.hpp"
#include "fcqed/fiber_mode.hpp"
#include "fcqed/fit.hpp"
#include "fcqed/io.hpp"
#include "fcqed/ringdown.hpp"
#include "fcqed/svg.hpp"
#include "fcqed/units.hpp"

namespace fs = std::filesystem;
using namespace fcqed;

namespace {

constexpr const char* tool_version = "0.1.0";

enum Exit { ok = 0, config_error = 2, numerical_error = 3, io_error = 4 };

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    bool plot = false;
    std::string out_dir = ".";
    bool dump_config = false;
};

// Collects outputs, then writes each together with its manifest.
class Run {
public:
    Run(std::string subcommand, const Globals& g) : sub_(std::move(subcommand)), out_(g.out_dir) {}

    fs::path path(const std::string& name) const { return out_ / name; }

    void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }
    void input(const std::string& p) { inputs_.push_back(p); }

    void commit(const json& config, std::uint64_t seed, double seconds) {
        std::error_code ec;
        fs::create_directories(out_, ec);
        if (ec) throw IoError(fmt::format("cannot create output directory '{}'", out_.string()));
        json manifest;
        manifest["subcommand"] = sub_;
        manifest["config"] = config;
        manifest["inputs"] = inputs_;
        json outs = json::array();
        for (const auto& f : files_) outs.push_back(path(f.first).string());
        manifest["outputs"] = outs;
        manifest["seed"] = seed;
        manifest["tool_version"] = tool_version;
        manifest["wall_clock_seconds"] = seconds;
        const std::string text = manifest.dump(2) + "\n";
        for (const auto& [name, content] : files_) {
            write_file_atomic(path(name), content);
            write_file_atomic(path(name + ".manifest.json"), text);
        }
    }

    const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }

private:
    std::string sub_;
    fs::path out_;
    std::vector<std::pair<std::string, std::string>> files_;
    std::vector<std::string> inputs_;
};

// Loads --config; a manifest is unwrapped to its resolved config.
json load_config(const Globals& g, const std::string& subcommand) {
    if (g.config_path.empty()) return json::object();
    json doc;
    try {
        doc = json::parse(read_file(g.config_path));
    } catch (const IoError& e) {
        throw ConfigError("", e.what());
    } catch (const json::parse_error& e) {
        throw ConfigError("", fmt::format("{}: {}", g.config_path, e.what()));
    }
    if (!doc.is_object()) throw ConfigError("", "config must be a JSON object");
    if (doc.contains("subcommand") && doc.contains("config")) {
        if (doc["subcommand"] != subcommand)
            throw ConfigError("/subcommand", fmt::format("manifest is for '{}'", doc["subcommand"].dump()));
        doc = doc["config"];
    }
    return doc;
}

void reject_unknown(const json& doc, std::initializer_list<const char*> known) {
    for (const auto& [key, _] : doc.items()) {
        bool found = false;
        for (auto* k : known) found = found || key == k;
        if (!found) throw ConfigError("/" + key, "unknown field");
    }
}

std::uint64_t resolve_seed(const Globals& g, const json& doc) {
    if (g.seed) return *g.seed;
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned()) throw ConfigError("/seed", "expected a non-negative integer");
        return doc["seed"].get<std::uint64_t>();
    }
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) | rd();
}

double num(const json& doc, const char* key, double fallback) {
    if (!doc.contains(key)) return fallback;
    if (!doc[key].is_number()) throw ConfigError(std::string("/") + key, "expected a number");
    return doc[key].get<double>();
}

bool flag(const json& doc, const char* key, bool fallback) {
    if (!doc.contains(key)) return fallback;
    if (!doc[key].is_boolean()) throw ConfigError(std::string("/") + key, "expected a boolean");
    return doc[key].get<bool>();
}

std::size_t count(const json& doc, const char* key, std::size_t fallback) {
    if (!doc.contains(key)) return fallback;
    if (!doc[key].is_number_unsigned()) throw ConfigError(std::string("/") + key, "expected a non-negative integer");
    return doc[key].get<std::size_t>();
}

std::string str(const json& doc, const char* key, const std::string& fallback) {
    if (!doc.contains(key)) return fallback;
    if (!doc[key].is_string()) throw ConfigError(std::string("/") + key, "expected a string");
    return doc[key].get<std::string>();
}

std::vector<AngularRate> detuning_grid(double lo, double hi, std::size_t n) {
    if (n < 2 || !(hi > lo)) throw ConfigError("/grid", "need points >= 2 and delta_max > delta_min");
    std::vector<AngularRate> out;
    for (double d : linspace(lo, hi, n)) out.push_back(AngularRate::two_pi_mhz(d));
    return out;
}

double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void print_dump(const json& doc) { std::cout << doc.dump(2) << "\n"; }

// ---- spectrum -------------------------------------------------------------

struct SpectrumFlags {
    std::optional<double> delta_min, delta_max;
    std::optional<std::size_t> points;
    std::optional<double> g;
    bool overlay = false;
};

int cmd_spectrum(const Globals& g, const SpectrumFlags& f) {
    auto t0 = std::chrono::steady_clock::now();
    json in = load_config(g, "spectrum");
    reject_unknown(in, {"system", "delta_min_two_pi_mhz", "delta_max_two_pi_mhz", "points", "overlay",
                        "overlay_g_two_pi_mhz", "seed"});
    SystemParams sys = in.contains("system") ? system_params_from_json(in["system"], "/system", reference_params())
                                             : reference_params();
    if (f.g) sys = validate(SystemParams{sys.kappa1, sys.kappa2, sys.kappa_loss, sys.gamma,
                                         AngularRate::two_pi_mhz(*f.g), sys.omega_A, sys.cavity_detuning});
    double lo = f.delta_min.value_or(num(in, "delta_min_two_pi_mhz", -25.0));
    double hi = f.delta_max.value_or(num(in, "delta_max_two_pi_mhz", 25.0));
    std::size_t n = f.points.value_or(count(in, "points", 1001));
    bool overlay = f.overlay || flag(in, "overlay", false);
    std::vector<double> family{1.3, 1.9, 2.9, 4.3, 7.8};
    if (in.contains("overlay_g_two_pi_mhz")) {
        family.clear();
        const auto& arr = in["overlay_g_two_pi_mhz"];
        if (!arr.is_array()) throw ConfigError("/overlay_g_two_pi_mhz", "expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            if (!arr[i].is_number()) throw ConfigError(fmt::format("/overlay_g_two_pi_mhz/{}", i), "expected a number");
            family.push_back(arr[i].get<double>());
        }
    }
    std::uint64_t seed = resolve_seed(g, in);

    json doc;
    doc["system"] = to_json(sys);
    doc["delta_min_two_pi_mhz"] = lo;
    doc["delta_max_two_pi_mhz"] = hi;
    doc["points"] = n;
    doc["overlay"] = overlay;
    doc["overlay_g_two_pi_mhz"] = family;
    doc["seed"] = seed;
    if (g.dump_config) return print_dump(doc), ok;

    auto grid = detuning_grid(lo, hi, n);
    const auto grid_mhz = linspace(lo, hi, n);
    Run run("spectrum", g);
    Panel panel{"Transmission", "probe detuning (2π×MHz)", "normalized transmission", {}};
    auto emit = [&](const SystemParams& p, const std::string& name, const std::string& label) {
        // grid written as given, not round-tripped through rad/s
        auto values = normalized_spectrum(p, grid);
        run.add(name, to_csv(CsvTable{{"delta_two_pi_mhz", "transmission_normalized"}, {grid_mhz, values}}));
        panel.series.push_back(Series{label, grid_mhz, values});
    };
    if (overlay) {
        SystemParams empty = sys;
        empty.g = {};
        emit(empty, "spectrum_empty.csv", "g = 0");
        for (double gv : family) {
            SystemParams p = sys;
            p.g = AngularRate::two_pi_mhz(gv);
            emit(validate(p), fmt::format("spectrum_g{:.3f}.csv", gv), fmt::format("g = 2π×{} MHz", gv));
        }
    } else {
        emit(sys, "spectrum.csv", fmt::format("g = {}", format_two_pi_mhz(sys.g)));
    }
    if (g.plot) run.add("spectrum.svg", render_svg({panel}));
    run.commit(doc, seed, elapsed(t0));
    for (const auto& file : run.files()) std::cout << run.path(file.first).string() << "\n";
    return ok;
}

// ---- ringdown -------------------------------------------------------------

struct RingdownFlags {
    std::optional<double> t_min_ns, t_max_ns;
    std::optional<std::size_t> points;
    std::optional<std::string> mode;
    bool compare = false;
    bool triptych = false;
};

int cmd_ringdown(const Globals& g, const RingdownFlags& f) {
    auto t0 = std::chrono::steady_clock::now();
    json in = load_config(g, "ringdown");
    reject_unknown(in, {"ringdown", "t_min_ns", "t_max_ns", "points", "mode", "compare", "triptych",
                        "triptych_lifetimes_ns", "seed"});
    RingdownParams rp = ringdown_params(reference_params());
    if (in.contains("ringdown")) rp = ringdown_params_from_json(in["ringdown"], "/ringdown", rp);
    double tmin = f.t_min_ns.value_or(num(in, "t_min_ns", -50.0));
    double tmax = f.t_max_ns.value_or(num(in, "t_max_ns", 150.0));
    std::size_t n = f.points.value_or(count(in, "points", 2001));
    std::string mode = f.mode.value_or(str(in, "mode", "analytic"));
    if (mode != "analytic" && mode != "integrated" && mode != "both")
        throw ConfigError("/mode", "must be \"analytic\", \"integrated\" or \"both\"");
    bool compare = f.compare || flag(in, "compare", false);
    bool triptych = f.triptych || flag(in, "triptych", false);
    std::vector<double> lifetimes{18.4, 12.5, 7.3};
    if (in.contains("triptych_lifetimes_ns")) {
        const auto& arr = in["triptych_lifetimes_ns"];
        if (!arr.is_array() || arr.size() != 3) throw ConfigError("/triptych_lifetimes_ns", "expected 3 numbers");
        for (std::size_t i = 0; i < 3; ++i) {
            if (!arr[i].is_number()) throw ConfigError(fmt::format("/triptych_lifetimes_ns/{}", i), "expected a number");
            lifetimes[i] = arr[i].get<double>();
        }
    }
    if (n < 2 || !(tmax > tmin)) throw ConfigError("/points", "need points >= 2 and t_max_ns > t_min_ns");
    std::uint64_t seed = resolve_seed(g, in);

    json doc;
    doc["ringdown"] = to_json(rp);
    doc["t_min_ns"] = tmin;
    doc["t_max_ns"] = tmax;
    doc["points"] = n;
    doc["mode"] = mode;
    doc["compare"] = compare;
    doc["triptych"] = triptych;
    doc["triptych_lifetimes_ns"] = lifetimes;
    doc["seed"] = seed;
    if (g.dump_config) return print_dump(doc), ok;

    std::vector<double> t_s;
    for (double t : linspace(tmin, tmax, n)) t_s.push_back(t * 1e-9);
    Run run("ringdown", g);
    json report;

    auto traces = [&](const RingdownParams& p, const std::string& stem, const std::string& title) {
        Panel panel{title, "time (ns)", "reflected intensity / s0²", {}};
        std::optional<RingdownTrace> a, b;
        if (mode != "integrated" || compare) a = analytic_trace(p, t_s);
        if (mode != "analytic" || compare) b = integrate_ringdown(p, t_s);
        if (mode != "integrated") {
            auto tab = to_table(*a, p.s0);
            run.add(stem + ".csv", trace_csv(tab));
            panel.series.push_back(Series{"analytic", tab.t_ns, tab.intensity});
        }
        if (mode != "analytic") {
            auto tab = to_table(*b, p.s0);
            run.add(mode == "both" ? stem + "_integrated.csv" : stem + ".csv", trace_csv(tab));
            panel.series.push_back(Series{"integrated", tab.t_ns, tab.intensity});
        }
        json r;
        r["regime"] = to_string(classify_coupling(
            SystemParams{p.kappa1, p.kappa2, p.kappa_loss, AngularRate::two_pi_mhz(1.0), {}, {}, {}}).label);
        r["photon_lifetime_ns"] = photon_lifetime(p.kappa()) * 1e9;
        if (compare) r["max_relative_deviation"] = max_relative_deviation(*a, *b, p.s0);
        return std::pair{panel, r};
    };

    std::vector<Panel> panels;
    if (triptych) {
        const char* names[] = {"under", "critical", "over"};
        AngularRate loss = kappa_loss_from_critical_lifetime(lifetimes[1] * 1e-9, rp.kappa1);
        for (int i = 0; i < 3; ++i) {
            RingdownParams p = rp;
            p.kappa_loss = loss;
            p.kappa2 = kappa2_from_lifetime(lifetimes[i] * 1e-9, rp.kappa1, loss);
            p = validate(p);
            auto [panel, r] = traces(p, fmt::format("ringdown_{}", names[i]),
                                     fmt::format("{} (κ2 = {})", names[i], format_two_pi_mhz(p.kappa2)));
            r["kappa2_two_pi_mhz"] = p.kappa2.two_pi_mhz();
            report[names[i]] = r;
            panels.push_back(panel);
        }
    } else {
        auto [panel, r] = traces(rp, "ringdown", "Ring-down");
        report = r;
        panels.push_back(panel);
    }
    if (g.plot) run.add("ringdown.svg", render_svg(panels));
    run.commit(doc, seed, elapsed(t0));
    std::cout << report.dump(2) << "\n";
    return ok;
}

// ---- fit ------------------------------------------------------------------

struct FitFlags {
    std::optional<std::string> recipe, data, fixed;
    bool use_sigmas = false;
};

int cmd_fit(const Globals& g, const FitFlags& f) {
    auto t0 = std::chrono::steady_clock::now();
    json in = load_config(g, "fit");
    reject_unknown(in, {"recipe", "data", "fixed", "use_sigmas", "fit_center", "tail_start_ns", "tail_end_ns", "seed"});
    std::string recipe = f.recipe.value_or(str(in, "recipe", ""));
    std::string data = f.data.value_or(str(in, "data", ""));
    if (recipe != "lorentzian" && recipe != "rabi-g" && recipe != "exponential" && recipe != "ringdown-tail")
        throw ConfigError("/recipe", "must be lorentzian, rabi-g, exponential or ringdown-tail");
    if (data.empty()) throw ConfigError("/data", "data file required");
    SystemParams fixed = reference_params();
    if (f.fixed) {
        json fj;
        try {
            fj = json::parse(read_file(*f.fixed));
        } catch (const json::parse_error& e) {
            throw ConfigError("/fixed", e.what());
        }
        fixed = system_params_from_json(fj, "/fixed", fixed);
    } else if (in.contains("fixed")) {
        fixed = system_params_from_json(in["fixed"], "/fixed", fixed);
    }
    bool use_sigmas = f.use_sigmas || flag(in, "use_sigmas", false);
    bool fit_center = flag(in, "fit_center", false);
    std::optional<double> tail_start, tail_end;
    if (in.contains("tail_start_ns") && !in["tail_start_ns"].is_null()) tail_start = num(in, "tail_start_ns", 0);
    if (in.contains("tail_end_ns") && !in["tail_end_ns"].is_null()) tail_end = num(in, "tail_end_ns", 0);
    std::uint64_t seed = resolve_seed(g, in);

    json doc;
    doc["recipe"] = recipe;
    doc["data"] = data;
    doc["fixed"] = to_json(fixed);
    doc["use_sigmas"] = use_sigmas;
    doc["fit_center"] = fit_center;
    doc["tail_start_ns"] = tail_start ? json(*tail_start) : json(nullptr);
    doc["tail_end_ns"] = tail_end ? json(*tail_end) : json(nullptr);
    doc["seed"] = seed;
    if (g.dump_config) return print_dump(doc), ok;

    std::string text = read_file(data);
    FitResult result;
    if (recipe == "lorentzian") {
        result = fit_empty_cavity(parse_spectrum_csv(text), EmptyCavityOptions{fit_center, use_sigmas});
    } else if (recipe == "rabi-g") {
        RabiOptions opt;
        opt.use_sigmas = use_sigmas;
        result = fit_rabi_g(parse_spectrum_csv(text), fixed, opt);
    } else if (recipe == "exponential") {
        // t_ms,value[,sigma]
        CsvTable t = parse_csv(text);
        if (t.header.size() < 2 || t.header[0] != "t_ms") throw IoError("exponential data must have columns t_ms,value[,sigma]");
        std::vector<double> ts;
        for (double v : t.columns[0]) ts.push_back(v * 1e-3);
        std::vector<double> sig = (use_sigmas && t.columns.size() > 2) ? t.columns[2] : std::vector<double>{};
        result = fit_exponential_recovery(ts, t.columns[1], sig);
    } else {
        RingdownTrace trace = from_table(parse_trace_csv(text));
        double start = tail_start ? *tail_start * 1e-9 : 0.0;
        if (!tail_start) {
            // Default window from the fixed parameters' switch-off transient.
            auto win = tail_window(ringdown_params(fixed));
            start = win.first;
            if (!tail_end) tail_end = win.second * 1e9;
        }
        result = fit_ringdown_tail(trace, start,
                                   tail_end ? *tail_end * 1e-9 : std::numeric_limits<double>::infinity());
    }
    Run run("fit", g);
    run.input(data);
    json out = to_json(result);
    run.add("fit.json", out.dump(2) + "\n");
    run.commit(doc, seed, elapsed(t0));
    std::cout << out.dump(2) << "\n";
    if (!result.converged) {
        std::cerr << "fit did not converge: " << result.message << "\n";
        return numerical_error;
    }
    return ok;
}

// ---- mode-solve -----------------------------------------------------------

int cmd_mode_solve(const Globals& g) {
    auto t0 = std::chrono::steady_clock::now();
    json in = load_config(g, "mode-solve");
    reject_unknown(in, {"fiber", "geometry", "atom", "phi", "radial_panels", "outer_radius_factor", "seed"});
    FiberSpec fiber = default_fiber();
    if (in.contains("fiber")) fiber = fiber_from_json(in["fiber"], "/fiber", fiber);
    CavityGeometry geom;
    if (in.contains("geometry")) geom = geometry_from_json(in["geometry"], "/geometry", geom);
    AtomSpec atom = cesium_d2_cycling();
    if (in.contains("atom")) atom = atom_from_json(in["atom"], "/atom", atom);
    double phi = num(in, "phi", 1.0);
    if (!(phi >= 0 && phi <= 1)) throw ConfigError("/phi", "must lie in [0, 1]");
    ModeOptions mo;
    mo.radial_panels = static_cast<int>(count(in, "radial_panels", static_cast<std::size_t>(mo.radial_panels)));
    mo.outer_radius_factor = num(in, "outer_radius_factor", mo.outer_radius_factor);
    std::uint64_t seed = resolve_seed(g, in);

    json doc;
    doc["fiber"] = to_json(fiber);
    doc["geometry"] = to_json(geom);
    doc["atom"] = to_json(atom);
    doc["phi"] = phi;
    doc["radial_panels"] = mo.radial_panels;
    doc["outer_radius_factor"] = mo.outer_radius_factor;
    doc["seed"] = seed;
    if (g.dump_config) return print_dump(doc), ok;

    ModeSolution he, lp;
    try {
        he = solve_fundamental_mode(fiber, mo);
        lp = solve_lp01_mode(fiber, mo);
    } catch (const ModeSolverError& e) {
        throw ModeSolverError(fmt::format("{} (fiber: {})", e.what(), to_json(fiber).dump()));
    }
    double vmode = mode_volume(he, geom);
    AngularRate gest = coupling_rate(atom, vmode, phi);
    json out;
    out["n_eff"] = he.n_eff;
    out["effective_area_um2"] = he.effective_area * 1e12;
    out["v_mode_um3"] = vmode * 1e18;
    out["g_est_two_pi_mhz"] = gest.two_pi_mhz();
    out["v_number"] = he.v;
    out["numerical_aperture"] = fiber.numerical_aperture();
    out["u"] = he.u;
    out["w"] = he.w;
    out["truncation_error_um2"] = he.truncation_error * 1e12;
    out["gaussian_area_um2"] = gaussian_effective_area(fiber) * 1e12;
    json oracle;
    oracle["lp01_n_eff"] = lp.n_eff;
    oracle["relative_difference"] = std::abs(he.n_eff - lp.n_eff) / lp.n_eff;
    oracle["index_contrast"] = (fiber.n_core * fiber.n_core - fiber.n_clad * fiber.n_clad) / (2 * fiber.n_core * fiber.n_core);
    out["weak_guidance_check"] = oracle;
    out["warnings"] = he.warnings;

    Run run("mode-solve", g);
    run.add("mode.json", out.dump(2) + "\n");
    if (g.plot) {
        Series hs{"HE11", {}, {}}, ls{"LP01", {}, {}};
        for (double r : linspace(0, 3 * fiber.core_radius, 301)) {
            hs.x.push_back(r * 1e6);
            hs.y.push_back(he.intensity(r));
            ls.x.push_back(r * 1e6);
            ls.y.push_back(lp.intensity(r));
        }
        run.add("mode.svg", render_svg({Panel{"Mode intensity", "radius (µm)", "|φ|²", {hs, ls}}}));
    }
    run.commit(doc, seed, elapsed(t0));
    for (const auto& w : he.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << out.dump(2) << "\n";
    return ok;
}

// ---- experiment -----------------------------------------------------------

struct ExperimentFlags {
    std::optional<std::size_t> sequences;
    std::optional<double> load_probability;
    bool hold_sweep = false;
};

int cmd_experiment(const Globals& g, const ExperimentFlags& f) {
    auto t0 = std::chrono::steady_clock::now();
    json in = load_config(g, "experiment");
    reject_unknown(in, {"sequence", "sequences", "delta_min_two_pi_mhz", "delta_max_two_pi_mhz", "points",
                        "hold_sweep", "seed"});
    SequenceConfig sc;
    if (in.contains("sequence")) sc = sequence_config_from_json(in["sequence"], "/sequence", sc);
    if (f.load_probability) {
        sc.load_probability = *f.load_probability;
        sc = validate(sc);
    }
    std::size_t sequences = f.sequences.value_or(count(in, "sequences", 10000));
    double lo = num(in, "delta_min_two_pi_mhz", -25.0);
    double hi = num(in, "delta_max_two_pi_mhz", 25.0);
    std::size_t n = count(in, "points", 51);
    std::optional<json> sweep;
    if (in.contains("hold_sweep") && !in["hold_sweep"].is_null()) sweep = in["hold_sweep"];
    if (f.hold_sweep && !sweep) sweep = json::object();
    std::vector<double> holds_ms{0, 2, 4, 6, 8, 10, 15, 20, 30, 40};
    std::size_t per_point = 20000;
    int min_level = 5;
    if (sweep) {
        const json& s = *sweep;
        if (!s.is_object()) throw ConfigError("/hold_sweep", "expected an object");
        for (const auto& [key, _] : s.items())
            if (key != "hold_times_ms" && key != "sequences_per_point" && key != "min_level")
                throw ConfigError("/hold_sweep/" + key, "unknown field");
        if (s.contains("hold_times_ms")) {
            if (!s["hold_times_ms"].is_array()) throw ConfigError("/hold_sweep/hold_times_ms", "expected an array");
            holds_ms.clear();
            for (std::size_t i = 0; i < s["hold_times_ms"].size(); ++i) {
                const auto& v = s["hold_times_ms"][i];
                if (!v.is_number() || v.get<double>() < 0)
                    throw ConfigError(fmt::format("/hold_sweep/hold_times_ms/{}", i), "expected a non-negative number");
                holds_ms.push_back(v.get<double>());
            }
        }
        per_point = count(s, "sequences_per_point", per_point);
        if (s.contains("min_level")) {
            if (!s["min_level"].is_number_integer() || s["min_level"].get<int>() < 1 || s["min_level"].get<int>() > 6)
                throw ConfigError("/hold_sweep/min_level", "expected an integer in 1..6");
            min_level = s["min_level"].get<int>();
        }
    }
    std::uint64_t seed = g.seed ? *g.seed
                       : in.contains("seed") ? resolve_seed(g, in)
                       : (in.contains("sequence") && in["sequence"].contains("rng_seed")) ? sc.rng_seed
                       : resolve_seed(g, in);
    sc.rng_seed = seed;

    json doc;
    doc["sequence"] = to_json(sc);
    doc["sequences"] = sequences;
    doc["delta_min_two_pi_mhz"] = lo;
    doc["delta_max_two_pi_mhz"] = hi;
    doc["points"] = n;
    if (sweep)
        doc["hold_sweep"] = json{{"hold_times_ms", holds_ms}, {"sequences_per_point", per_point}, {"min_level", min_level}};
    else
        doc["hold_sweep"] = nullptr;
    doc["seed"] = seed;
    if (g.dump_config) return print_dump(doc), ok;

    auto grid = detuning_grid(lo, hi, n);
    auto records = run_experiment(sc, grid, sequences);
    Run run("experiment", g);

    std::string events;
    for (const auto& r : records) events += to_json(r).dump() + "\n";
    run.add("events.jsonl", std::move(events));

    auto spectra = accumulate_spectra(records, sc);
    Panel panel{"Per-level spectra", "probe detuning (2π×MHz)", "normalized transmission", {}};
    for (const auto& [level, s] : spectra) {
        run.add(fmt::format("spectrum_level{}.csv", level), spectrum_csv(s));
        panel.series.push_back(Series{fmt::format("level {}", level), s.deltas_two_pi_mhz(), s.values});
    }

    ExperimentSummary sum = summarize(records, sc);
    json js;
    js["sequences"] = sum.sequences;
    js["atoms_loaded"] = sum.atoms_loaded;
    if (sum.sequences == 0) js["note"] = "n=0: no sequences run";
    json levels = json::array();
    for (const auto& l : sum.levels) {
        json jl{{"level", l.level}, {"events", l.events}, {"occupancy", l.occupancy}};
        if (l.g_fit) {
            jl["g_two_pi_mhz"] = l.g_fit->estimates.empty() ? json(nullptr) : json(l.g_fit->value("g") / (2 * M_PI * 1e6));
            double sg = l.g_fit->uncertainty("g") / (2 * M_PI * 1e6);
            jl["g_sigma_two_pi_mhz"] = std::isfinite(sg) ? json(sg) : json(nullptr);
            jl["fit"] = to_json(*l.g_fit);
        } else {
            jl["g_two_pi_mhz"] = nullptr;
        }
        levels.push_back(jl);
    }
    js["levels"] = levels;
    js["P_vi"] = sum.levels.empty() ? 0.0 : sum.occupancy(6);

    if (sweep) {
        std::vector<double> holds;
        for (double h : holds_ms) holds.push_back(h * 1e-3);
        auto pts = hold_time_sweep(sc, holds, per_point, min_level);
        CsvTable t{{"t_ms", "value", "sigma"}, {{}, {}, {}}};
        json jp = json::array();
        for (const auto& p : pts) {
            jp.push_back(json{{"hold_time_ms", p.hold_time * 1e3}, {"mean_transmission", p.mean_transmission},
                              {"sem", p.sem}, {"events", p.events}, {"survival_fraction", p.survival_fraction}});
            if (p.events < 2) continue;
            t.columns[0].push_back(p.hold_time * 1e3);
            t.columns[1].push_back(p.mean_transmission);
            t.columns[2].push_back(p.sem);
        }
        run.add("hold_sweep.csv", to_csv(t));
        js["hold_sweep"] = jp;
        if (t.columns[0].size() >= 4) {
            auto fr = fit_exponential_recovery(t.columns[0], t.columns[1], t.columns[2]);
            // t_ms input: lifetime comes back in ms
            json jf = to_json(fr);
            js["hold_sweep_fit_time_unit"] = "ms";
            js["hold_sweep_fit"] = jf;
        }
    }
    run.add("summary.json", js.dump(2) + "\n");
    if (g.plot && !panel.series.empty()) run.add("spectra.svg", render_svg({panel}));
    run.commit(doc, seed, elapsed(t0));
    std::cout << js.dump(2) << "\n";
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fiber-cavity QED simulation and analysis"};
    app.set_version_flag("--version", tool_version);
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "JSON config or run manifest");
    app.add_option("--seed", g.seed, "RNG seed (recorded in the manifest)");
    app.add_flag("--plot", g.plot, "also write an SVG plot");
    app.add_option("--out", g.out_dir, "output directory");
    app.add_flag("--dump-config", g.dump_config, "print the resolved config and exit");

    SpectrumFlags sf;
    auto* spectrum = app.add_subcommand("spectrum", "steady-state transmission spectrum");
    spectrum->add_option("--delta-min", sf.delta_min, "grid start, 2π×MHz");
    spectrum->add_option("--delta-max", sf.delta_max, "grid end, 2π×MHz");
    spectrum->add_option("--points", sf.points, "grid points");
    spectrum->add_option("--g", sf.g, "coupling, 2π×MHz");
    spectrum->add_flag("--overlay", sf.overlay, "g = 0 plus the five-g family");

    RingdownFlags rf;
    auto* ringdown = app.add_subcommand("ringdown", "reflected intensity after switch-off");
    ringdown->add_option("--t-min", rf.t_min_ns, "ns");
    ringdown->add_option("--t-max", rf.t_max_ns, "ns");
    ringdown->add_option("--points", rf.points, "grid points");
    ringdown->add_option("--mode", rf.mode, "analytic | integrated | both");
    ringdown->add_flag("--compare", rf.compare, "report max deviation analytic vs integrated");
    ringdown->add_flag("--triptych", rf.triptych, "under / critical / over coupling");

    FitFlags ff;
    auto* fit = app.add_subcommand("fit", "fit a spectrum or trace");
    fit->add_option("--recipe", ff.recipe, "lorentzian | rabi-g | exponential | ringdown-tail");
    fit->add_option("--data", ff.data, "CSV input");
    fit->add_option("--fixed", ff.fixed, "SystemParams JSON with the fixed rates");
    fit->add_flag("--use-sigmas", ff.use_sigmas, "weight by the sigma column");

    auto* mode = app.add_subcommand("mode-solve", "fiber mode, mode volume and coupling estimate");

    ExperimentFlags ef;
    auto* experiment = app.add_subcommand("experiment", "Monte Carlo measurement sequences");
    experiment->alias("simulate");
    experiment->add_option("--sequences", ef.sequences, "number of sequences");
    experiment->add_option("--load-probability", ef.load_probability, "atom loading probability");
    experiment->add_flag("--hold-sweep", ef.hold_sweep, "also run the hold-time sweep");

    for (auto* sub : {spectrum, ringdown, fit, mode, experiment}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? ok : config_error;
    }

    try {
        if (*spectrum) return cmd_spectrum(g, sf);
        if (*ringdown) return cmd_ringdown(g, rf);
        if (*fit) return cmd_fit(g, ff);
        if (*mode) return cmd_mode_solve(g);
        if (*experiment) return cmd_experiment(g, ef);
    } catch (const ConfigError& e) {
        std::cerr << "config error at " << e.what() << "\n";
        return config_error;
    } catch (const ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return io_error;
    } catch (const NonFiniteOutput& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return numerical_error;
    } catch (const FitError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return numerical_error;
    } catch (const IntegrationError& e) {
        std::cerr << fmt::format("numerical error: {} (t = {} s)\n", e.what(), e.time);
        return numerical_error;
    } catch (const ModeSolverError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return numerical_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return numerical_error;
    }
    return ok;
}

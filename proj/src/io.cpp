#include "fcqed/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include <fmt/format.h>

namespace fcqed {

ConfigError::ConfigError(std::string ptr, const std::string& what)
    : std::runtime_error(fmt::format("{}: {}", ptr.empty() ? "/" : ptr, what)), pointer(std::move(ptr)) {}

namespace {

std::string child(const std::string& pointer, const std::string& key) {
    std::string escaped;
    for (char c : key) {
        if (c == '~') escaped += "~0";
        else if (c == '/') escaped += "~1";
        else escaped += c;
    }
    return pointer + "/" + escaped;
}

void require_object(const json& j, const std::string& pointer) {
    if (!j.is_object()) throw ConfigError(pointer, "expected an object");
}

void reject_unknown(const json& j, const std::string& pointer, std::initializer_list<const char*> known) {
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError(child(pointer, key), "unknown field");
    }
}

double number_at(const json& j, const std::string& pointer) {
    if (!j.is_number()) throw ConfigError(pointer, "expected a number");
    double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(pointer, "must be finite");
    return v;
}

void read_number(const json& j, const std::string& pointer, const char* key, double& out) {
    if (j.contains(key)) out = number_at(j[key], child(pointer, key));
}

void read_rate(const json& j, const std::string& pointer, const char* key, AngularRate& out) {
    if (j.contains(key)) out = rate_from_json(j[key], child(pointer, key));
}

void read_seed(const json& j, const std::string& pointer, const char* key, std::uint64_t& out) {
    if (!j.contains(key)) return;
    const json& v = j[key];
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        throw ConfigError(child(pointer, key), "expected a non-negative integer");
    out = v.get<std::uint64_t>();
}

template <class T, class F>
T checked(const std::string& pointer, F&& f) {
    try {
        return f();
    } catch (const ValidationError& e) {
        throw ConfigError(pointer, e.what());
    }
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

} // namespace

json rate_to_json(AngularRate rate) {
    json j;
    j["value"] = rate.rad_per_s();
    j["unit"] = "rad_per_s";
    return j;
}

AngularRate rate_from_json(const json& j, const std::string& pointer) {
    if (j.is_string()) {
        try {
            return parse_rate(j.get<std::string>());
        } catch (const std::exception& e) {
            throw ConfigError(pointer, e.what());
        }
    }
    require_object(j, pointer);
    reject_unknown(j, pointer, {"value", "unit"});
    if (!j.contains("value")) throw ConfigError(child(pointer, "value"), "missing");
    if (!j.contains("unit")) throw ConfigError(child(pointer, "unit"), "missing");
    double v = number_at(j["value"], child(pointer, "value"));
    const json& u = j["unit"];
    if (!u.is_string()) throw ConfigError(child(pointer, "unit"), "expected a string");
    auto unit = u.get<std::string>();
    if (unit == "rad_per_s") return AngularRate::rad_per_s(v);
    if (unit == "two_pi_mhz") return AngularRate::two_pi_mhz(v);
    throw ConfigError(child(pointer, "unit"), "unit must be \"rad_per_s\" or \"two_pi_mhz\"");
}

json to_json(const SystemParams& p) {
    json j;
    j["kappa1"] = rate_to_json(p.kappa1);
    j["kappa2"] = rate_to_json(p.kappa2);
    j["kappa_loss"] = rate_to_json(p.kappa_loss);
    j["gamma"] = rate_to_json(p.gamma);
    j["g"] = rate_to_json(p.g);
    j["cavity_detuning"] = rate_to_json(p.cavity_detuning);
    if (p.omega_A) j["omega_A"] = rate_to_json(*p.omega_A);
    return j;
}

SystemParams system_params_from_json(const json& j, const std::string& pointer, const SystemParams& defaults) {
    require_object(j, pointer);
    reject_unknown(j, pointer, {"kappa1", "kappa2", "kappa_loss", "gamma", "g", "cavity_detuning", "omega_A"});
    SystemParams p = defaults;
    read_rate(j, pointer, "kappa1", p.kappa1);
    read_rate(j, pointer, "kappa2", p.kappa2);
    read_rate(j, pointer, "kappa_loss", p.kappa_loss);
    read_rate(j, pointer, "gamma", p.gamma);
    read_rate(j, pointer, "g", p.g);
    read_rate(j, pointer, "cavity_detuning", p.cavity_detuning);
    if (j.contains("omega_A")) {
        if (j["omega_A"].is_null()) p.omega_A.reset();
        else p.omega_A = rate_from_json(j["omega_A"], child(pointer, "omega_A"));
    }
    return checked<SystemParams>(pointer, [&] { return validate(p); });
}

json to_json(const CavityGeometry& g) {
    return json{{"length", g.length}, {"effective_index", g.effective_index}};
}

CavityGeometry geometry_from_json(const json& j, const std::string& pointer, const CavityGeometry& defaults) {
    require_object(j, pointer);
    reject_unknown(j, pointer, {"length", "effective_index"});
    CavityGeometry g = defaults;
    read_number(j, pointer, "length", g.length);
    read_number(j, pointer, "effective_index", g.effective_index);
    return checked<CavityGeometry>(pointer, [&] { return validate(g); });
}

json to_json(const RingdownParams& p) {
    json j;
    j["kappa1"] = rate_to_json(p.kappa1);
    j["kappa2"] = rate_to_json(p.kappa2);
    j["kappa_loss"] = rate_to_json(p.kappa_loss);
    j["kappa_s"] = rate_to_json(p.kappa_s);
    j["s0"] = p.s0;
    j["omega0"] = rate_to_json(p.omega0);
    return j;
}

RingdownParams ringdown_params_from_json(const json& j, const std::string& pointer, const RingdownParams& defaults) {
    require_object(j, pointer);
    reject_unknown(j, pointer, {"kappa1", "kappa2", "kappa_loss", "kappa_s", "s0", "omega0"});
    RingdownParams p = defaults;
    read_rate(j, pointer, "kappa1", p.kappa1);
    read_rate(j, pointer, "kappa2", p.kappa2);
    read_rate(j, pointer, "kappa_loss", p.kappa_loss);
    read_rate(j, pointer, "kappa_s", p.kappa_s);
    read_number(j, pointer, "s0", p.s0);
    read_rate(j, pointer, "omega0", p.omega0);
    return checked<RingdownParams>(pointer, [&] { return validate(p); });
}

json to_json(const FiberSpec& f) {
    return json{{"core_radius", f.core_radius}, {"n_core", f.n_core}, {"n_clad", f.n_clad}, {"wavelength", f.wavelength}};
}

FiberSpec fiber_from_json(const json& j, const std::string& pointer, const FiberSpec& defaults) {
    require_object(j, pointer);
    reject_unknown(j, pointer, {"core_radius", "n_core", "n_clad", "wavelength", "numerical_aperture"});
    FiberSpec f = defaults;
    read_number(j, pointer, "core_radius", f.core_radius);
    read_number(j, pointer, "wavelength", f.wavelength);
    if (j.contains("numerical_aperture")) {
        if (j.contains("n_core") || j.contains("n_clad"))
            throw ConfigError(child(pointer, "numerical_aperture"), "give either numerical_aperture or n_core/n_clad");
        double na = number_at(j["numerical_aperture"], child(pointer, "numerical_aperture"));
        if (!(na > 0)) throw ConfigError(child(pointer, "numerical_aperture"), "must be positive");
        f = fiber_from_na(f.core_radius, na, f.wavelength);
    }
    read_number(j, pointer, "n_core", f.n_core);
    read_number(j, pointer, "n_clad", f.n_clad);
    return checked<FiberSpec>(pointer, [&] { return validate(f); });
}

json to_json(const AtomSpec& a) {
    return json{{"dipole_moment", a.dipole_moment},
                {"transition_frequency", rate_to_json(a.transition_frequency)}};
}

AtomSpec atom_from_json(const json& j, const std::string& pointer, const AtomSpec& defaults) {
    require_object(j, pointer);
    reject_unknown(j, pointer, {"dipole_moment", "transition_frequency"});
    AtomSpec a = defaults;
    read_number(j, pointer, "dipole_moment", a.dipole_moment);
    read_rate(j, pointer, "transition_frequency", a.transition_frequency);
    return checked<AtomSpec>(pointer, [&] { return validate(a); });
}

json to_json(const ProbeConfig& p) {
    return json{{"power", p.power}, {"duration", p.duration}, {"detuning", rate_to_json(p.detuning)},
                {"wavelength", p.wavelength}};
}

ProbeConfig probe_from_json(const json& j, const std::string& pointer, const ProbeConfig& defaults) {
    require_object(j, pointer);
    reject_unknown(j, pointer, {"power", "duration", "detuning", "wavelength"});
    ProbeConfig p = defaults;
    read_number(j, pointer, "power", p.power);
    read_number(j, pointer, "duration", p.duration);
    read_rate(j, pointer, "detuning", p.detuning);
    read_number(j, pointer, "wavelength", p.wavelength);
    return checked<ProbeConfig>(pointer, [&] { return validate(p); });
}

json to_json(const SequenceConfig& c) {
    json j;
    j["cavity"] = to_json(c.cavity);
    j["load_probability"] = c.load_probability;
    j["g_max"] = rate_to_json(c.g_max);
    j["detection"] = to_json(c.detection);
    j["spectroscopy"] = to_json(c.spectroscopy);
    j["background_rate"] = c.background_rate;
    j["detector_efficiency"] = c.detector_efficiency;
    j["trap_lifetime"] = c.trap_lifetime;
    j["hold_time"] = c.hold_time;
    j["rng_seed"] = c.rng_seed;
    j["bin_edges"] = c.bin_edges;
    j["loading"] = c.loading == LoadingMode::SingleAtom ? "single_atom" : "poisson_number";
    j["drift_amplitude"] = c.drift_amplitude;
    j["drift_period"] = c.drift_period;
    return j;
}

SequenceConfig sequence_config_from_json(const json& j, const std::string& pointer, const SequenceConfig& defaults) {
    require_object(j, pointer);
    reject_unknown(j, pointer,
                   {"cavity", "load_probability", "g_max", "detection", "spectroscopy", "background_rate",
                    "detector_efficiency", "trap_lifetime", "hold_time", "rng_seed", "bin_edges", "loading",
                    "drift_amplitude", "drift_period"});
    SequenceConfig c = defaults;
    if (j.contains("cavity")) c.cavity = system_params_from_json(j["cavity"], child(pointer, "cavity"), c.cavity);
    read_number(j, pointer, "load_probability", c.load_probability);
    read_rate(j, pointer, "g_max", c.g_max);
    if (j.contains("detection"))
        c.detection = probe_from_json(j["detection"], child(pointer, "detection"), c.detection);
    if (j.contains("spectroscopy"))
        c.spectroscopy = probe_from_json(j["spectroscopy"], child(pointer, "spectroscopy"), c.spectroscopy);
    read_number(j, pointer, "background_rate", c.background_rate);
    read_number(j, pointer, "detector_efficiency", c.detector_efficiency);
    read_number(j, pointer, "trap_lifetime", c.trap_lifetime);
    read_number(j, pointer, "hold_time", c.hold_time);
    read_seed(j, pointer, "rng_seed", c.rng_seed);
    if (j.contains("bin_edges")) {
        auto ptr = child(pointer, "bin_edges");
        const json& e = j["bin_edges"];
        if (!e.is_array() || e.size() != c.bin_edges.size()) throw ConfigError(ptr, "expected an array of 5 numbers");
        for (std::size_t i = 0; i < c.bin_edges.size(); ++i)
            c.bin_edges[i] = number_at(e[i], ptr + "/" + std::to_string(i));
    }
    if (j.contains("loading")) {
        auto ptr = child(pointer, "loading");
        std::string mode = j["loading"].is_string() ? j["loading"].get<std::string>() : "";
        if (mode == "single_atom") c.loading = LoadingMode::SingleAtom;
        else if (mode == "poisson_number") c.loading = LoadingMode::PoissonNumber;
        else throw ConfigError(ptr, "must be \"single_atom\" or \"poisson_number\"");
    }
    read_number(j, pointer, "drift_amplitude", c.drift_amplitude);
    read_number(j, pointer, "drift_period", c.drift_period);
    return checked<SequenceConfig>(pointer, [&] { return validate(c); });
}

json to_json(const FitResult& r) {
    json j;
    j["names"] = r.names;
    j["units"] = r.units;
    json est = json::array(), unc = json::array();
    for (double v : r.estimates) est.push_back(finite_or_null(v));
    for (double v : r.uncertainties) unc.push_back(finite_or_null(v));
    j["estimates"] = est;
    j["uncertainties"] = unc;
    j["residual_norm"] = finite_or_null(r.residual_norm);
    j["converged"] = r.converged;
    j["degenerate"] = r.degenerate;
    j["iterations"] = r.iterations;
    j["message"] = r.message;
    return j;
}

json to_json(const EventRecord& e) {
    json j;
    j["index"] = e.index;
    j["atom_present"] = e.atom_present;
    j["atoms"] = e.atoms;
    j["local_g_two_pi_mhz"] = e.local_g.two_pi_mhz();
    j["detection_counts"] = e.detection_counts;
    j["normalized_detection"] = e.normalized_detection;
    j["level"] = e.level;
    json spec = json::array();
    for (const auto& s : e.spectroscopy) spec.push_back(json{{"delta_two_pi_mhz", s.detuning.two_pi_mhz()}, {"counts", s.counts}});
    j["spectroscopy"] = spec;
    j["survived_hold"] = e.survived_hold;
    return j;
}

std::string format_double(double v) {
    if (!std::isfinite(v)) throw NonFiniteOutput(fmt::format("refusing to write non-finite value {}", v));
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        auto b = cell.find_first_not_of(" \t\r");
        auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
    double v = 0.0;
    auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
        throw IoError(fmt::format("line {}, column {}: not a number: '{}'", row, col + 1, cell));
    if (!std::isfinite(v)) throw IoError(fmt::format("line {}, column {}: non-finite value", row, col + 1));
    return v;
}

} // namespace

std::string to_csv(const CsvTable& table) {
    std::string out;
    for (std::size_t c = 0; c < table.header.size(); ++c) out += (c ? "," : "") + table.header[c];
    out += '\n';
    if (table.columns.size() != table.header.size()) throw IoError("column count does not match header");
    std::size_t rows = table.columns.empty() ? 0 : table.columns.front().size();
    for (const auto& col : table.columns)
        if (col.size() != rows) throw IoError("ragged columns");
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            if (c) out += ',';
            out += format_double(table.columns[c][r]);
        }
        out += '\n';
    }
    return out;
}

CsvTable parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    CsvTable t;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (t.header.empty()) {
            t.header = split_line(line);
            t.columns.assign(t.header.size(), {});
            continue;
        }
        auto cells = split_line(line);
        if (cells.size() != t.header.size())
            throw IoError(fmt::format("line {}: expected {} columns, got {}", lineno, t.header.size(), cells.size()));
        for (std::size_t c = 0; c < cells.size(); ++c) t.columns[c].push_back(parse_cell(cells[c], lineno, c));
    }
    if (t.header.empty()) throw IoError("missing header row");
    return t;
}

std::string spectrum_csv(const Spectrum& s) {
    CsvTable t;
    t.header = {"delta_two_pi_mhz", "transmission_normalized"};
    t.columns = {s.deltas_two_pi_mhz(), s.values};
    if (s.has_sigmas()) {
        t.header.push_back("sigma");
        t.columns.push_back(s.sigmas);
    }
    return to_csv(t);
}

Spectrum parse_spectrum_csv(const std::string& text) {
    CsvTable t = parse_csv(text);
    bool with_sigma = t.header.size() == 3 && t.header[2] == "sigma";
    if (t.header.size() < 2 || t.header[0] != "delta_two_pi_mhz" || t.header[1] != "transmission_normalized" ||
        (t.header.size() == 3 && !with_sigma) || t.header.size() > 3)
        throw IoError("spectrum CSV header must be delta_two_pi_mhz,transmission_normalized[,sigma]");
    Spectrum s;
    for (double d : t.columns[0]) s.deltas.push_back(AngularRate::two_pi_mhz(d));
    s.values = t.columns[1];
    if (with_sigma) s.sigmas = t.columns[2];
    try {
        return validate(s);
    } catch (const ValidationError& e) {
        throw IoError(e.what());
    }
}

TraceTable to_table(const RingdownTrace& trace, double s0) {
    TraceTable t;
    double norm = s0 * s0;
    for (double time : trace.times) t.t_ns.push_back(time * 1e9);
    for (double v : trace.intensities) t.intensity.push_back(v / norm);
    return t;
}

RingdownTrace from_table(const TraceTable& table) {
    RingdownTrace r;
    for (double t : table.t_ns) r.times.push_back(t * 1e-9);
    r.intensities = table.intensity;
    return r;
}

std::string trace_csv(const TraceTable& t) {
    return to_csv(CsvTable{{"t_ns", "intensity_normalized"}, {t.t_ns, t.intensity}});
}

TraceTable parse_trace_csv(const std::string& text) {
    CsvTable t = parse_csv(text);
    if (t.header != std::vector<std::string>{"t_ns", "intensity_normalized"})
        throw IoError("trace CSV header must be t_ns,intensity_normalized");
    TraceTable out{t.columns[0], t.columns[1]};
    for (std::size_t i = 1; i < out.t_ns.size(); ++i)
        if (!(out.t_ns[i] > out.t_ns[i - 1])) throw IoError("trace times must be strictly increasing");
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError(fmt::format("error reading '{}'", path.string()));
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(fmt::format("cannot write '{}'", tmp.string()));
        out << content;
        out.flush();
        if (!out) throw IoError(fmt::format("error writing '{}'", tmp.string()));
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError(fmt::format("cannot rename onto '{}'", path.string()));
    }
}

} // namespace fcqed

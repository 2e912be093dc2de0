// io.hpp - JSON (de)serialization of the domain types, CSV tables and
// atomic file output. Rates in JSON are {"value": x, "unit": "rad_per_s" |
// "two_pi_mhz"}; they are emitted in rad_per_s so that a dumped config
// reads back to the identical double.

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "fcqed/experiment.hpp"
#include "fcqed/fiber_mode.hpp"
#include "fcqed/fit.hpp"
#include "fcqed/ringdown.hpp"
#include "fcqed/units.hpp"

namespace fcqed {

using json = nlohmann::ordered_json;

// Schema violation; `pointer` is the JSON pointer of the offending value.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string pointer, const std::string& what);
    std::string pointer;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised when a NaN or infinity would be written to an output file.
class NonFiniteOutput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

json rate_to_json(AngularRate rate);
AngularRate rate_from_json(const json& j, const std::string& pointer);

json to_json(const SystemParams& p);
// Fields absent from `j` keep their value from `defaults`.
SystemParams system_params_from_json(const json& j, const std::string& pointer, const SystemParams& defaults = {});

json to_json(const CavityGeometry& g);
CavityGeometry geometry_from_json(const json& j, const std::string& pointer, const CavityGeometry& defaults = {});

json to_json(const RingdownParams& p);
RingdownParams ringdown_params_from_json(const json& j, const std::string& pointer, const RingdownParams& defaults);

json to_json(const FiberSpec& f);
FiberSpec fiber_from_json(const json& j, const std::string& pointer, const FiberSpec& defaults);

json to_json(const AtomSpec& a);
AtomSpec atom_from_json(const json& j, const std::string& pointer, const AtomSpec& defaults);

json to_json(const ProbeConfig& p);
ProbeConfig probe_from_json(const json& j, const std::string& pointer, const ProbeConfig& defaults);

json to_json(const SequenceConfig& c);
SequenceConfig sequence_config_from_json(const json& j, const std::string& pointer, const SequenceConfig& defaults);

// FitResult: names/units/estimates/uncertainties/residual_norm/converged/...
// Non-finite uncertainties are emitted as null.
json to_json(const FitResult& r);
json to_json(const EventRecord& e);

// Shortest representation that parses back to the same double.
std::string format_double(double v);

// Spectrum CSV: delta_two_pi_mhz,transmission_normalized[,sigma]
std::string spectrum_csv(const Spectrum& s);
Spectrum parse_spectrum_csv(const std::string& text);

// Trace CSV: t_ns,intensity_normalized (intensity / s0^2).
struct TraceTable {
    std::vector<double> t_ns;
    std::vector<double> intensity;
};
TraceTable to_table(const RingdownTrace& trace, double s0 = 1.0);
RingdownTrace from_table(const TraceTable& table);
std::string trace_csv(const TraceTable& t);
TraceTable parse_trace_csv(const std::string& text);

// Generic numeric table with a header row.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;
};
std::string to_csv(const CsvTable& table);
CsvTable parse_csv(const std::string& text);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

} // namespace fcqed

// experiment.hpp - Monte Carlo model of the measurement sequence: atom
// loading, position-dependent coupling, detection-probe classification,
// spectroscopy-probe photon counting and hold-time survival.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "fcqed/fit.hpp"
#include "fcqed/units.hpp"

namespace fcqed {

using Rng = std::mt19937_64;

// Independent, reproducible stream for one sequence.
Rng sequence_rng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream = 0);

struct ProbeConfig {
    double power = 0.8e-12;     // W
    double duration = 2e-3;     // s
    AngularRate detuning;       // omega_P - omega_A
    double wavelength = 852.3e-9;
};

enum class LoadingMode {
    SingleAtom,    // Bernoulli(load_probability): zero or one atom
    PoissonNumber  // Poisson atom number with P(n >= 1) = load_probability
};

struct SequenceConfig {
    SystemParams cavity = reference_params();  // g is replaced per event
    double load_probability = 0.15;
    AngularRate g_max = AngularRate::two_pi_mhz(7.8);
    ProbeConfig detection{0.8e-12, 2e-3, {}, 852.3e-9};
    ProbeConfig spectroscopy{0.4e-12, 5e-3, {}, 852.3e-9};
    double background_rate = 1e4;       // counts/s, dark counts included
    double detector_efficiency = 0.3;   // probe photons leaving the cavity -> counts
    double trap_lifetime = 11e-3;       // s
    double hold_time = 0.0;             // s, between detection and spectroscopy
    std::uint64_t rng_seed = 1;
    std::array<double, 5> bin_edges{1.0 / 6, 2.0 / 6, 3.0 / 6, 4.0 / 6, 5.0 / 6};
    LoadingMode loading = LoadingMode::SingleAtom;
    // Slow multiplicative drift of the detected probe power, applied to the
    // counts but not to the normalization.
    double drift_amplitude = 0.0;
    double drift_period = 1000.0;  // sequences
};

SequenceConfig validate(const SequenceConfig& config);
ProbeConfig validate(const ProbeConfig& probe);

// Loading probability proportional to the loading time, saturating at 1.
double load_probability_from_loading_time(double loading_time, double probability_per_second);

// g = g_max |cos phi| with phi uniform on [0, pi): trap sites sample the
// phase of the cavity standing wave uniformly.
AngularRate sample_local_g(AngularRate g_max, Rng& rng);

// Photons per second, P / (hbar omega).
double photon_flux(double power, double wavelength);

// efficiency * flux * transmission(delta) + background.
double expected_count_rate(const SystemParams& params, const ProbeConfig& probe, double background_rate,
                           double detector_efficiency);

struct SpectroscopyCount {
    AngularRate detuning;
    std::int64_t counts = 0;
};

struct EventRecord {
    std::uint64_t index = 0;
    bool atom_present = false;
    int atoms = 0;
    AngularRate local_g;  // effective coupling during detection
    std::int64_t detection_counts = 0;
    double normalized_detection = 0.0;
    int level = 1;
    std::vector<SpectroscopyCount> spectroscopy;
    bool survived_hold = false;
};

// Level 1 (least reduction, above the top edge) ... level 6 (below the lowest edge).
int classify_level(double normalized_detection, std::span<const double> bin_edges);

// Background and empty-cavity signal counts expected for one probe pulse.
struct ProbeNormalization {
    double background_counts = 0.0;
    double empty_signal_counts = 0.0;

    double normalize(double counts) const { return (counts - background_counts) / empty_signal_counts; }
};

ProbeNormalization probe_normalization(const SequenceConfig& config, const ProbeConfig& probe);

EventRecord run_sequence(const SequenceConfig& config, std::span<const AngularRate> spectroscopy_detunings, Rng& rng,
                         std::uint64_t index = 0);

// Sequences 0..n-1, each on its own stream sequence_rng(seed, index).
std::vector<EventRecord> run_experiment(const SequenceConfig& config, std::span<const AngularRate> spectroscopy_detunings,
                                        std::size_t sequences);

// Per-level mean normalized spectroscopy transmission with standard error of
// the mean. Levels without events are absent.
std::map<int, Spectrum> accumulate_spectra(std::span<const EventRecord> records, const SequenceConfig& config);

struct LevelSummary {
    int level = 0;
    std::size_t events = 0;
    double occupancy = 0.0;
    std::optional<FitResult> g_fit;
};

struct ExperimentSummary {
    std::size_t sequences = 0;
    std::size_t atoms_loaded = 0;
    std::vector<LevelSummary> levels;  // always 6 entries

    double occupancy(int level) const { return levels.at(static_cast<std::size_t>(level - 1)).occupancy; }
};

// Occupancies per level and a weighted single-parameter g fit of every
// non-empty level spectrum.
ExperimentSummary summarize(std::span<const EventRecord> records, const SequenceConfig& config);

struct HoldSweepPoint {
    double hold_time = 0.0;
    double mean_transmission = 0.0;  // on-resonance normalized spectroscopy transmission
    double sem = 0.0;
    std::size_t events = 0;          // selected events (level >= min_level)
    double survival_fraction = 0.0;  // among loaded atoms
};

// On-resonance spectroscopy after a variable hold time, averaged over events
// classified at level >= min_level.
std::vector<HoldSweepPoint> hold_time_sweep(const SequenceConfig& config, std::span<const double> hold_times,
                                            std::size_t sequences_per_point, int min_level = 5);

} // namespace fcqed

#include "fcqed/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "fcqed/cavity.hpp"

namespace fcqed {

namespace {

std::int64_t poisson(double mean, Rng& rng)
{
    if (!(mean > 0))
        return 0;
    std::poisson_distribution<std::int64_t> dist(mean);
    return dist(rng);
}

bool bernoulli(double p, Rng& rng)
{
    if (p <= 0)
        return false;
    if (p >= 1)
        return true;
    return std::bernoulli_distribution(p)(rng);
}

AngularRate effective_coupling(std::span<const AngularRate> gs)
{
    double sum = 0.0;
    for (auto g : gs)
        sum += g.rad_per_s() * g.rad_per_s();
    return AngularRate::rad_per_s(std::sqrt(sum));
}

double drift_factor(const SequenceConfig& c, std::uint64_t index)
{
    if (c.drift_amplitude == 0.0)
        return 1.0;
    return 1.0 + c.drift_amplitude * std::sin(constants::two_pi * static_cast<double>(index) / c.drift_period);
}

} // namespace

Rng sequence_rng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

ProbeConfig validate(const ProbeConfig& p)
{
    if (!(p.power > 0) || !std::isfinite(p.power))
        throw ValidationError("probe power must be positive");
    if (!(p.duration > 0) || !std::isfinite(p.duration))
        throw ValidationError("probe duration must be positive");
    if (!(p.wavelength > 0) || !std::isfinite(p.wavelength))
        throw ValidationError("probe wavelength must be positive");
    if (!std::isfinite(p.detuning.rad_per_s()))
        throw ValidationError("probe detuning must be finite");
    return p;
}

SequenceConfig validate(const SequenceConfig& c)
{
    validate(c.cavity);
    validate(c.detection);
    validate(c.spectroscopy);
    if (!(c.load_probability >= 0 && c.load_probability <= 1))
        throw ValidationError("load_probability must lie in [0, 1]");
    if (!(c.g_max.rad_per_s() >= 0) || !std::isfinite(c.g_max.rad_per_s()))
        throw ValidationError("g_max must be non-negative");
    if (!(c.background_rate >= 0) || !std::isfinite(c.background_rate))
        throw ValidationError("background_rate must be non-negative");
    if (!(c.detector_efficiency > 0 && c.detector_efficiency <= 1))
        throw ValidationError("detector_efficiency must lie in (0, 1]");
    if (!(c.trap_lifetime > 0))
        throw ValidationError("trap_lifetime must be positive");
    if (!(c.hold_time >= 0) || !std::isfinite(c.hold_time))
        throw ValidationError("hold_time must be non-negative");
    for (std::size_t i = 0; i < c.bin_edges.size(); ++i) {
        if (!(c.bin_edges[i] >= 0 && c.bin_edges[i] <= 1))
            throw ValidationError("bin edges must lie in [0, 1]");
        if (i > 0 && !(c.bin_edges[i] > c.bin_edges[i - 1]))
            throw ValidationError("bin edges must be strictly increasing");
    }
    if (!(std::abs(c.drift_amplitude) < 1))
        throw ValidationError("drift_amplitude must lie in (-1, 1)");
    if (!(c.drift_period > 0))
        throw ValidationError("drift_period must be positive");
    return c;
}

double load_probability_from_loading_time(double loading_time, double probability_per_second)
{
    if (!(loading_time >= 0) || !(probability_per_second >= 0))
        throw ValidationError("loading time and rate must be non-negative");
    return std::min(1.0, loading_time * probability_per_second);
}

AngularRate sample_local_g(AngularRate g_max, Rng& rng)
{
    if (g_max.rad_per_s() < 0)
        throw ValidationError("g_max must be non-negative");
    std::uniform_real_distribution<double> phase(0.0, std::numbers::pi);
    return g_max * std::abs(std::cos(phase(rng)));
}

double photon_flux(double power, double wavelength)
{
    return power * wavelength / (constants::h * constants::c);
}

double expected_count_rate(const SystemParams& params, const ProbeConfig& probe, double background_rate,
                           double detector_efficiency)
{
    const double flux = photon_flux(probe.power, probe.wavelength);
    return detector_efficiency * flux * transmission(params, probe.detuning) + background_rate;
}

int classify_level(double normalized_detection, std::span<const double> bin_edges)
{
    for (std::size_t i = 1; i < bin_edges.size(); ++i)
        if (!(bin_edges[i] > bin_edges[i - 1]))
            throw ValidationError("bin edges must be strictly increasing");
    // Count edges strictly above the value: 0 -> level 1 ... 5 -> level 6.
    int above = 0;
    for (double e : bin_edges)
        if (normalized_detection < e)
            ++above;
    return 1 + above;
}

ProbeNormalization probe_normalization(const SequenceConfig& config, const ProbeConfig& probe)
{
    SystemParams empty = config.cavity;
    empty.g = AngularRate{};
    ProbeConfig on_resonance = probe;
    on_resonance.detuning = AngularRate{};
    ProbeNormalization n;
    n.background_counts = config.background_rate * probe.duration;
    n.empty_signal_counts = (expected_count_rate(empty, on_resonance, 0.0, config.detector_efficiency)) * probe.duration;
    if (!(n.empty_signal_counts > 0))
        throw ValidationError("empty-cavity probe signal must be positive");
    return n;
}

EventRecord run_sequence(const SequenceConfig& config, std::span<const AngularRate> detunings, Rng& rng,
                         std::uint64_t index)
{
    EventRecord ev;
    ev.index = index;

    std::vector<AngularRate> gs;
    if (config.loading == LoadingMode::SingleAtom) {
        if (bernoulli(config.load_probability, rng))
            gs.push_back(sample_local_g(config.g_max, rng));
    } else {
        const double p = std::min(config.load_probability, 1.0 - 1e-12);
        const auto n = poisson(-std::log1p(-p), rng);
        for (std::int64_t i = 0; i < n; ++i)
            gs.push_back(sample_local_g(config.g_max, rng));
    }
    ev.atoms = static_cast<int>(gs.size());
    ev.atom_present = !gs.empty();
    ev.local_g = effective_coupling(gs);

    const double drift = drift_factor(config, index);
    SystemParams params = config.cavity;
    params.g = ev.local_g;

    const auto det_norm = probe_normalization(config, config.detection);
    const double det_rate = drift * expected_count_rate(params, config.detection, 0.0, config.detector_efficiency)
                            + config.background_rate;
    ev.detection_counts = poisson(det_rate * config.detection.duration, rng);
    ev.normalized_detection = det_norm.normalize(static_cast<double>(ev.detection_counts));
    ev.level = classify_level(ev.normalized_detection, config.bin_edges);

    const double survive_p = std::exp(-config.hold_time / config.trap_lifetime);
    std::vector<AngularRate> kept;
    for (auto g : gs)
        if (bernoulli(survive_p, rng))
            kept.push_back(g);
    ev.survived_hold = ev.atom_present && kept.size() == gs.size();
    params.g = effective_coupling(kept);

    ev.spectroscopy.reserve(detunings.size());
    for (auto d : detunings) {
        ProbeConfig probe = config.spectroscopy;
        probe.detuning = d;
        const double rate = drift * expected_count_rate(params, probe, 0.0, config.detector_efficiency)
                            + config.background_rate;
        ev.spectroscopy.push_back({d, poisson(rate * probe.duration, rng)});
    }
    return ev;
}

std::vector<EventRecord> run_experiment(const SequenceConfig& config, std::span<const AngularRate> detunings,
                                        std::size_t sequences)
{
    const auto c = validate(config);
    std::vector<EventRecord> out;
    out.reserve(sequences);
    for (std::size_t i = 0; i < sequences; ++i) {
        auto rng = sequence_rng(c.rng_seed, i);
        out.push_back(run_sequence(c, detunings, rng, i));
    }
    return out;
}

std::map<int, Spectrum> accumulate_spectra(std::span<const EventRecord> records, const SequenceConfig& config)
{
    std::map<int, Spectrum> out;
    if (records.empty())
        return out;
    const auto norm = probe_normalization(config, config.spectroscopy);
    const std::size_t nd = records.front().spectroscopy.size();
    for (const auto& r : records) {
        if (r.spectroscopy.size() != nd)
            throw ValidationError("records do not share a spectroscopy detuning grid");
        for (std::size_t k = 0; k < nd; ++k)
            if (r.spectroscopy[k].detuning != records.front().spectroscopy[k].detuning)
                throw ValidationError("records do not share a spectroscopy detuning grid");
    }

    for (int level = 1; level <= 6; ++level) {
        std::vector<const EventRecord*> sel;
        for (const auto& r : records)
            if (r.level == level)
                sel.push_back(&r);
        if (sel.empty() || nd == 0)
            continue;
        const auto n = static_cast<double>(sel.size());
        Spectrum s;
        for (std::size_t k = 0; k < nd; ++k) {
            double sum = 0.0, sumsq = 0.0, counts = 0.0;
            for (const auto* r : sel) {
                const auto c = static_cast<double>(r->spectroscopy[k].counts);
                const double v = norm.normalize(c);
                sum += v;
                sumsq += v * v;
                counts += c;
            }
            const double mean = sum / n;
            double sem = 0.0;
            if (sel.size() >= 2)
                sem = std::sqrt(std::max(sumsq - n * mean * mean, 0.0) / (n - 1.0) / n);
            if (!(sem > 0))  // single event or identical counts: Poisson estimate
                sem = std::sqrt(std::max(counts, 1.0)) / (n * norm.empty_signal_counts);
            s.deltas.push_back(records.front().spectroscopy[k].detuning);
            s.values.push_back(mean);
            s.sigmas.push_back(sem);
        }
        out.emplace(level, std::move(s));
    }
    return out;
}

ExperimentSummary summarize(std::span<const EventRecord> records, const SequenceConfig& config)
{
    ExperimentSummary sum;
    sum.sequences = records.size();
    for (const auto& r : records)
        sum.atoms_loaded += r.atom_present ? 1 : 0;
    const auto spectra = accumulate_spectra(records, config);
    for (int level = 1; level <= 6; ++level) {
        LevelSummary ls;
        ls.level = level;
        ls.events = static_cast<std::size_t>(
            std::count_if(records.begin(), records.end(), [&](const auto& r) { return r.level == level; }));
        ls.occupancy = records.empty() ? 0.0 : static_cast<double>(ls.events) / static_cast<double>(records.size());
        if (auto it = spectra.find(level); it != spectra.end()) {
            RabiOptions opt;
            opt.use_sigmas = true;
            ls.g_fit = fit_rabi_g(it->second, config.cavity, opt);
        }
        sum.levels.push_back(std::move(ls));
    }
    return sum;
}

std::vector<HoldSweepPoint> hold_time_sweep(const SequenceConfig& config, std::span<const double> hold_times,
                                            std::size_t sequences_per_point, int min_level)
{
    auto base = validate(config);
    const auto norm = probe_normalization(base, base.spectroscopy);
    const std::array<AngularRate, 1> on_resonance{AngularRate{}};
    std::vector<HoldSweepPoint> out;
    for (std::size_t p = 0; p < hold_times.size(); ++p) {
        SequenceConfig c = base;
        c.hold_time = hold_times[p];
        validate(c);
        double sum = 0.0, sumsq = 0.0;
        std::size_t n = 0, loaded = 0, survived = 0;
        for (std::size_t i = 0; i < sequences_per_point; ++i) {
            auto rng = sequence_rng(c.rng_seed, i, p + 1);
            const auto ev = run_sequence(c, on_resonance, rng, i);
            if (ev.atom_present) {
                ++loaded;
                survived += ev.survived_hold ? 1 : 0;
            }
            if (ev.level < min_level)
                continue;
            const double v = norm.normalize(static_cast<double>(ev.spectroscopy.front().counts));
            sum += v;
            sumsq += v * v;
            ++n;
        }
        HoldSweepPoint pt;
        pt.hold_time = c.hold_time;
        pt.events = n;
        if (n > 0) {
            const auto dn = static_cast<double>(n);
            pt.mean_transmission = sum / dn;
            pt.sem = n >= 2 ? std::sqrt(std::max(sumsq - dn * pt.mean_transmission * pt.mean_transmission, 0.0) / (dn - 1) / dn)
                            : 0.0;
        }
        pt.survival_fraction = loaded > 0 ? static_cast<double>(survived) / static_cast<double>(loaded) : 0.0;
        out.push_back(pt);
    }
    return out;
}

} // namespace fcqed

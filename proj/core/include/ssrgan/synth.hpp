#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "ssrgan/signal.hpp"

namespace ssrgan {

struct SynthConfig {
    double duration_s = 60.0;
    double sample_rate_hz = 250.0;
    double heart_rate_bpm = 72.0;
    /// Standard deviation of the Gaussian beat-time jitter.
    double beat_jitter_ms = 30.0;
    /// Median BCG pulse peak over the clean robust peak.
    double amplitude_ratio = 30.0;
    /// Per-beat amplitude factor drawn uniformly from [1 - j, 1 + j].
    double amplitude_jitter = 0.2;
    /// Alpha-burst power relative to the pink background power.
    double alpha_power = 0.5;
    double pink_noise_exponent = 1.0;
    double band_lo_hz = 0.1;
    double band_hi_hz = 70.0;
    /// RMS of the pink background (arbitrary units, microvolt-like).
    double clean_rms = 10.0;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const SynthConfig&) const = default;
};

void to_json(nlohmann::json& j, const SynthConfig& v);
void from_json(const nlohmann::json& j, SynthConfig& v);

/// Pink (1/f^exponent) background plus amplitude-modulated 10 Hz alpha bursts,
/// band-limited to [band_lo_hz, band_hi_hz]. Single channel.
Recording gen_clean(const SynthConfig& cfg);

/// Median over 1-s windows of max |x - window mean|, averaged over channels.
double robust_peak(const Recording& rec);

/// Multiphasic pulse (three Gabor components, 250 ms, zero mean) sampled at
/// sample_rate_hz, unit peak magnitude.
std::vector<double> bcg_atom(double sample_rate_hz);

/// Beat onset sample indices: k * period + N(0, jitter), rounded to samples.
std::vector<std::size_t> beat_onsets(const SynthConfig& cfg);

/// Artifact only: pulses at beat_onsets scaled so the median pulse peak equals
/// amplitude_ratio * clean_reference_peak.
Recording gen_bcg(const SynthConfig& cfg, double clean_reference_peak);

struct ContaminatedPair {
    Recording clean;
    Recording artifact;
    Recording contaminated; // clean + artifact, sample by sample
};

/// Seeds of the independent generator streams.
struct SynthSeeds {
    std::uint64_t a_clean, a_artifact, b_clean, eval_clean, eval_artifact;
};
SynthSeeds derive_seeds(std::uint64_t seed);

struct SynthDatasets {
    WindowedDataset a;      // contaminated training windows
    WindowedDataset b;      // clean training windows (unpaired)
    ContaminatedPair eval;  // paired held-out recordings
    WindowedDataset eval_contaminated;
    WindowedDataset eval_clean;
    double scale = 1.0;     // robust scale of A, applied everywhere
    SynthSeeds seeds{};
    nlohmann::json manifest;
};

/// n_* are window counts (1-s windows). Counts must be >= 1.
SynthDatasets make_datasets(const SynthConfig& cfg, std::size_t n_train_a, std::size_t n_train_b,
                            std::size_t n_eval);

/// Contaminated/clean/artifact recording built from the given seeds.
ContaminatedPair make_contaminated(const SynthConfig& cfg, std::uint64_t clean_seed, std::uint64_t artifact_seed,
                                   double duration_s);

} // namespace ssrgan

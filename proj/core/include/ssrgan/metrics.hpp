#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssrgan/signal.hpp"

namespace ssrgan {

struct Psd {
    std::vector<double> freq_hz;
    /// power[channel][bin], one-sided density (units^2 / Hz).
    std::vector<std::vector<double>> power;
};

/// Hann-windowed Welch estimate with the given segment length and overlap fraction.
Psd psd_welch(const Recording& rec, double segment_s = 1.0, double overlap = 0.5);

/// (1/n) sum_ch 10 log10(sum PSD_before / sum PSD_after) over the full one-sided band.
double inps(const Recording& before, const Recording& after);
std::vector<double> inps_per_channel(const Recording& before, const Recording& after);

/// Mean over 1-s windows of (max - min), per channel.
std::vector<double> mean_peak_to_peak(const Recording& rec, double window_s = 1.0);

/// sum_ch V_before / sum_ch V_after.
double ptpr(const Recording& before, const Recording& after);

/// Pearson correlation over all samples of all channels.
double pearson(const Recording& x, const Recording& y);

struct MetricsReport {
    std::size_t channels = 0;
    double inps_db = 0.0;
    double ptpr = 0.0;
    std::vector<double> inps_db_per_channel;
    std::vector<double> peak_to_peak_before;
    std::vector<double> peak_to_peak_after;
    std::optional<double> clean_correlation;
    Psd psd_before;
    Psd psd_after;

    nlohmann::json to_json() const;
    /// Writes "<prefix><channel>.csv" files with header freq_hz,power_before,power_after.
    std::vector<std::string> write_psd_csv(const std::string& prefix) const;
};

MetricsReport evaluate(const Recording& before, const Recording& after,
                       const std::optional<Recording>& clean = std::nullopt);

struct AasConfig {
    double min_period_s = 0.4;
    double max_period_s = 1.5;
    std::size_t epochs = 21;
    /// Search half-width around prev_onset + period when tracking beats.
    double onset_tolerance_s = 0.02;
    /// Period detection and beat tracking run on this band only (keeps alpha out).
    double detection_lo_hz = 1.0;
    double detection_hi_hz = 8.0;
    /// A period candidate needs normalized autocorrelation above this.
    double min_peak_correlation = 0.01;
    bool operator==(const AasConfig&) const = default;
};

struct AasResult {
    Recording cleaned;
    /// Per channel: detected period (samples) and beat onsets.
    std::vector<std::size_t> period_samples;
    std::vector<std::vector<std::size_t>> onsets;
};

/// Average artifact subtraction: autocorrelation period and tracked onsets on a
/// band-limited copy, onsets refined against the mean epoch,
/// sliding template of the surrounding `epochs` epochs subtracted per beat.
/// Throws PeriodDetectionError when no autocorrelation peak above min_peak_correlation lies in range.
AasResult aas_baseline(const Recording& rec, const AasConfig& cfg = {});

} // namespace ssrgan

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ssrgan/tensor.hpp"

namespace ssrgan {

struct Recording {
    double sample_rate_hz = 250.0;
    /// samples[channel][t]; all channels have equal length.
    std::vector<std::vector<double>> samples;

    Recording() = default;
    Recording(double rate, std::vector<std::vector<double>> data) : sample_rate_hz(rate), samples(std::move(data)) {}

    std::size_t channels() const noexcept { return samples.size(); }
    std::size_t length() const noexcept { return samples.empty() ? 0 : samples.front().size(); }
    double duration_s() const noexcept { return static_cast<double>(length()) / sample_rate_hz; }

    /// Throws InvalidArgument on ragged channels, non-positive rate or non-finite samples.
    void validate() const;
    bool operator==(const Recording&) const = default;
};

struct WindowProvenance {
    std::string recording_id;
    std::size_t channel = 0;
    std::size_t offset = 0; // first sample of the window in the source channel
    bool operator==(const WindowProvenance&) const = default;
};

/// Non-overlapping windows stored as (n,1,W): zero-mean, divided by one global scale.
struct WindowedDataset {
    Tensor<double> windows;
    std::vector<double> means;
    double scale = 1.0;
    double sample_rate_hz = 250.0;
    std::vector<WindowProvenance> provenance;

    std::size_t size() const noexcept { return windows.shape().batch; }
    std::size_t window_length() const noexcept { return windows.shape().length; }
};

/// Zero-phase FIR band-pass (Hamming windowed sinc, applied forward then backward).
/// lo_hz == 0 gives a pure low-pass.
Recording bandpass(const Recording& rec, double lo_hz, double hi_hz);

/// Odd-length linear-phase band-pass taps, DC gain exactly lowpass(hi) - lowpass(lo).
std::vector<double> design_bandpass(double sample_rate_hz, double lo_hz, double hi_hz);

/// Integer-factor decimation after a zero-phase anti-alias low-pass. Output has
/// ceil(n / factor) samples. Non-integer rate ratios throw UnsupportedError.
Recording resample(const Recording& rec, double target_hz);

/// 1.4826 * median absolute deviation of all window samples (after mean removal).
double robust_scale(const std::vector<std::vector<double>>& windows);

/// Splits every channel into non-overlapping windows of window_seconds, dropping
/// the remainder. With no scale given, it is computed from these windows.
WindowedDataset segment(const Recording& rec, double window_seconds = 1.0, std::optional<double> scale = std::nullopt,
                        const std::string& recording_id = "rec");

/// Inverse of segment for windows whose contents may have been replaced:
/// x * scale + mean, concatenated per channel in offset order.
Recording stitch(const WindowedDataset& ds);

/// Window-level normalization used by segment / stitch.
std::vector<double> normalize_window(const std::vector<double>& w, double mean, double scale);
std::vector<double> denormalize_window(const std::vector<double>& w, double mean, double scale);

enum class RecordingFormat { csv, raw_f32 };

/// ".csv" selects CSV; anything else the raw float32 format with a "<path>.json" sidecar.
RecordingFormat format_for_path(const std::string& path);

Recording read_recording(const std::string& path);
void write_recording(const Recording& rec, const std::string& path);
Recording read_recording(const std::string& path, RecordingFormat format);
void write_recording(const Recording& rec, const std::string& path, RecordingFormat format);

} // namespace ssrgan

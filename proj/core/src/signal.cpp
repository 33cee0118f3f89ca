#include "ssrgan/signal.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fft.hpp"

namespace ssrgan {
namespace {

constexpr double kMadToSigma = 1.4826;

std::size_t odd_taps(double sample_rate_hz, double transition_hz) {
    // Hamming window: transition width ~ 3.3 fs / N.
    auto n = static_cast<std::size_t>(std::ceil(3.3 * sample_rate_hz / transition_hz));
    return n | 1U;
}

std::vector<double> lowpass_taps(double sample_rate_hz, double cutoff_hz, std::size_t taps) {
    const double fc = cutoff_hz / sample_rate_hz;
    const auto m = static_cast<double>(taps - 1) / 2.0;
    std::vector<double> h(taps);
    double sum = 0.0;
    for (std::size_t i = 0; i < taps; ++i) {
        const double t = static_cast<double>(i) - m;
        const double sinc = t == 0.0 ? 2.0 * fc : std::sin(2.0 * std::numbers::pi * fc * t) / (std::numbers::pi * t);
        const double w = taps == 1 ? 1.0
                                   : 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                                            static_cast<double>(taps - 1));
        h[i] = sinc * w;
        sum += h[i];
    }
    for (double& v : h) v /= sum;
    return h;
}

// Zero-phase application: edge-value padding, then the symmetric kernel twice.
std::vector<double> filtfilt(const std::vector<double>& x, const std::vector<double>& h) {
    if (x.empty()) return {};
    const std::size_t pad = h.size();
    std::vector<double> padded(x.size() + 2 * pad);
    std::fill(padded.begin(), padded.begin() + static_cast<std::ptrdiff_t>(pad), x.front());
    std::copy(x.begin(), x.end(), padded.begin() + static_cast<std::ptrdiff_t>(pad));
    std::fill(padded.end() - static_cast<std::ptrdiff_t>(pad), padded.end(), x.back());
    std::vector<double> y = detail::convolve_same(padded, h);
    std::reverse(y.begin(), y.end());
    y = detail::convolve_same(y, h);
    std::reverse(y.begin(), y.end());
    return std::vector<double>(y.begin() + static_cast<std::ptrdiff_t>(pad),
                               y.begin() + static_cast<std::ptrdiff_t>(pad + x.size()));
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

std::string trim(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    return s.substr(i);
}

bool parse_double(const std::string& text, double& out) {
    const std::string t = trim(text);
    if (t.empty()) return false;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

Recording read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("signal", "cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("signal", path + ": empty file, expected '# sample_rate_hz=' header");
    line = trim(line);
    const std::string prefix = "# sample_rate_hz=";
    double rate = 0.0;
    if (line.rfind(prefix, 0) != 0 || !parse_double(line.substr(prefix.size()), rate)) {
        throw FormatError("signal", path + ": line 1: malformed header, expected '# sample_rate_hz=<value>'");
    }
    if (!(rate > 0.0) || !std::isfinite(rate)) throw FormatError("signal", path + ": line 1: sample_rate_hz must be positive");

    Recording rec;
    rec.sample_rate_hz = rate;
    std::size_t line_no = 1;
    std::size_t columns = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            double v = 0.0;
            if (!parse_double(cell, v)) {
                throw FormatError("signal", path + ": line " + std::to_string(line_no) + ": cannot parse value '" +
                                                trim(cell) + "'");
            }
            row.push_back(v);
        }
        if (!line.empty() && line.back() == ',') {
            throw FormatError("signal", path + ": line " + std::to_string(line_no) + ": trailing comma");
        }
        if (columns == 0) {
            columns = row.size();
            rec.samples.assign(columns, {});
        } else if (row.size() != columns) {
            throw FormatError("signal", path + ": line " + std::to_string(line_no) + ": expected " +
                                            std::to_string(columns) + " columns, got " + std::to_string(row.size()));
        }
        for (std::size_t c = 0; c < columns; ++c) rec.samples[c].push_back(row[c]);
    }
    if (columns == 0) throw FormatError("signal", path + ": no sample rows");
    return rec;
}

void write_csv(const Recording& rec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("signal", "cannot write " + path);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", rec.sample_rate_hz);
    out << "# sample_rate_hz=" << buf << '\n';
    for (std::size_t t = 0; t < rec.length(); ++t) {
        for (std::size_t c = 0; c < rec.channels(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", rec.samples[c][t]);
            if (c) out << ',';
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw Error("signal", "write failed for " + path);
}

static_assert(std::endian::native == std::endian::little, "raw recording I/O assumes a little-endian host");

Recording read_raw(const std::string& path) {
    const std::string sidecar_path = path + ".json";
    std::ifstream sc(sidecar_path);
    if (!sc) throw FormatError("signal", "missing sidecar " + sidecar_path);
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(sc);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("signal", sidecar_path + ": malformed JSON: " + e.what());
    }
    if (!meta.is_object()) throw FormatError("signal", sidecar_path + ": expected a JSON object");
    for (const auto& item : meta.items()) {
        if (item.key() != "channels" && item.key() != "sample_rate_hz" && item.key() != "samples_per_channel") {
            throw FormatError("signal", sidecar_path + ": unknown field '" + item.key() + "'");
        }
    }
    auto field = [&](const char* name) -> const nlohmann::json& {
        if (!meta.contains(name)) throw FormatError("signal", sidecar_path + ": missing field '" + name + "'");
        const auto& v = meta[name];
        if (!v.is_number()) throw FormatError("signal", sidecar_path + ": field '" + name + "' must be a number");
        return v;
    };
    const auto& ch_field = field("channels");
    const auto& n_field = field("samples_per_channel");
    if (!ch_field.is_number_unsigned() || ch_field.get<std::size_t>() == 0) {
        throw FormatError("signal", sidecar_path + ": field 'channels' must be a positive integer");
    }
    if (!n_field.is_number_unsigned()) {
        throw FormatError("signal", sidecar_path + ": field 'samples_per_channel' must be a nonnegative integer");
    }
    const auto channels = ch_field.get<std::size_t>();
    const auto n = n_field.get<std::size_t>();
    const double rate = field("sample_rate_hz").get<double>();
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw FormatError("signal", sidecar_path + ": field 'sample_rate_hz' must be positive");
    }

    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("signal", "cannot open " + path);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() != channels * n * 4) {
        throw FormatError("signal", path + ": field 'samples_per_channel' (" + std::to_string(n) + " x " +
                                        std::to_string(channels) + " channels) does not match file size of " +
                                        std::to_string(bytes.size()) + " bytes");
    }
    Recording rec;
    rec.sample_rate_hz = rate;
    rec.samples.assign(channels, std::vector<double>(n));
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t t = 0; t < n; ++t) {
            float f = 0.0F;
            std::memcpy(&f, bytes.data() + 4 * (c * n + t), 4);
            rec.samples[c][t] = f;
        }
    }
    return rec;
}

void write_raw(const Recording& rec, const std::string& path) {
    std::string bytes;
    bytes.reserve(rec.channels() * rec.length() * 4);
    for (const auto& ch : rec.samples) {
        for (double v : ch) {
            const auto f = static_cast<float>(v);
            char b[4];
            std::memcpy(b, &f, 4);
            bytes.append(b, 4);
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("signal", "cannot write " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    nlohmann::json meta{{"channels", rec.channels()},
                        {"sample_rate_hz", rec.sample_rate_hz},
                        {"samples_per_channel", rec.length()}};
    std::ofstream sc(path + ".json");
    if (!sc) throw Error("signal", "cannot write " + path + ".json");
    sc << meta.dump(2) << '\n';
}

} // namespace

void Recording::validate() const {
    if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
        throw InvalidArgument("signal", "sample_rate_hz must be positive, got " + std::to_string(sample_rate_hz));
    }
    for (std::size_t c = 0; c < samples.size(); ++c) {
        if (samples[c].size() != length()) {
            throw InvalidArgument("signal", "channel " + std::to_string(c) + " has " +
                                                std::to_string(samples[c].size()) + " samples, channel 0 has " +
                                                std::to_string(length()));
        }
        for (std::size_t t = 0; t < samples[c].size(); ++t) {
            if (!std::isfinite(samples[c][t])) {
                throw InvalidArgument("signal", "non-finite sample at channel " + std::to_string(c) + ", index " +
                                                    std::to_string(t));
            }
        }
    }
}

std::vector<double> design_bandpass(double fs, double lo, double hi) {
    const double nyq = fs / 2.0;
    if (!(lo >= 0.0) || !(hi > lo) || !(hi < nyq)) {
        throw InvalidArgument("signal", "band [" + std::to_string(lo) + ", " + std::to_string(hi) +
                                            "] Hz must satisfy 0 <= lo < hi < Nyquist (" + std::to_string(nyq) + ")");
    }
    double tw = std::min(nyq - hi, lo > 0.0 ? std::min(lo, (hi - lo) / 2.0) : hi / 2.0);
    const std::size_t taps = odd_taps(fs, tw);
    std::vector<double> h = lowpass_taps(fs, hi, taps);
    if (lo > 0.0) {
        const std::vector<double> l = lowpass_taps(fs, lo, taps);
        for (std::size_t i = 0; i < taps; ++i) h[i] -= l[i];
    }
    return h;
}

Recording bandpass(const Recording& rec, double lo_hz, double hi_hz) {
    rec.validate();
    const std::vector<double> h = design_bandpass(rec.sample_rate_hz, lo_hz, hi_hz);
    Recording out;
    out.sample_rate_hz = rec.sample_rate_hz;
    for (const auto& ch : rec.samples) out.samples.push_back(filtfilt(ch, h));
    return out;
}

Recording resample(const Recording& rec, double target_hz) {
    rec.validate();
    if (!(target_hz > 0.0) || target_hz > rec.sample_rate_hz) {
        throw InvalidArgument("signal", "resample: target rate " + std::to_string(target_hz) +
                                            " Hz must be in (0, source rate " + std::to_string(rec.sample_rate_hz) +
                                            " Hz]");
    }
    const double ratio = rec.sample_rate_hz / target_hz;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 * ratio) {
        throw UnsupportedError("signal", "resample: non-integer rate ratio " + std::to_string(ratio));
    }
    const auto factor = static_cast<std::size_t>(rounded);
    if (factor == 1) return rec;

    const double target_nyq = target_hz / 2.0;
    const std::vector<double> h =
        lowpass_taps(rec.sample_rate_hz, 0.9 * target_nyq, odd_taps(rec.sample_rate_hz, 0.1 * target_nyq));
    Recording out;
    out.sample_rate_hz = target_hz;
    for (const auto& ch : rec.samples) {
        const std::vector<double> y = filtfilt(ch, h);
        std::vector<double> d;
        d.reserve((y.size() + factor - 1) / factor);
        for (std::size_t t = 0; t < y.size(); t += factor) d.push_back(y[t]);
        out.samples.push_back(std::move(d));
    }
    return out;
}

double robust_scale(const std::vector<std::vector<double>>& windows) {
    std::vector<double> all;
    for (const auto& w : windows) all.insert(all.end(), w.begin(), w.end());
    if (all.empty()) return 1.0;
    const double med = median_of(all);
    std::vector<double> dev(all.size());
    for (std::size_t i = 0; i < all.size(); ++i) dev[i] = std::abs(all[i] - med);
    double s = kMadToSigma * median_of(std::move(dev));
    if (s > 0.0 && std::isfinite(s)) return s;
    // Degenerate MAD (mostly-constant data): fall back to the standard deviation, then 1.
    double mean = 0.0;
    for (double v : all) mean += v;
    mean /= static_cast<double>(all.size());
    double var = 0.0;
    for (double v : all) var += (v - mean) * (v - mean);
    s = std::sqrt(var / static_cast<double>(all.size()));
    return s > 0.0 && std::isfinite(s) ? s : 1.0;
}

std::vector<double> normalize_window(const std::vector<double>& w, double mean, double scale) {
    std::vector<double> out(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) out[i] = (w[i] - mean) / scale;
    return out;
}

std::vector<double> denormalize_window(const std::vector<double>& w, double mean, double scale) {
    std::vector<double> out(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] * scale + mean;
    return out;
}

WindowedDataset segment(const Recording& rec, double window_seconds, std::optional<double> scale,
                        const std::string& recording_id) {
    rec.validate();
    const double exact = window_seconds * rec.sample_rate_hz;
    const auto w = static_cast<std::size_t>(std::llround(exact));
    if (!(window_seconds > 0.0) || w == 0 || std::abs(exact - static_cast<double>(w)) > 1e-9 * exact) {
        throw InvalidArgument("signal", "segment: window of " + std::to_string(window_seconds) + " s is not a whole number of samples at " +
                                            std::to_string(rec.sample_rate_hz) + " Hz");
    }
    if (rec.length() < w) {
        throw InvalidArgument("signal", "segment: recording of " + std::to_string(rec.length()) +
                                            " samples is shorter than one window (" + std::to_string(w) + ")");
    }
    if (scale && !(*scale > 0.0 && std::isfinite(*scale))) {
        throw InvalidArgument("signal", "segment: scale must be positive and finite");
    }
    const std::size_t per_channel = rec.length() / w;
    std::vector<std::vector<double>> centered;
    WindowedDataset ds;
    ds.sample_rate_hz = rec.sample_rate_hz;
    for (std::size_t c = 0; c < rec.channels(); ++c) {
        for (std::size_t k = 0; k < per_channel; ++k) {
            const auto* first = rec.samples[c].data() + k * w;
            std::vector<double> win(first, first + w);
            double mean = 0.0;
            for (double v : win) mean += v;
            mean /= static_cast<double>(w);
            for (double& v : win) v -= mean;
            centered.push_back(std::move(win));
            ds.means.push_back(mean);
            ds.provenance.push_back({recording_id, c, k * w});
        }
    }
    ds.scale = scale ? *scale : robust_scale(centered);
    ds.windows = Tensor<double>(Shape{centered.size(), 1, w});
    for (std::size_t i = 0; i < centered.size(); ++i) {
        for (std::size_t t = 0; t < w; ++t) ds.windows[i * w + t] = centered[i][t] / ds.scale;
    }
    return ds;
}

Recording stitch(const WindowedDataset& ds) {
    const std::size_t n = ds.size();
    const std::size_t w = ds.window_length();
    if (ds.provenance.size() != n) {
        throw ContractError("signal", "stitch: " + std::to_string(n) + " windows but " +
                                          std::to_string(ds.provenance.size()) + " provenance entries");
    }
    if (ds.means.size() != n) {
        throw ContractError("signal", "stitch: " + std::to_string(n) + " windows but " +
                                          std::to_string(ds.means.size()) + " stored means");
    }
    if (n == 0) throw ContractError("signal", "stitch: no windows");
    std::map<std::size_t, std::map<std::size_t, std::size_t>> by_channel; // channel -> offset -> window
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = ds.provenance[i];
        if (p.recording_id != ds.provenance.front().recording_id) {
            throw ContractError("signal", "stitch: windows come from different recordings ('" +
                                              ds.provenance.front().recording_id + "', '" + p.recording_id + "')");
        }
        if (!by_channel[p.channel].emplace(p.offset, i).second) {
            throw ContractError("signal", "stitch: duplicate window at channel " + std::to_string(p.channel) +
                                              ", offset " + std::to_string(p.offset));
        }
    }
    const std::size_t channels = by_channel.rbegin()->first + 1;
    if (by_channel.size() != channels) throw ContractError("signal", "stitch: missing channels in provenance");
    const std::size_t per_channel = by_channel.begin()->second.size();
    Recording out;
    out.sample_rate_hz = ds.sample_rate_hz;
    for (const auto& [ch, windows] : by_channel) {
        if (windows.size() != per_channel) {
            throw ContractError("signal", "stitch: channel " + std::to_string(ch) + " has " +
                                              std::to_string(windows.size()) + " windows, expected " +
                                              std::to_string(per_channel));
        }
        std::vector<double> samples;
        samples.reserve(per_channel * w);
        std::size_t expected = 0;
        for (const auto& [offset, idx] : windows) {
            if (offset != expected) {
                throw ContractError("signal", "stitch: gap in channel " + std::to_string(ch) + " at offset " +
                                                  std::to_string(expected));
            }
            for (std::size_t t = 0; t < w; ++t) samples.push_back(ds.windows[idx * w + t] * ds.scale + ds.means[idx]);
            expected += w;
        }
        out.samples.push_back(std::move(samples));
    }
    return out;
}

RecordingFormat format_for_path(const std::string& path) {
    const auto dot = path.find_last_of('.');
    if (dot != std::string::npos) {
        std::string ext = path.substr(dot + 1);
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == "csv") return RecordingFormat::csv;
    }
    return RecordingFormat::raw_f32;
}

Recording read_recording(const std::string& path) { return read_recording(path, format_for_path(path)); }

void write_recording(const Recording& rec, const std::string& path) {
    write_recording(rec, path, format_for_path(path));
}

Recording read_recording(const std::string& path, RecordingFormat format) {
    Recording rec = format == RecordingFormat::csv ? read_csv(path) : read_raw(path);
    try {
        rec.validate();
    } catch (const InvalidArgument& e) {
        throw FormatError("signal", path + ": " + e.what());
    }
    return rec;
}

void write_recording(const Recording& rec, const std::string& path, RecordingFormat format) {
    rec.validate();
    if (format == RecordingFormat::csv) {
        write_csv(rec, path);
    } else {
        write_raw(rec, path);
    }
}

} // namespace ssrgan

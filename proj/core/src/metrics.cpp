#include "ssrgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "fft.hpp"

namespace ssrgan {
namespace {

void require_comparable(const Recording& a, const Recording& b, const char* op) {
    a.validate();
    b.validate();
    if (a.channels() != b.channels() || a.length() != b.length()) {
        throw InvalidArgument("metrics", std::string(op) + ": shapes differ (" + std::to_string(a.channels()) + "x" +
                                             std::to_string(a.length()) + " vs " + std::to_string(b.channels()) +
                                             "x" + std::to_string(b.length()) + ")");
    }
    if (a.sample_rate_hz != b.sample_rate_hz) {
        throw InvalidArgument("metrics", std::string(op) + ": sample rates differ");
    }
    if (a.channels() == 0) throw InvalidArgument("metrics", std::string(op) + ": no channels");
}

std::size_t argmax_in(const std::vector<double>& y, std::size_t lo, std::size_t hi) {
    std::size_t best = lo;
    for (std::size_t t = lo; t < hi; ++t) {
        if (y[t] > y[best]) best = t;
    }
    return best;
}

} // namespace

Psd psd_welch(const Recording& rec, double segment_s, double overlap) {
    rec.validate();
    const double fs = rec.sample_rate_hz;
    const auto seg = static_cast<std::size_t>(std::llround(segment_s * fs));
    if (seg < 2) throw InvalidArgument("metrics", "psd_welch: segment shorter than 2 samples");
    if (!(overlap >= 0.0 && overlap < 1.0)) throw InvalidArgument("metrics", "psd_welch: overlap must be in [0, 1)");
    if (rec.length() < seg) {
        throw InvalidArgument("metrics", "psd_welch: recording of " + std::to_string(rec.length()) +
                                             " samples is shorter than one segment (" + std::to_string(seg) + ")");
    }
    const std::size_t step = std::max<std::size_t>(1, seg - static_cast<std::size_t>(std::llround(overlap * seg)));
    const std::size_t count = 1 + (rec.length() - seg) / step;

    std::vector<double> window(seg);
    double wss = 0.0;
    for (std::size_t i = 0; i < seg; ++i) {
        // Periodic Hann.
        window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(seg));
        wss += window[i] * window[i];
    }
    const std::size_t bins = seg / 2 + 1;
    Psd psd;
    psd.freq_hz.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) psd.freq_hz[k] = static_cast<double>(k) * fs / static_cast<double>(seg);

    const double norm = 1.0 / (fs * wss * static_cast<double>(count));
    std::vector<double> buf(seg);
    for (const auto& ch : rec.samples) {
        std::vector<double> p(bins, 0.0);
        for (std::size_t s = 0; s < count; ++s) {
            const double* x = ch.data() + s * step;
            double mean = 0.0;
            for (std::size_t i = 0; i < seg; ++i) mean += x[i];
            mean /= static_cast<double>(seg);
            for (std::size_t i = 0; i < seg; ++i) buf[i] = (x[i] - mean) * window[i];
            const auto spec = detail::rfft(buf, seg);
            for (std::size_t k = 0; k < bins; ++k) p[k] += std::norm(spec[k]);
        }
        for (std::size_t k = 0; k < bins; ++k) {
            const bool edge = k == 0 || (seg % 2 == 0 && k == bins - 1);
            p[k] *= norm * (edge ? 1.0 : 2.0);
        }
        psd.power.push_back(std::move(p));
    }
    return psd;
}

std::vector<double> inps_per_channel(const Recording& before, const Recording& after) {
    require_comparable(before, after, "inps");
    const Psd pb = psd_welch(before);
    const Psd pa = psd_welch(after);
    std::vector<double> out;
    for (std::size_t c = 0; c < pb.power.size(); ++c) {
        double sb = 0.0;
        double sa = 0.0;
        for (double v : pb.power[c]) sb += v;
        for (double v : pa.power[c]) sa += v;
        if (!(sa > 0.0)) throw NumericalError("metrics", "inps: zero after-power in channel " + std::to_string(c));
        if (!(sb > 0.0)) throw NumericalError("metrics", "inps: zero before-power in channel " + std::to_string(c));
        out.push_back(10.0 * (std::log10(sb) - std::log10(sa)));
    }
    return out;
}

double inps(const Recording& before, const Recording& after) {
    const std::vector<double> per = inps_per_channel(before, after);
    double s = 0.0;
    for (double v : per) s += v;
    return s / static_cast<double>(per.size());
}

std::vector<double> mean_peak_to_peak(const Recording& rec, double window_s) {
    rec.validate();
    const auto w = static_cast<std::size_t>(std::llround(window_s * rec.sample_rate_hz));
    if (w == 0 || rec.length() < w) {
        throw InvalidArgument("metrics", "ptpr: recording of " + std::to_string(rec.length()) +
                                             " samples is shorter than one window (" + std::to_string(w) + ")");
    }
    const std::size_t windows = rec.length() / w;
    std::vector<double> v;
    for (const auto& ch : rec.samples) {
        double sum = 0.0;
        for (std::size_t k = 0; k < windows; ++k) {
            const auto [lo, hi] = std::minmax_element(ch.begin() + static_cast<std::ptrdiff_t>(k * w),
                                                      ch.begin() + static_cast<std::ptrdiff_t>((k + 1) * w));
            sum += *hi - *lo;
        }
        v.push_back(sum / static_cast<double>(windows));
    }
    return v;
}

double ptpr(const Recording& before, const Recording& after) {
    require_comparable(before, after, "ptpr");
    double vb = 0.0;
    double va = 0.0;
    for (double v : mean_peak_to_peak(before)) vb += v;
    for (double v : mean_peak_to_peak(after)) va += v;
    if (!(va > 0.0)) throw NumericalError("metrics", "ptpr: zero peak-to-peak amplitude after cleaning");
    return vb / va;
}

double pearson(const Recording& x, const Recording& y) {
    require_comparable(x, y, "pearson");
    double mx = 0.0;
    double my = 0.0;
    std::size_t n = 0;
    for (std::size_t c = 0; c < x.channels(); ++c) {
        for (std::size_t t = 0; t < x.length(); ++t) {
            mx += x.samples[c][t];
            my += y.samples[c][t];
            ++n;
        }
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t c = 0; c < x.channels(); ++c) {
        for (std::size_t t = 0; t < x.length(); ++t) {
            const double a = x.samples[c][t] - mx;
            const double b = y.samples[c][t] - my;
            sxy += a * b;
            sxx += a * a;
            syy += b * b;
        }
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) throw NumericalError("metrics", "pearson: constant input");
    return sxy / std::sqrt(sxx * syy);
}

MetricsReport evaluate(const Recording& before, const Recording& after, const std::optional<Recording>& clean) {
    require_comparable(before, after, "evaluate");
    MetricsReport r;
    r.channels = before.channels();
    r.inps_db_per_channel = inps_per_channel(before, after);
    double s = 0.0;
    for (double v : r.inps_db_per_channel) s += v;
    r.inps_db = s / static_cast<double>(r.channels);
    r.peak_to_peak_before = mean_peak_to_peak(before);
    r.peak_to_peak_after = mean_peak_to_peak(after);
    r.ptpr = ptpr(before, after);
    if (clean) r.clean_correlation = pearson(after, *clean);
    r.psd_before = psd_welch(before);
    r.psd_after = psd_welch(after);
    return r;
}

nlohmann::json MetricsReport::to_json() const {
    nlohmann::json j{{"channels", channels},
                     {"inps_db", inps_db},
                     {"ptpr", ptpr},
                     {"inps_db_per_channel", inps_db_per_channel},
                     {"peak_to_peak_before", peak_to_peak_before},
                     {"peak_to_peak_after", peak_to_peak_after},
                     {"psd_bins", psd_before.freq_hz.size()}};
    j["clean_correlation"] = clean_correlation ? nlohmann::json(*clean_correlation) : nlohmann::json(nullptr);
    return j;
}

std::vector<std::string> MetricsReport::write_psd_csv(const std::string& prefix) const {
    std::vector<std::string> paths;
    for (std::size_t c = 0; c < psd_before.power.size(); ++c) {
        const std::string path = prefix + std::to_string(c) + ".csv";
        std::ofstream out(path);
        if (!out) throw Error("metrics", "cannot write " + path);
        out << "freq_hz,power_before,power_after\n";
        char buf[128];
        for (std::size_t k = 0; k < psd_before.freq_hz.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g\n", psd_before.freq_hz[k], psd_before.power[c][k],
                          psd_after.power[c][k]);
            out << buf;
        }
        paths.push_back(path);
    }
    return paths;
}

AasResult aas_baseline(const Recording& rec, const AasConfig& cfg) {
    rec.validate();
    if (cfg.epochs == 0) throw InvalidArgument("metrics", "aas: epochs must be >= 1");
    if (!(cfg.min_peak_correlation >= 0.0 && cfg.min_peak_correlation < 1.0)) {
        throw InvalidArgument("metrics", "aas: min_peak_correlation must be in [0, 1)");
    }
    if (!(cfg.min_period_s > 0.0 && cfg.max_period_s > cfg.min_period_s)) {
        throw InvalidArgument("metrics", "aas: period range must satisfy 0 < min < max");
    }
    const double fs = rec.sample_rate_hz;
    const std::size_t n = rec.length();
    const auto lmin = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(cfg.min_period_s * fs)));
    const auto lmax = static_cast<std::size_t>(std::floor(cfg.max_period_s * fs));
    if (n < lmax + 2) {
        throw InvalidArgument("metrics", "aas: recording of " + std::to_string(n) +
                                             " samples is too short for the period search range");
    }
    const auto tol = static_cast<std::size_t>(std::llround(cfg.onset_tolerance_s * fs));
    if (!(cfg.detection_lo_hz >= 0.0 && cfg.detection_hi_hz > cfg.detection_lo_hz && cfg.detection_hi_hz < fs / 2)) {
        throw InvalidArgument("metrics", "aas: detection band must satisfy 0 <= lo < hi < fs/2");
    }
    const Recording band = bandpass(rec, cfg.detection_lo_hz, cfg.detection_hi_hz);
    const std::size_t edge = design_bandpass(fs, cfg.detection_lo_hz, cfg.detection_hi_hz).size() / 2;

    AasResult res;
    res.cleaned.sample_rate_hz = fs;
    for (std::size_t c = 0; c < rec.channels(); ++c) {
        const auto& ch = rec.samples[c];
        double mean = 0.0;
        for (double v : ch) mean += v;
        mean /= static_cast<double>(n);
        std::vector<double> x(n);
        for (std::size_t t = 0; t < n; ++t) x[t] = ch[t] - mean;
        const std::vector<double>& xb = band.samples[c];

        // Biased autocorrelation via FFT, edges (filter transients) masked.
        std::vector<double> xa = xb;
        if (n > 6 * edge) {
            std::fill(xa.begin(), xa.begin() + static_cast<std::ptrdiff_t>(edge), 0.0);
            std::fill(xa.end() - static_cast<std::ptrdiff_t>(edge), xa.end(), 0.0);
        }
        const std::size_t nfft = detail::good_fft_size(2 * n);
        auto spec = detail::rfft(xa, nfft);
        for (auto& v : spec) v = std::norm(v);
        const std::vector<double> r = detail::irfft(spec, nfft);
        double energy = 0.0;
        for (double v : x) energy += v * v;
        if (!(energy > 0.0) || !(r[0] > 1e-12 * energy)) {
            throw PeriodDetectionError("metrics", "aas: channel " + std::to_string(c) + " has no content in the detection band");
        }
        std::size_t period = 0;
        double best = 0.0;
        for (std::size_t l = lmin; l <= lmax; ++l) {
            if (r[l] > r[l - 1] && r[l] >= r[l + 1] && r[l] > cfg.min_peak_correlation * r[0] && r[l] > best) {
                best = r[l];
                period = l;
            }
        }
        if (period == 0) {
            throw PeriodDetectionError("metrics", "aas: no autocorrelation peak above " +
                                                      std::to_string(cfg.min_peak_correlation) + " between " +
                                                      std::to_string(cfg.min_period_s) + " and " +
                                                      std::to_string(cfg.max_period_s) + " s in channel " +
                                                      std::to_string(c));
        }

        // Track beats on the dominant polarity.
        std::size_t extreme = 0;
        for (std::size_t t = 1; t < n; ++t) {
            if (std::abs(xb[t]) > std::abs(xb[extreme])) extreme = t;
        }
        const double sign = xb[extreme] < 0.0 ? -1.0 : 1.0;
        std::vector<double> y(n);
        for (std::size_t t = 0; t < n; ++t) y[t] = sign * xb[t];
        std::vector<std::size_t> onsets{argmax_in(y, 0, std::min(period, n))};
        while (true) {
            const std::size_t pred = onsets.back() + period;
            if (pred >= n) break;
            const std::size_t lo = pred > tol ? pred - tol : 0;
            const std::size_t hi = std::min(n, pred + tol + 1);
            onsets.push_back(argmax_in(y, std::max(lo, onsets.back() + 1), hi));
        }

        // Matched refinement: realign each onset to the mean epoch shape.
        const auto half = static_cast<std::ptrdiff_t>(period / 2);
        const auto sn = static_cast<std::ptrdiff_t>(n);
        for (int pass = 0; pass < 2; ++pass) {
            std::vector<double> tmpl(static_cast<std::size_t>(2 * half), 0.0);
            std::vector<double> cnt(tmpl.size(), 0.0);
            for (std::size_t o : onsets) {
                for (std::ptrdiff_t d = -half; d < half; ++d) {
                    const auto idx = static_cast<std::ptrdiff_t>(o) + d;
                    if (idx < 0 || idx >= sn) continue;
                    tmpl[static_cast<std::size_t>(d + half)] += xb[static_cast<std::size_t>(idx)];
                    cnt[static_cast<std::size_t>(d + half)] += 1.0;
                }
            }
            for (std::size_t i = 0; i < tmpl.size(); ++i) {
                if (cnt[i] > 0.0) tmpl[i] /= cnt[i];
            }
            const auto stol = static_cast<std::ptrdiff_t>(tol);
            for (std::size_t i = 0; i < onsets.size(); ++i) {
                const auto o = static_cast<std::ptrdiff_t>(onsets[i]);
                const std::ptrdiff_t lo_s = i == 0 ? -o : std::max(-stol, static_cast<std::ptrdiff_t>(onsets[i - 1]) + 1 - o);
                std::ptrdiff_t best_s = 0;
                double best_v = -std::numeric_limits<double>::infinity();
                for (std::ptrdiff_t s = std::max(-stol, lo_s); s <= stol && o + s < sn; ++s) {
                    double v = 0.0;
                    for (std::ptrdiff_t d = -half; d < half; ++d) {
                        const auto idx = o + s + d;
                        if (idx < 0 || idx >= sn) continue;
                        v += xb[static_cast<std::size_t>(idx)] * tmpl[static_cast<std::size_t>(d + half)];
                    }
                    if (v > best_v) {
                        best_v = v;
                        best_s = s;
                    }
                }
                onsets[i] = static_cast<std::size_t>(o + best_s);
            }
        }

        // Sliding template over the surrounding epochs, subtracted within midpoint-bounded regions.
        const std::size_t m = onsets.size();
        const std::size_t k = std::min(cfg.epochs, m);
        std::vector<double> out(ch);
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t start = i == 0 ? 0 : (onsets[i - 1] + onsets[i]) / 2;
            const std::size_t end = i + 1 == m ? n : (onsets[i] + onsets[i + 1]) / 2;
            std::size_t first = i >= k / 2 ? i - k / 2 : 0;
            first = std::min(first, m - k);
            for (std::size_t t = start; t < end; ++t) {
                const auto d = static_cast<std::ptrdiff_t>(t) - static_cast<std::ptrdiff_t>(onsets[i]);
                double sum = 0.0;
                std::size_t used = 0;
                for (std::size_t j = first; j < first + k; ++j) {
                    const auto idx = static_cast<std::ptrdiff_t>(onsets[j]) + d;
                    if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(n)) continue;
                    sum += x[static_cast<std::size_t>(idx)];
                    ++used;
                }
                if (used) out[t] -= sum / static_cast<double>(used);
            }
        }
        res.cleaned.samples.push_back(std::move(out));
        res.period_samples.push_back(period);
        res.onsets.push_back(std::move(onsets));
    }
    return res;
}

} // namespace ssrgan

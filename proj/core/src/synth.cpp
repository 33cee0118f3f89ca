#include "ssrgan/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "fft.hpp"
#include "ssrgan/json_io.hpp"

namespace ssrgan {
namespace {

constexpr double kAtomSeconds = 0.25;
constexpr double kFirstBeatSeconds = 0.25;
constexpr double kAlphaHz = 10.0;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::size_t sample_count(double duration_s, double rate) {
    return static_cast<std::size_t>(std::llround(duration_s * rate));
}

// Zeroes every rfft bin outside [lo, hi].
std::vector<double> band_limit(const std::vector<double>& x, double rate, double lo, double hi) {
    const std::size_t n = x.size();
    auto spec = detail::rfft(x, n);
    for (std::size_t k = 0; k < spec.size(); ++k) {
        const double f = static_cast<double>(k) * rate / static_cast<double>(n);
        if (f < lo || f > hi) spec[k] = 0.0;
    }
    return detail::irfft(spec, n);
}

double mean_square(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

} // namespace

void SynthConfig::validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
        throw ConfigError("synth-data", field + " " + why);
    };
    if (!(duration_s >= 2.0)) fail("duration_s", "must be >= 2");
    if (!(sample_rate_hz > 0.0)) fail("sample_rate_hz", "must be positive");
    // The BCG period must stay under one 1-s window.
    if (!(heart_rate_bpm >= 60.0 && heart_rate_bpm <= 200.0)) fail("heart_rate_bpm", "must be in [60, 200]");
    if (!(beat_jitter_ms >= 0.0)) fail("beat_jitter_ms", "must be >= 0");
    if (!(amplitude_ratio > 0.0) || !std::isfinite(amplitude_ratio)) fail("amplitude_ratio", "must be positive");
    if (!(amplitude_jitter >= 0.0 && amplitude_jitter < 1.0)) fail("amplitude_jitter", "must be in [0, 1)");
    if (!(alpha_power >= 0.0)) fail("alpha_power", "must be >= 0");
    if (!(pink_noise_exponent >= 0.0)) fail("pink_noise_exponent", "must be >= 0");
    if (!(band_lo_hz >= 0.0 && band_hi_hz > band_lo_hz && band_hi_hz <= sample_rate_hz / 2.0)) {
        fail("band_hi_hz", "must satisfy 0 <= band_lo_hz < band_hi_hz <= Nyquist");
    }
    if (!(clean_rms > 0.0)) fail("clean_rms", "must be positive");
}

void to_json(nlohmann::json& j, const SynthConfig& v) {
    j = nlohmann::json{{"duration_s", v.duration_s},
                       {"sample_rate_hz", v.sample_rate_hz},
                       {"heart_rate_bpm", v.heart_rate_bpm},
                       {"beat_jitter_ms", v.beat_jitter_ms},
                       {"amplitude_ratio", v.amplitude_ratio},
                       {"amplitude_jitter", v.amplitude_jitter},
                       {"alpha_power", v.alpha_power},
                       {"pink_noise_exponent", v.pink_noise_exponent},
                       {"band_lo_hz", v.band_lo_hz},
                       {"band_hi_hz", v.band_hi_hz},
                       {"clean_rms", v.clean_rms},
                       {"seed", v.seed}};
}

void from_json(const nlohmann::json& j, SynthConfig& v) {
    constexpr std::string_view ctx = "synth";
    reject_unknown_keys(j,
                        {"duration_s", "sample_rate_hz", "heart_rate_bpm", "beat_jitter_ms", "amplitude_ratio",
                         "amplitude_jitter", "alpha_power", "pink_noise_exponent", "band_lo_hz", "band_hi_hz",
                         "clean_rms", "seed"},
                        ctx);
    read_key(j, "duration_s", v.duration_s, ctx);
    read_key(j, "sample_rate_hz", v.sample_rate_hz, ctx);
    read_key(j, "heart_rate_bpm", v.heart_rate_bpm, ctx);
    read_key(j, "beat_jitter_ms", v.beat_jitter_ms, ctx);
    read_key(j, "amplitude_ratio", v.amplitude_ratio, ctx);
    read_key(j, "amplitude_jitter", v.amplitude_jitter, ctx);
    read_key(j, "alpha_power", v.alpha_power, ctx);
    read_key(j, "pink_noise_exponent", v.pink_noise_exponent, ctx);
    read_key(j, "band_lo_hz", v.band_lo_hz, ctx);
    read_key(j, "band_hi_hz", v.band_hi_hz, ctx);
    read_key(j, "clean_rms", v.clean_rms, ctx);
    read_key(j, "seed", v.seed, ctx);
}

Recording gen_clean(const SynthConfig& cfg) {
    cfg.validate();
    const double fs = cfg.sample_rate_hz;
    const std::size_t n = sample_count(cfg.duration_s, fs);
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    // Pink background synthesized in the frequency domain.
    std::vector<std::complex<double>> spec(n / 2 + 1);
    for (std::size_t k = 0; k < spec.size(); ++k) {
        const double re = normal(rng);
        const double im = normal(rng);
        const double f = static_cast<double>(k) * fs / static_cast<double>(n);
        if (f < cfg.band_lo_hz || f > cfg.band_hi_hz || f <= 0.0) continue;
        const double amp = std::pow(f, -cfg.pink_noise_exponent / 2.0);
        spec[k] = {amp * re, amp * im};
    }
    std::vector<double> x = detail::irfft(spec, n);
    const double pink_ms = mean_square(x);
    if (pink_ms > 0.0) {
        const double g = cfg.clean_rms / std::sqrt(pink_ms);
        for (double& v : x) v *= g;
    }

    if (cfg.alpha_power > 0.0) {
        // Bursts: Gaussian envelopes (sd 0.4 s) at exponential inter-burst gaps (mean 2 s).
        std::exponential_distribution<double> gap(0.5);
        std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
        const double phi = phase(rng);
        std::vector<double> alpha(n, 0.0);
        for (double c = gap(rng) - 1.0; c < cfg.duration_s + 1.0; c += gap(rng)) {
            for (std::size_t t = 0; t < n; ++t) {
                const double dt = static_cast<double>(t) / fs - c;
                if (std::abs(dt) > 1.6) continue;
                alpha[t] += std::exp(-dt * dt / (2.0 * 0.4 * 0.4));
            }
        }
        for (std::size_t t = 0; t < n; ++t) {
            alpha[t] *= std::sin(2.0 * std::numbers::pi * kAlphaHz * static_cast<double>(t) / fs + phi);
        }
        const double ams = mean_square(alpha);
        if (ams > 0.0) {
            const double g = std::sqrt(cfg.alpha_power * cfg.clean_rms * cfg.clean_rms / ams);
            for (std::size_t t = 0; t < n; ++t) x[t] += g * alpha[t];
        }
        x = band_limit(x, fs, cfg.band_lo_hz, cfg.band_hi_hz);
    }
    return Recording(fs, {std::move(x)});
}

double robust_peak(const Recording& rec) {
    const auto w = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(rec.sample_rate_hz)));
    double total = 0.0;
    for (const auto& ch : rec.samples) {
        std::vector<double> peaks;
        const std::size_t windows = std::max<std::size_t>(1, ch.size() / w);
        for (std::size_t k = 0; k < windows; ++k) {
            const std::size_t begin = k * w;
            const std::size_t end = std::min(ch.size(), begin + w);
            double mean = 0.0;
            for (std::size_t t = begin; t < end; ++t) mean += ch[t];
            mean /= static_cast<double>(end - begin);
            double peak = 0.0;
            for (std::size_t t = begin; t < end; ++t) peak = std::max(peak, std::abs(ch[t] - mean));
            peaks.push_back(peak);
        }
        total += median_of(std::move(peaks));
    }
    return rec.channels() ? total / static_cast<double>(rec.channels()) : 0.0;
}

std::vector<double> bcg_atom(double fs) {
    const auto len = static_cast<std::size_t>(std::llround(kAtomSeconds * fs));
    struct Gabor {
        double center_s, width_s, freq_hz, amp;
    };
    const Gabor parts[] = {{0.07, 0.018, 7.0, 1.0}, {0.12, 0.03, 4.0, -0.7}, {0.18, 0.04, 2.5, 0.35}};
    std::vector<double> atom(len, 0.0);
    std::vector<double> hann(len, 0.0);
    double sum = 0.0;
    double hsum = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        const double t = static_cast<double>(i) / fs;
        for (const auto& g : parts) {
            const double d = t - g.center_s;
            atom[i] += g.amp * std::exp(-d * d / (2.0 * g.width_s * g.width_s)) *
                       std::cos(2.0 * std::numbers::pi * g.freq_hz * d);
        }
        hann[i] = len > 1 ? 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                                 static_cast<double>(len - 1))
                          : 1.0;
        sum += atom[i];
        hsum += hann[i];
    }
    double peak = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        atom[i] -= sum / hsum * hann[i];
        peak = std::max(peak, std::abs(atom[i]));
    }
    if (peak > 0.0) {
        for (double& v : atom) v /= peak;
    }
    return atom;
}

std::vector<std::size_t> beat_onsets(const SynthConfig& cfg) {
    cfg.validate();
    const double fs = cfg.sample_rate_hz;
    const std::size_t n = sample_count(cfg.duration_s, fs);
    const double period = 60.0 / cfg.heart_rate_bpm;
    std::mt19937_64 rng(splitmix64(cfg.seed ^ 0x6265617473ULL));
    std::normal_distribution<double> jitter(0.0, cfg.beat_jitter_ms / 1000.0);
    std::vector<std::size_t> onsets;
    for (std::size_t k = 0;; ++k) {
        const double t = kFirstBeatSeconds + static_cast<double>(k) * period;
        const double jt = cfg.beat_jitter_ms > 0.0 ? jitter(rng) : 0.0;
        if (t - 1.0 > cfg.duration_s) break;
        const auto idx = std::llround((t + jt) * fs);
        if (idx >= 0 && static_cast<std::size_t>(idx) < n) onsets.push_back(static_cast<std::size_t>(idx));
    }
    return onsets;
}

Recording gen_bcg(const SynthConfig& cfg, double clean_reference_peak) {
    cfg.validate();
    if (!(clean_reference_peak > 0.0) || !std::isfinite(clean_reference_peak)) {
        throw InvalidArgument("synth-data", "gen_bcg: clean reference peak must be positive");
    }
    const double fs = cfg.sample_rate_hz;
    const std::size_t n = sample_count(cfg.duration_s, fs);
    const std::vector<double> atom = bcg_atom(fs);
    const std::vector<std::size_t> onsets = beat_onsets(cfg);

    std::mt19937_64 rng(splitmix64(cfg.seed ^ 0x616d706cULL));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> amps(onsets.size());
    for (double& a : amps) a = 1.0 + cfg.amplitude_jitter * u(rng);

    std::vector<double> x(n, 0.0);
    if (!onsets.empty()) {
        const double scale = cfg.amplitude_ratio * clean_reference_peak / median_of(amps);
        for (std::size_t k = 0; k < onsets.size(); ++k) {
            for (std::size_t i = 0; i < atom.size() && onsets[k] + i < n; ++i) {
                x[onsets[k] + i] += scale * amps[k] * atom[i];
            }
        }
    }
    return Recording(fs, {std::move(x)});
}

SynthSeeds derive_seeds(std::uint64_t seed) {
    return {splitmix64(seed * 5 + 1), splitmix64(seed * 5 + 2), splitmix64(seed * 5 + 3), splitmix64(seed * 5 + 4),
            splitmix64(seed * 5 + 5)};
}

ContaminatedPair make_contaminated(const SynthConfig& cfg, std::uint64_t clean_seed, std::uint64_t artifact_seed,
                                   double duration_s) {
    SynthConfig c = cfg;
    c.duration_s = std::max(duration_s, 2.0);
    c.seed = clean_seed;
    ContaminatedPair p;
    p.clean = gen_clean(c);
    c.seed = artifact_seed;
    p.artifact = gen_bcg(c, robust_peak(p.clean));
    const std::size_t n = sample_count(duration_s, cfg.sample_rate_hz);
    p.clean.samples[0].resize(n);
    p.artifact.samples[0].resize(n);
    p.contaminated = p.clean;
    for (std::size_t t = 0; t < n; ++t) p.contaminated.samples[0][t] = p.clean.samples[0][t] + p.artifact.samples[0][t];
    return p;
}

SynthDatasets make_datasets(const SynthConfig& cfg, std::size_t n_train_a, std::size_t n_train_b,
                            std::size_t n_eval) {
    cfg.validate();
    if (n_train_a == 0 || n_train_b == 0 || n_eval == 0) {
        throw ConfigError("synth-data", "window counts must be >= 1 (got A=" + std::to_string(n_train_a) +
                                            ", B=" + std::to_string(n_train_b) + ", eval=" + std::to_string(n_eval) +
                                            ")");
    }
    SynthDatasets out;
    out.seeds = derive_seeds(cfg.seed);
    const auto& s = out.seeds;

    ContaminatedPair a = make_contaminated(cfg, s.a_clean, s.a_artifact, static_cast<double>(n_train_a));
    out.a = segment(a.contaminated, 1.0, std::nullopt, "A");
    out.scale = out.a.scale;

    SynthConfig cb = cfg;
    cb.duration_s = std::max(2.0, static_cast<double>(n_train_b));
    cb.seed = s.b_clean;
    Recording b = gen_clean(cb);
    b.samples[0].resize(sample_count(static_cast<double>(n_train_b), cfg.sample_rate_hz));
    out.b = segment(b, 1.0, out.scale, "B");

    out.eval = make_contaminated(cfg, s.eval_clean, s.eval_artifact, static_cast<double>(n_eval));
    out.eval_contaminated = segment(out.eval.contaminated, 1.0, out.scale, "eval");
    out.eval_clean = segment(out.eval.clean, 1.0, out.scale, "eval_clean");

    out.manifest = nlohmann::json{
        {"config", cfg},
        {"scale", out.scale},
        {"datasets",
         {{{"role", "A"}, {"windows", n_train_a}, {"seeds", {{"clean", s.a_clean}, {"artifact", s.a_artifact}}}},
          {{"role", "B"}, {"windows", n_train_b}, {"seeds", {{"clean", s.b_clean}}}},
          {{"role", "eval"},
           {"windows", n_eval},
           {"seeds", {{"clean", s.eval_clean}, {"artifact", s.eval_artifact}}}}}}};
    return out;
}

} // namespace ssrgan

#pragma once

#include <cmath>

#include "ssrgan/metrics.hpp"
#include "ssrgan/signal.hpp"
#include "ssrgan/synth.hpp"

namespace testing {

inline ssrgan::Recording minus(const ssrgan::Recording& a, const ssrgan::Recording& b) {
    ssrgan::Recording r = a;
    for (std::size_t c = 0; c < a.channels(); ++c)
        for (std::size_t t = 0; t < a.length(); ++t) r.samples[c][t] -= b.samples[c][t];
    return r;
}

/// Welch (2 s segments) power summed over [lo, hi] Hz, all channels.
inline double band_power(const ssrgan::Recording& r, double lo, double hi) {
    const ssrgan::Psd p = ssrgan::psd_welch(r, 2.0, 0.5);
    double s = 0.0;
    for (const auto& ch : p.power)
        for (std::size_t i = 0; i < p.freq_hz.size(); ++i)
            if (p.freq_hz[i] >= lo && p.freq_hz[i] <= hi) s += ch[i];
    return s;
}

struct AasProbe {
    double reduction_db = 0.0;
    std::size_t period = 0;
};

/// AAS on clean + synthetic BCG with the given beat jitter (no amplitude jitter):
/// artifact power over residual power (cleaned - clean) in 0.5..20 Hz.
inline AasProbe aas_reduction(double jitter_ms, std::uint64_t seed, double seconds = 120.0) {
    ssrgan::SynthConfig c;
    c.beat_jitter_ms = jitter_ms;
    c.amplitude_jitter = 0.0;
    c.seed = seed;
    const ssrgan::SynthSeeds s = ssrgan::derive_seeds(seed);
    const ssrgan::ContaminatedPair pr = ssrgan::make_contaminated(c, s.eval_clean, s.eval_artifact, seconds);
    const ssrgan::AasResult res = ssrgan::aas_baseline(pr.contaminated);
    const double resid = band_power(minus(res.cleaned, pr.clean), 0.5, 20.0);
    return {10.0 * std::log10(band_power(pr.artifact, 0.5, 20.0) / resid), res.period_samples[0]};
}

} // namespace testing

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "ssrgan/metrics.hpp"
#include "ssrgan/signal.hpp"
#include "support.hpp"

using namespace ssrgan;

namespace {

constexpr double kPi = std::numbers::pi;

Recording sine(double f, double fs, double seconds, double amp = 1.0, double phase = 0.0) {
    const auto n = static_cast<std::size_t>(std::llround(seconds * fs));
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) x[t] = amp * std::sin(2.0 * kPi * f * t / fs + phase);
    return Recording(fs, {x});
}

Recording noise(std::size_t channels, std::size_t n, std::uint64_t seed, double fs = 250.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    Recording r(fs, std::vector<std::vector<double>>(channels, std::vector<double>(n)));
    for (auto& ch : r.samples)
        for (auto& v : ch) v = d(rng);
    return r;
}

// RMS over the middle half, away from the edges.
double mid_rms(const std::vector<double>& x) {
    const std::size_t a = x.size() / 4, b = 3 * x.size() / 4;
    double s = 0.0;
    for (std::size_t i = a; i < b; ++i) s += x[i] * x[i];
    return std::sqrt(s / static_cast<double>(b - a));
}

double db(double ratio) { return 20.0 * std::log10(ratio); }

std::size_t peak_bin(const Psd& p) {
    const auto& v = p.power[0];
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

} // namespace

TEST_CASE("bandpass sine probes") {
    const double in_rms = 1.0 / std::sqrt(2.0);
    const Recording pass = bandpass(sine(10.0, 250.0, 20.0), 0.1, 70.0);
    CHECK(std::abs(db(mid_rms(pass.samples[0]) / in_rms)) <= 1.0);

    const Recording stop = bandpass(sine(100.0, 250.0, 20.0), 0.1, 70.0);
    CHECK(db(mid_rms(stop.samples[0]) / in_rms) <= -20.0);

    const Recording dc = bandpass(Recording(250.0, {std::vector<double>(5000, 3.0)}), 0.1, 70.0);
    CHECK(db(mid_rms(dc.samples[0]) / 3.0) <= -20.0);
}

TEST_CASE("bandpass is linear, time-invariant and zero-phase") {
    const Recording x1 = noise(2, 3000, 1), x2 = noise(2, 3000, 2);
    Recording mix = x1;
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t t = 0; t < 3000; ++t) mix.samples[c][t] = 2.0 * x1.samples[c][t] - 0.5 * x2.samples[c][t];
    const Recording f1 = bandpass(x1, 0.5, 40.0), f2 = bandpass(x2, 0.5, 40.0), fm = bandpass(mix, 0.5, 40.0);
    double err = 0.0, ref = 0.0;
    for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t t = 0; t < 3000; ++t) {
            const double want = 2.0 * f1.samples[c][t] - 0.5 * f2.samples[c][t];
            err = std::max(err, std::abs(fm.samples[c][t] - want));
            ref = std::max(ref, std::abs(want));
        }
    }
    CHECK(err <= 1e-9 * ref);

    // Shift invariance away from the edges (the two-pass response spans a few thousand samples here).
    const Recording y = noise(1, 12000, 3);
    const std::size_t k = 37;
    Recording shifted(250.0, {std::vector<double>(12000, 0.0)});
    for (std::size_t t = k; t < 12000; ++t) shifted.samples[0][t] = y.samples[0][t - k];
    const Recording fy = bandpass(y, 0.5, 40.0), fs = bandpass(shifted, 0.5, 40.0);
    double shift_err = 0.0;
    for (std::size_t t = 5000; t < 7000; ++t) shift_err = std::max(shift_err, std::abs(fs.samples[0][t] - fy.samples[0][t - k]));
    CHECK(shift_err <= 1e-9);

    // Zero phase: cross-correlation of a filtered sine against the input peaks at lag 0.
    const Recording s = sine(7.0, 250.0, 20.0), fsine = bandpass(s, 0.5, 40.0);
    int best_lag = 99;
    double best = -1e300;
    for (int lag = -10; lag <= 10; ++lag) {
        double acc = 0.0;
        for (std::size_t t = 1000; t < 4000; ++t) acc += s.samples[0][t] * fsine.samples[0][t + lag];
        if (acc > best) {
            best = acc;
            best_lag = lag;
        }
    }
    CHECK(best_lag == 0);
}

TEST_CASE("bandpass rejects bands outside Nyquist") {
    const Recording r = sine(10.0, 250.0, 4.0);
    CHECK_THROWS_AS(bandpass(r, 0.1, 130.0), InvalidArgument);
    CHECK_THROWS_AS(bandpass(r, 50.0, 20.0), InvalidArgument);
    CHECK_THROWS_AS(bandpass(r, -1.0, 20.0), InvalidArgument);
}

TEST_CASE("resample") {
    SUBCASE("5 Hz sine at 5 kHz down to 250 Hz") {
        const Recording out = resample(sine(5.0, 5000.0, 8.0), 250.0);
        CHECK(out.sample_rate_hz == 250.0);
        CHECK(out.length() == 2000);
        const Psd p = psd_welch(out, 4.0, 0.5);
        const double df = p.freq_hz[1] - p.freq_hz[0];
        CHECK(std::abs(p.freq_hz[peak_bin(p)] - 5.0) <= df);
    }
    SUBCASE("constant stays constant") {
        const Recording out = resample(Recording(1000.0, {std::vector<double>(4000, -2.5)}), 250.0);
        for (double v : out.samples[0]) CHECK(v == doctest::Approx(-2.5).epsilon(1e-9));
    }
    SUBCASE("unit factor is the identity") {
        const Recording r = noise(2, 777, 4);
        CHECK(resample(r, 250.0) == r);
    }
    SUBCASE("duration preserved within one output sample") {
        const Recording out = resample(noise(1, 10003, 5, 1000.0), 250.0);
        CHECK(std::abs(out.duration_s() - 10003.0 / 1000.0) <= 1.0 / 250.0);
    }
    SUBCASE("non-integer ratio") {
        CHECK_THROWS_AS(resample(noise(1, 1000, 6, 1000.0), 300.0), UnsupportedError);
    }
}

TEST_CASE("segment and stitch") {
    SUBCASE("window counts") {
        CHECK(segment(noise(1, 2500, 1)).size() == 10);
        CHECK(segment(noise(1, 2625, 1)).size() == 10);
        CHECK(segment(noise(3, 2500, 1)).size() == 30);
        CHECK_THROWS_AS(segment(noise(1, 200, 1)), InvalidArgument);
    }
    SUBCASE("round trip reproduces the covered samples") {
        const Recording r = noise(2, 2625, 2);
        const WindowedDataset ds = segment(r, 1.0);
        CHECK(ds.window_length() == 250);
        const Recording back = stitch(ds);
        REQUIRE(back.length() == 2500);
        for (std::size_t c = 0; c < 2; ++c)
            for (std::size_t t = 0; t < 2500; ++t)
                CHECK(back.samples[c][t] == doctest::Approx(r.samples[c][t]).epsilon(1e-6).scale(1e-12));
    }
    SUBCASE("windows are zero-mean and scaled") {
        Recording r = noise(1, 1000, 3);
        for (auto& v : r.samples[0]) v = 5.0 + 4.0 * v;
        const WindowedDataset ds = segment(r, 1.0, 2.0);
        CHECK(ds.scale == 2.0);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            double m = 0.0;
            for (std::size_t t = 0; t < 250; ++t) m += ds.windows.at(i, 0, t);
            CHECK(std::abs(m / 250.0) <= 1e-12);
        }
    }
    SUBCASE("zero windows give the means only") {
        WindowedDataset ds = segment(noise(1, 1500, 4), 1.0);
        ds.windows.fill(0.0);
        const Recording back = stitch(ds);
        CHECK(back.length() == 6 * 250);
        for (std::size_t t = 0; t < back.length(); ++t) CHECK(back.samples[0][t] == ds.means[t / 250]);
    }
    SUBCASE("missing provenance") {
        WindowedDataset ds = segment(noise(1, 1500, 4), 1.0);
        ds.provenance.pop_back();
        CHECK_THROWS_AS(stitch(ds), ContractError);
    }
}

TEST_CASE("robust scale") {
    const std::vector<std::vector<double>> w{{-1.0, 1.0, -1.0, 1.0}, {-2.0, 2.0, 0.0, 0.0}};
    // |deviations| = {1,1,1,1,2,2,0,0}, median 1.
    CHECK(robust_scale(w) == doctest::Approx(1.4826));
}

TEST_CASE("recording io") {
    testing::TempDir dir("signal");
    Recording r = noise(3, 321, 9);
    r.sample_rate_hz = 250.0;
    SUBCASE("raw round trip is bitwise") {
        Recording f = r;
        for (auto& ch : f.samples)
            for (auto& v : ch) v = static_cast<float>(v);
        write_recording(f, dir.file("x.f32"));
        CHECK(read_recording(dir.file("x.f32")) == f);
    }
    SUBCASE("csv round trip is exact") {
        write_recording(r, dir.file("x.csv"));
        CHECK(read_recording(dir.file("x.csv")) == r);
    }
    SUBCASE("csv with wrong column count names the line") {
        std::ofstream(dir.file("bad.csv")) << "# sample_rate_hz=250\n1,2\n3,4\n5\n6,7\n";
        try {
            read_recording(dir.file("bad.csv"));
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("line 4") != std::string::npos);
        }
    }
    SUBCASE("sidecar length mismatch") {
        write_recording(r, dir.file("y.f32"));
        std::ofstream(dir.file("y.f32.json")) << R"({"channels": 3, "samples_per_channel": 400, "sample_rate_hz": 250})";
        try {
            read_recording(dir.file("y.f32"));
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("samples_per_channel") != std::string::npos);
        }
    }
    SUBCASE("format by extension") {
        CHECK(format_for_path("a/b.csv") == RecordingFormat::csv);
        CHECK(format_for_path("a/b.f32") == RecordingFormat::raw_f32);
    }
}

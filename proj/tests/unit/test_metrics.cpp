#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ssrgan/metrics.hpp"
#include "ssrgan/synth.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace ssrgan;

namespace {

Recording noise(std::size_t channels, std::size_t n, std::uint64_t seed, double sd = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(0.0, sd);
    Recording r(250.0, std::vector<std::vector<double>>(channels, std::vector<double>(n)));
    for (auto& ch : r.samples)
        for (auto& v : ch) v = d(rng);
    return r;
}

Recording scaled(Recording r, double c) {
    for (auto& ch : r.samples)
        for (auto& v : ch) v *= c;
    return r;
}

Recording permuted(const Recording& r) {
    Recording p = r;
    std::reverse(p.samples.begin(), p.samples.end());
    return p;
}

} // namespace

TEST_CASE("inps examples") {
    const Recording x = noise(2, 2000, 1);
    CHECK(inps(x, x) == 0.0);
    CHECK(inps(x, scaled(x, std::pow(10.0, -0.5))) == doctest::Approx(10.0).epsilon(1e-12));

    Recording two = x;
    two.samples[0] = scaled(Recording(250.0, {x.samples[0]}), std::pow(10.0, -0.5)).samples[0];
    two.samples[1] = scaled(Recording(250.0, {x.samples[1]}), 0.1).samples[0];
    CHECK(inps(x, two) == doctest::Approx(15.0).epsilon(1e-12));
    const std::vector<double> per = inps_per_channel(x, two);
    CHECK(per[0] == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(per[1] == doctest::Approx(20.0).epsilon(1e-12));

    CHECK_THROWS_AS(inps(x, scaled(x, 0.0)), NumericalError);
    CHECK_THROWS_AS(inps(x, noise(2, 1999, 2)), InvalidArgument);
}

TEST_CASE("inps laws") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Recording x = noise(1 + seed % 3, 1500, seed), y = noise(1 + seed % 3, 1500, seed + 100, 0.3 * seed);
        CHECK(inps(x, y) == -inps(y, x));
        for (double c : {0.01, 0.5, 3.0, 250.0}) {
            CHECK(std::abs(inps(x, scaled(x, c)) + 20.0 * std::log10(c)) <= 1e-6);
        }
        CHECK(inps(permuted(x), permuted(y)) == doctest::Approx(inps(x, y)).epsilon(1e-14));
    }
}

TEST_CASE("ptpr examples and laws") {
    const Recording x = noise(2, 2500, 3);
    CHECK(ptpr(x, x) == 1.0);
    CHECK(ptpr(x, scaled(x, 0.5)) == doctest::Approx(2.0).epsilon(1e-14));
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Recording a = noise(3, 1250, seed), b = noise(3, 1250, seed + 7, 0.2 * seed);
        CHECK(std::abs(ptpr(a, b) * ptpr(b, a) - 1.0) <= 1e-9);
        CHECK(ptpr(permuted(a), permuted(b)) == doctest::Approx(ptpr(a, b)).epsilon(1e-14));
    }
    CHECK_THROWS_AS(ptpr(x, scaled(x, 0.0)), NumericalError);
}

TEST_CASE("ptpr matches a brute-force window oracle") {
    const Recording a = noise(2, 1000, 4), b = noise(2, 1000, 5, 0.4);
    auto v = [](const Recording& r) {
        double total = 0.0;
        for (const auto& ch : r.samples) {
            double s = 0.0;
            for (std::size_t k = 0; k < 4; ++k) {
                double lo = 1e300, hi = -1e300;
                for (std::size_t t = 250 * k; t < 250 * (k + 1); ++t) {
                    lo = std::min(lo, ch[t]);
                    hi = std::max(hi, ch[t]);
                }
                s += hi - lo;
            }
            total += s / 4.0;
        }
        return total;
    };
    CHECK(ptpr(a, b) == doctest::Approx(v(a) / v(b)).epsilon(1e-13));
    const std::vector<double> p = mean_peak_to_peak(a);
    CHECK(p.size() == 2);
}

TEST_CASE("pearson") {
    const Recording x = noise(2, 800, 6);
    CHECK(pearson(x, x) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(pearson(x, scaled(x, -2.0)) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(std::abs(pearson(x, noise(2, 800, 7))) < 0.1);
}

TEST_CASE("welch psd") {
    SUBCASE("10 Hz sine dominates its neighbours") {
        std::vector<double> s(250 * 16);
        for (std::size_t t = 0; t < s.size(); ++t) s[t] = std::sin(2.0 * std::numbers::pi * 10.0 * t / 250.0);
        const Psd p = psd_welch(Recording(250.0, {s}), 2.0, 0.5);
        const auto& v = p.power[0];
        const std::size_t k = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
        CHECK(p.freq_hz[k] == doctest::Approx(10.0));
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i + 2 < k || i > k + 2) CHECK(10.0 * std::log10(v[k] / std::max(v[i], 1e-300)) >= 20.0);
        }
    }
    SUBCASE("white noise is flat") {
        const Recording w = noise(1, 250 * 600, 8);
        const Psd p = psd_welch(w, 1.0, 0.5);
        // Density of unit white noise at fs = 250 is 2 / fs one-sided.
        for (std::size_t i = 1; i + 1 < p.freq_hz.size(); ++i) {
            CHECK(std::abs(10.0 * std::log10(p.power[0][i] / (2.0 / 250.0))) <= 3.0);
        }
    }
    SUBCASE("parseval") {
        const Recording w = noise(1, 250 * 200, 9);
        const Psd p = psd_welch(w, 2.0, 0.5);
        double area = 0.0;
        for (double v : p.power[0]) area += v * (p.freq_hz[1] - p.freq_hz[0]);
        double var = 0.0;
        for (double v : w.samples[0]) var += v * v;
        var /= static_cast<double>(w.length());
        CHECK(area == doctest::Approx(var).epsilon(0.05));
    }
    SUBCASE("zero signal") {
        const Psd p = psd_welch(Recording(250.0, {std::vector<double>(1000, 0.0)}));
        for (double v : p.power[0]) CHECK(v == 0.0);
    }
    SUBCASE("too short") {
        CHECK_THROWS_AS(psd_welch(Recording(250.0, {std::vector<double>(100, 0.0)}), 1.0), InvalidArgument);
    }
}

TEST_CASE("evaluate report") {
    const Recording x = noise(2, 1000, 10), y = scaled(x, 0.5);
    const MetricsReport r = evaluate(x, y, x);
    CHECK(r.channels == 2);
    CHECK(r.ptpr == doctest::Approx(2.0));
    CHECK(r.inps_db == doctest::Approx(20.0 * std::log10(2.0)));
    REQUIRE(r.clean_correlation.has_value());
    CHECK(*r.clean_correlation == doctest::Approx(1.0));
    const auto j = r.to_json();
    CHECK(j.contains("inps_db"));
}

TEST_CASE("aas baseline") {
    SUBCASE("periodic artifact is removed") {
        const testing::AasProbe p = testing::aas_reduction(0.0, 1);
        MESSAGE("jitter-free reduction " << p.reduction_db << " dB");
        CHECK(p.period == 208);
        CHECK(p.reduction_db >= 20.0);
        const testing::AasProbe j = testing::aas_reduction(30.0, 1);
        MESSAGE("30 ms jitter reduction " << j.reduction_db << " dB");
        CHECK(j.reduction_db < p.reduction_db);
    }
    SUBCASE("clean-only input passes through") {
        SynthConfig c;
        c.seed = 2;
        const Recording clean = gen_clean(c);
        const AasResult r = aas_baseline(clean);
        CHECK(pearson(clean, r.cleaned) >= 0.95);
    }
    SUBCASE("non-periodic input") {
        CHECK_THROWS_AS(aas_baseline(Recording(250.0, {std::vector<double>(5000, 1.0)})), PeriodDetectionError);
        // A slow drift has a monotone autocorrelation over the search range.
        std::vector<double> drift(7500);
        for (std::size_t t = 0; t < drift.size(); ++t) drift[t] = 100.0 * std::sin(2.0 * std::numbers::pi * 0.1 * t / 250.0);
        CHECK_THROWS_AS(aas_baseline(Recording(250.0, {drift})), PeriodDetectionError);
    }
}

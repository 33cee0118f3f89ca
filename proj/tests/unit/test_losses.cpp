#include <doctest.h>

#include <cmath>
#include <limits>

#include "ssrgan/gradcheck.hpp"
#include "ssrgan/losses.hpp"
#include "ssrgan/model.hpp"
#include "ssrgan/verify.hpp"
#include "support.hpp"

using namespace ssrgan;
using testing::randn;

namespace {

Tensor<double> plus(const Tensor<double>& t, double c) {
    Tensor<double> o = t;
    for (auto& v : o.data()) v += c;
    return o;
}

MmdConfig single_kernel(double sigma) {
    MmdConfig c;
    c.multipliers = {1.0};
    c.fixed_bandwidth = sigma;
    return c;
}

// Direct V-statistic with one Gaussian kernel.
double mmd_oracle(const Tensor<double>& x, const Tensor<double>& y, double sigma) {
    const std::size_t d = x.shape().channels * x.shape().length;
    auto k = [&](const Tensor<double>& p, std::size_t i, const Tensor<double>& q, std::size_t j) {
        double s = 0.0;
        for (std::size_t f = 0; f < d; ++f) s += (p[i * d + f] - q[j * d + f]) * (p[i * d + f] - q[j * d + f]);
        return std::exp(-s / (2.0 * sigma * sigma));
    };
    const std::size_t n = x.shape().batch, m = y.shape().batch;
    double xx = 0, yy = 0, xy = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) xx += k(x, i, x, j);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) yy += k(y, i, y, j);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) xy += k(x, i, y, j);
    return xx / double(n * n) + yy / double(m * m) - 2.0 * xy / double(n * m);
}

} // namespace

TEST_CASE("cycle loss examples") {
    Tape<double> t;
    const Tensor<double> a = randn({2, 1, 9}, 1), b = randn({2, 1, 9}, 2);
    Var<double> va = t.constant(a), vb = t.constant(b);
    CHECK(cycle_loss(va, va, vb, vb).item() == 0.0);
    CHECK(cycle_loss(va, t.constant(plus(a, 1.0)), vb, vb).item() == doctest::Approx(1.0).epsilon(1e-14));

    const Tensor<double> ra = randn({2, 1, 9}, 3), rb = randn({2, 1, 9}, 4);
    double oracle = 0.0, ob = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        oracle += std::abs(ra[i] - a[i]);
        ob += std::abs(rb[i] - b[i]);
    }
    oracle = oracle / a.size() + ob / b.size();
    CHECK(cycle_loss(va, t.constant(ra), vb, t.constant(rb)).item() == doctest::Approx(oracle).epsilon(1e-13));
    CHECK_THROWS_AS(cycle_loss(va, t.constant(randn({2, 1, 8}, 5)), vb, vb), InvalidArgument);
}

TEST_CASE("lsgan examples") {
    Tape<double> t;
    Var<double> ones = t.constant(Tensor<double>(Shape{4, 1, 1}, 1.0));
    Var<double> zeros = t.constant(Tensor<double>(Shape{4, 1, 1}, 0.0));
    CHECK(lsgan_loss<double>(ones, zeros, GanRole::discriminator).item() == 0.0);
    CHECK(lsgan_loss<double>(std::nullopt, ones, GanRole::generator).item() == 0.0);
    CHECK(lsgan_loss<double>(zeros, ones, GanRole::discriminator).item() == 2.0);
    CHECK(lsgan_loss<double>(std::nullopt, zeros, GanRole::generator).item() == 1.0);
    CHECK_THROWS_AS(lsgan_loss<double>(std::nullopt, zeros, GanRole::discriminator), InvalidArgument);
}

TEST_CASE("ae loss examples") {
    Tape<double> t;
    const Tensor<double> a = randn({3, 1, 7}, 1), b = randn({3, 1, 7}, 2);
    Var<double> va = t.constant(a), vb = t.constant(b);
    CHECK(ae_loss(va, va, vb, vb).item() == 0.0);
    CHECK(ae_loss(t.constant(plus(a, 2.0)), va, vb, vb).item() == doctest::Approx(4.0).epsilon(1e-13));
    const Tensor<double> ra = randn({3, 1, 7}, 3), rb = randn({3, 1, 7}, 4);
    double sa = 0, sb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sa += (ra[i] - a[i]) * (ra[i] - a[i]);
        sb += (rb[i] - b[i]) * (rb[i] - b[i]);
    }
    CHECK(ae_loss(t.constant(ra), va, t.constant(rb), vb).item() ==
          doctest::Approx(sa / a.size() + sb / b.size()).epsilon(1e-13));
}

TEST_CASE("mk_mmd examples") {
    SUBCASE("identical sets give zero") {
        const Tensor<double> x = randn({6, 2, 5}, 1);
        CHECK(std::abs(mk_mmd_value(x, x, MmdConfig{})) <= 1e-15);
        CHECK(std::abs(mk_mmd_value(x, x, single_kernel(0.7))) <= 1e-15);
    }
    SUBCASE("two-point closed form") {
        for (double d : {0.1, 0.5, 1.0, 3.0}) {
            for (double sigma : {0.3, 1.0, 2.5}) {
                const Tensor<double> x(Shape{1, 1, 1}, 0.0), y(Shape{1, 1, 1}, d);
                const double expected = 2.0 * (1.0 - std::exp(-d * d / (2.0 * sigma * sigma)));
                CHECK(std::abs(mk_mmd_value(x, y, single_kernel(sigma)) - expected) <= 1e-12);
            }
        }
    }
    SUBCASE("matches a direct V-statistic") {
        const Tensor<double> x = randn({5, 2, 3}, 2), y = randn({7, 2, 3}, 3, 1.5);
        CHECK(mk_mmd_value(x, y, single_kernel(1.7)) == doctest::Approx(mmd_oracle(x, y, 1.7)).epsilon(1e-12));
    }
    SUBCASE("nonnegative and exactly symmetric") {
        std::mt19937_64 rng(4);
        for (int trial = 0; trial < 20; ++trial) {
            const Tensor<double> x = randn({2 + trial % 5, 1, 4}, 10 + trial);
            const Tensor<double> y = randn({3 + trial % 3, 1, 4}, 50 + trial, 0.5 + 0.1 * trial);
            MmdConfig c;
            if (trial % 2) c.multipliers = {0.5, 3.0};
            const double xy = mk_mmd_value(x, y, c), yx = mk_mmd_value(y, x, c);
            CHECK(xy >= 0.0);
            CHECK(xy == yx);
        }
    }
    SUBCASE("small-bandwidth limit approaches 2 per kernel for disjoint sets") {
        const Tensor<double> x = randn({4, 1, 3}, 5), y = plus(randn({5, 1, 3}, 6), 10.0);
        MmdConfig c;
        c.multipliers = {1.0, 2.0, 4.0};
        c.fixed_bandwidth = 1e-6;
        const double v = mk_mmd_value(x, y, c);
        // V-statistic: the diagonal survives, so each kernel tends to 1/n + 1/m.
        CHECK(v == doctest::Approx(3.0 * (1.0 / 4 + 1.0 / 5)).epsilon(1e-12));
        const Tensor<double> one_x = randn({1, 1, 3}, 7), one_y = plus(randn({1, 1, 3}, 8), 10.0);
        CHECK(mk_mmd_value(one_x, one_y, c) == doctest::Approx(6.0).epsilon(1e-12));
    }
    SUBCASE("errors") {
        const Tensor<double> x = randn({3, 1, 4}, 1);
        CHECK_THROWS_AS(mk_mmd_value(x, Tensor<double>(Shape{0, 1, 4}), MmdConfig{}), InvalidArgument);
        CHECK_THROWS_AS(mk_mmd_value(x, randn({3, 1, 5}, 2), MmdConfig{}), InvalidArgument);
        MmdConfig bad;
        bad.multipliers = {};
        CHECK_THROWS_AS(bad.validate(), ConfigError);
        bad.multipliers = {1.0, -2.0};
        CHECK_THROWS_AS(bad.validate(), ConfigError);
    }
}

TEST_CASE("mk_mmd gradient including the median bandwidth") {
    const Tensor<double> y = randn({5, 2, 3}, 12);
    const GradCheckResult r = finite_diff_check<double>(
        [&](Tape<double>& t, Var<double> x) { return ad::scale(mk_mmd(x, t.constant(y), MmdConfig{}), 10.0); },
        randn({4, 2, 3}, 11), 1e-6);
    CHECK(r.checked + r.skipped_nonsmooth == 24);
    CHECK(r.max_rel_error <= 1e-6);
}

TEST_CASE("middle content loss") {
    Tape<double> t;
    const Tensor<double> p = randn({4, 3, 6}, 1);
    Var<double> vp = t.constant(p);
    SUBCASE("matching features give zero") {
        const auto terms = middle_content_loss(vp, vp, vp, vp, MmdConfig{});
        CHECK(terms.mse.item() == 0.0);
        CHECK(std::abs(terms.mmd.item()) <= 1e-15);
    }
    SUBCASE("mse part matches a brute-force oracle") {
        const Tensor<double> q = randn({4, 3, 6}, 2), r = randn({4, 3, 6}, 3), s = randn({4, 3, 6}, 4);
        const auto terms = middle_content_loss(vp, t.constant(q), t.constant(r), t.constant(s), MmdConfig{});
        double o1 = 0, o2 = 0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            o1 += (p[i] - q[i]) * (p[i] - q[i]);
            o2 += (r[i] - s[i]) * (r[i] - s[i]);
        }
        CHECK(terms.mse.item() == doctest::Approx((o1 + o2) / p.size()).epsilon(1e-13));
        const double mmd = mk_mmd_value(p, r, MmdConfig{});
        CHECK(terms.mmd.item() == doctest::Approx(2.0 * mmd).epsilon(1e-12));
    }
    SUBCASE("shape mismatch") {
        CHECK_THROWS_AS(middle_content_loss(vp, t.constant(randn({4, 3, 5}, 2)), vp, vp, MmdConfig{}),
                        InvalidArgument);
    }
}

TEST_CASE("total loss arithmetic") {
    LossParts parts{0.3, 0.4, 1.1, 0.9, 0.25, 0.6, 0.05};
    LossWeights zero{0, 0, 0, 0, 0, 1.0};
    CHECK(total_loss(parts, zero) == 0.0);

    LossWeights only = zero;
    only.lambda_ae = 3.0;
    CHECK(total_loss(parts, only) == doctest::Approx(0.75));
    only = zero;
    only.lambda_mid_mmd = 7.0;
    CHECK(total_loss(parts, only) == doctest::Approx(0.35));

    const LossWeights d{};
    const double hand = 10.0 * (0.3 + 0.4) + 1.0 * (1.1 + 0.9) + 0.25 + 0.6 + 0.5 * 0.05;
    CHECK(total_loss(parts, d) == doctest::Approx(hand).epsilon(1e-14));

    LossWeights e = d;
    e.forward_emphasis = 2.0;
    CHECK(total_loss(parts, e) == doctest::Approx(hand + 10.0 * 0.3 + 1.1).epsilon(1e-14));

    LossParts bad = parts;
    bad.mid_mmd = std::numeric_limits<double>::quiet_NaN();
    try {
        total_loss(bad, d);
        FAIL("expected NumericalError");
    } catch (const NumericalError& err) {
        CHECK(std::string(err.what()).find("mid_mmd") != std::string::npos);
    }
}

TEST_CASE("loss weights validation") {
    LossWeights w;
    w.lambda_gan = -1.0;
    CHECK_THROWS_AS(w.validate(), ConfigError);
    w.lambda_gan = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(w.validate(), ConfigError);
}

TEST_CASE("composed losses pass finite differences on the tiny model") {
    GradientSuiteOptions o;
    o.seeds = {1};
    o.include_default_model = false;
    const SuiteReport r = gradient_suite(o);
    for (const CheckOutcome& c : r.checks) {
        INFO(c.name << " err " << c.value << " " << c.detail);
        CHECK(c.passed);
    }
}

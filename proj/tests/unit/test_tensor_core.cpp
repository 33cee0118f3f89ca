#include <doctest.h>

#include <cmath>

#include "ssrgan/autodiff.hpp"
#include "ssrgan/conv.hpp"
#include "ssrgan/gradcheck.hpp"
#include "ssrgan/optim.hpp"
#include "support.hpp"

using namespace ssrgan;
using testing::randn;

namespace {

Tensor<double> row(std::vector<double> v) {
    const std::size_t n = v.size();
    return Tensor<double>(Shape{1, 1, n}, std::move(v));
}

} // namespace

TEST_CASE("tensor rejects mismatched data length") {
    CHECK_THROWS_AS(Tensor<double>(Shape{1, 2, 3}, std::vector<double>(5)), InvalidArgument);
    Tensor<double> t(Shape{2, 1, 3}, 1.5);
    CHECK(t.size() == 6);
    CHECK_THROWS_AS(t.item(), ContractError);
}

TEST_CASE("conv output length formula") {
    const ConvSpec same3 = ConvSpec::same(1, 1, 3), down{1, 16, 15, 2, 7}, pair{1, 1, 2, 1, 0}, wide{1, 1, 5, 1, 0};
    CHECK(same3.output_length(10) == 10);
    CHECK(down.output_length(250) == 125);
    CHECK(pair.output_length(3) == 2);
    CHECK_THROWS_AS(wide.output_length(3), InvalidArgument);
}

TEST_CASE("conv1d examples") {
    const Tensor<double> x = row({1, 2, 3});
    SUBCASE("delta kernel with same padding is the identity") {
        const ConvSpec spec = ConvSpec::same(1, 1, 3);
        const Tensor<double> k(spec.kernel_shape(), std::vector<double>{0, 1, 0});
        const Tensor<double> y = conv1d<double>(x, k, nullptr, spec);
        CHECK(y.shape() == x.shape());
        for (std::size_t i = 0; i < 3; ++i) CHECK(y[i] == x[i]);
    }
    SUBCASE("two-tap box kernel, no padding") {
        const ConvSpec spec{1, 1, 2, 1, 0};
        const Tensor<double> k(spec.kernel_shape(), std::vector<double>{1, 1});
        const Tensor<double> bias(spec.bias_shape(), 0.0);
        const Tensor<double> y = conv1d<double>(x, k, &bias, spec);
        REQUIRE(y.size() == 2);
        CHECK(y[0] == 3.0);
        CHECK(y[1] == 5.0);
    }
    SUBCASE("zero input and zero bias give zeros") {
        const ConvSpec spec{1, 3, 5, 2, 2};
        const Tensor<double> k = randn(spec.kernel_shape(), 3);
        const Tensor<double> bias(spec.bias_shape(), 0.0);
        const Tensor<double> y = conv1d<double>(Tensor<double>(Shape{2, 1, 11}), k, &bias, spec);
        for (double v : y.data()) CHECK(v == 0.0);
    }
}

TEST_CASE("conv1d matches a direct sliding-dot-product oracle") {
    const ConvSpec spec{3, 2, 4, 3, 2};
    const std::size_t len = 17;
    const Tensor<double> x = randn({2, 3, len}, 1);
    const Tensor<double> k = randn(spec.kernel_shape(), 2);
    const Tensor<double> b = randn(spec.bias_shape(), 3);
    const Tensor<double> y = conv1d<double>(x, k, &b, spec);
    const std::size_t out = spec.output_length(len);
    for (std::size_t n = 0; n < 2; ++n) {
        for (std::size_t o = 0; o < 2; ++o) {
            for (std::size_t t = 0; t < out; ++t) {
                double s = b[o];
                for (std::size_t i = 0; i < 3; ++i) {
                    for (std::size_t j = 0; j < 4; ++j) {
                        const long src = static_cast<long>(t * 3 + j) - 2;
                        if (src >= 0 && src < static_cast<long>(len)) s += k.at(o, i, j) * x.at(n, i, src);
                    }
                }
                CHECK(y.at(n, o, t) == doctest::Approx(s).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("conv1d rejects channel mismatch naming the dimension") {
    const ConvSpec spec{2, 1, 3, 1, 1};
    const Tensor<double> k = randn(spec.kernel_shape(), 1);
    try {
        conv1d<double>(Tensor<double>(Shape{1, 3, 8}), k, nullptr, spec);
        FAIL("expected InvalidArgument");
    } catch (const InvalidArgument& e) {
        CHECK(std::string(e.what()).find("channel") != std::string::npos);
    }
}

TEST_CASE("conv1d is linear in x") {
    const ConvSpec spec{2, 3, 5, 2, 1};
    const Tensor<double> k = randn(spec.kernel_shape(), 4);
    const Tensor<double> x1 = randn({2, 2, 20}, 5), x2 = randn({2, 2, 20}, 6);
    Tensor<double> mix(x1.shape());
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 1.5 * x1[i] - 0.25 * x2[i];
    const Tensor<double> y1 = conv1d<double>(x1, k, nullptr, spec), y2 = conv1d<double>(x2, k, nullptr, spec);
    const Tensor<double> ym = conv1d<double>(mix, k, nullptr, spec);
    for (std::size_t i = 0; i < ym.size(); ++i) CHECK(ym[i] == doctest::Approx(1.5 * y1[i] - 0.25 * y2[i]).epsilon(1e-13));
}

TEST_CASE("conv1d_adjoint is the exact transpose") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 40; ++trial) {
        std::uniform_int_distribution<std::size_t> ch(1, 5), kk(1, 11), st(1, 4);
        ConvSpec spec{ch(rng), ch(rng), kk(rng), st(rng), 0};
        spec.padding = std::uniform_int_distribution<std::size_t>(0, spec.kernel_size)(rng);
        const std::size_t len = std::uniform_int_distribution<std::size_t>(spec.kernel_size, 50)(rng);
        const Tensor<double> k = randn(spec.kernel_shape(), 100 + trial);
        const Tensor<double> x = randn({2, spec.in_channels, len}, 200 + trial);
        const Tensor<double> y = randn({2, spec.out_channels, spec.output_length(len)}, 300 + trial);
        const double lhs = dot(conv1d<double>(x, k, nullptr, spec), y);
        const double rhs = dot(x, conv1d_adjoint<double>(y, k, spec, len));
        CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(std::abs(lhs), std::abs(rhs)));
    }
}

TEST_CASE("conv1d_adjoint examples and errors") {
    const ConvSpec spec = ConvSpec::same(1, 1, 3);
    const Tensor<double> delta(spec.kernel_shape(), std::vector<double>{0, 1, 0});
    const Tensor<double> y = row({4, -1, 2.5});
    const Tensor<double> x = conv1d_adjoint<double>(y, delta, spec, 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(x[i] == y[i]);

    const ConvSpec s2{2, 3, 4, 2, 1};
    const Tensor<double> k = randn(s2.kernel_shape(), 9);
    const Tensor<double> z = conv1d_adjoint<double>(Tensor<double>(Shape{1, 3, s2.output_length(9)}), k, s2, 9);
    CHECK(z.shape() == Shape{1, 2, 9});
    for (double v : z.data()) CHECK(v == 0.0);
    // Length of y inconsistent with the original input length.
    CHECK_THROWS_AS(conv1d_adjoint<double>(Tensor<double>(Shape{1, 3, 7}), k, s2, 9), InvalidArgument);
}

TEST_CASE("leaky_relu examples") {
    auto run = [](std::vector<double> v, double slope) {
        Tape<double> t;
        return ad::leaky_relu(t.constant(row(std::move(v))), slope).value();
    };
    const Tensor<double> a = run({-1, 0, 2}, 0.2);
    CHECK(a[0] == doctest::Approx(-0.2));
    CHECK(a[1] == 0.0);
    CHECK(a[2] == 2.0);
    const Tensor<double> id = run({-3, 3}, 1.0);
    CHECK(id[0] == -3.0);
    const Tensor<double> relu = run({-3, 3}, 0.0);
    CHECK(relu[0] == 0.0);
    CHECK(relu[1] == 3.0);
}

TEST_CASE("backward examples") {
    SUBCASE("grad of sum is ones") {
        Tape<double> t;
        Var<double> x = t.input(row({1, -2, 3, 4}));
        t.backward(ad::sum(x));
        const Tensor<double> g = t.grad(x);
        for (double v : g.data()) CHECK(v == 1.0);
    }
    SUBCASE("parameter grads accumulate over two calls") {
        Parameter<double> p("p", randn({1, 1, 5}, 3));
        Tape<double> t;
        Var<double> loss = ad::sum_squares(t.parameter(p));
        t.backward(loss);
        const Tensor<double> once = p.grad;
        t.backward(loss);
        for (std::size_t i = 0; i < 5; ++i) CHECK(p.grad[i] == 2.0 * once[i]);
    }
    SUBCASE("non-scalar loss is a contract violation") {
        Tape<double> t;
        Var<double> x = t.input(row({1, 2}));
        CHECK_THROWS_AS(t.backward(x), ContractError);
    }
    SUBCASE("sum(conv^2)/2 matches central differences") {
        const ConvSpec spec{2, 3, 5, 2, 2};
        const Tensor<double> k = randn(spec.kernel_shape(), 8);
        const GradCheckResult r = finite_diff_check<double>(
            [&](Tape<double>& t, Var<double> x) {
                return ad::scale(ad::sum_squares(ad::conv1d<double>(x, t.constant(k), std::nullopt, spec)), 0.5);
            },
            randn({2, 2, 13}, 9), 1e-5);
        CHECK(r.checked == 52);
        CHECK(r.max_rel_error <= 1e-8);
    }
}

TEST_CASE("finite_diff_check examples") {
    const Tensor<double> x = randn({2, 3, 4}, 21);
    const GradCheckResult quad = finite_diff_check<double>(
        [](Tape<double>&, Var<double> v) { return ad::scale(ad::sum_squares(v), 0.5); }, x, 1e-5);
    CHECK(quad.max_rel_error <= 1e-8);
    const GradCheckResult constant = finite_diff_check<double>(
        [](Tape<double>& t, Var<double>) { return t.constant(Tensor<double>::scalar(3.0)); }, x, 1e-5);
    CHECK(constant.max_rel_error == 0.0);
    CHECK(constant.checked == x.size());
}

TEST_CASE("adam step examples") {
    SUBCASE("zero grad from fresh state leaves params unchanged") {
        Parameter<double> p("p", randn({1, 1, 4}, 1));
        const Tensor<double> before = p.value;
        std::vector<Parameter<double>*> ps{&p};
        AdamState<double> st = make_adam_state<double>(ps, AdamConfig{});
        adam_step<double>(ps, st);
        CHECK(p.value == before);
        CHECK(st.step == 1);
    }
    SUBCASE("zero grad decays the moments") {
        Parameter<double> p("p", randn({1, 1, 4}, 1));
        std::vector<Parameter<double>*> ps{&p};
        AdamState<double> st = make_adam_state<double>(ps, AdamConfig{});
        st.m[0].fill(0.5);
        st.v[0].fill(0.25);
        adam_step<double>(ps, st);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(st.m[0][i] == doctest::Approx(0.5 * 0.5));
            CHECK(st.v[0][i] == doctest::Approx(0.25 * 0.999));
        }
    }
    SUBCASE("first step with constant grad moves by lr") {
        Parameter<double> p("p", Tensor<double>(Shape{1, 1, 3}, 1.0));
        Parameter<double> q("q", Tensor<double>(Shape{1, 1, 2}, -1.0));
        p.grad.fill(3.0);
        q.grad.fill(-0.01);
        std::vector<Parameter<double>*> ps{&p, &q};
        AdamConfig cfg;
        cfg.lr = 1e-3;
        AdamState<double> st = make_adam_state<double>(ps, cfg);
        adam_step<double>(ps, st);
        for (double v : p.value.data()) CHECK(v == doctest::Approx(1.0 - 1e-3).epsilon(1e-9));
        for (double v : q.value.data()) CHECK(v == doctest::Approx(-1.0 + 1e-3).epsilon(1e-6));
    }
    SUBCASE("non-finite grad is rejected without modification") {
        Parameter<double> p("weights", Tensor<double>(Shape{1, 1, 2}, 1.0));
        p.grad[1] = std::nan("");
        std::vector<Parameter<double>*> ps{&p};
        AdamState<double> st = make_adam_state<double>(ps, AdamConfig{});
        CHECK_THROWS_AS(adam_step<double>(ps, st), NumericalError);
        CHECK(p.value[0] == 1.0);
        CHECK(st.step == 0);
    }
}

TEST_CASE("gradient clipping rescales to the bound") {
    Parameter<double> p("p", Tensor<double>(Shape{1, 1, 2}));
    p.grad[0] = 3.0;
    p.grad[1] = 4.0;
    std::vector<Parameter<double>*> ps{&p};
    CHECK(clip_grad_norm<double>(ps, 1.0) == doctest::Approx(5.0));
    CHECK(global_grad_norm<double>(ps) == doctest::Approx(1.0));
    CHECK(clip_grad_norm<double>(ps, 10.0) == doctest::Approx(1.0));
    CHECK(p.grad[0] == doctest::Approx(0.6));
}

TEST_CASE("determinism: same inputs give bitwise identical outputs") {
    const ConvSpec spec{2, 4, 7, 2, 3};
    const Tensor<double> k = randn(spec.kernel_shape(), 1), x = randn({3, 2, 40}, 2);
    const Tensor<double> a = conv1d<double>(x, k, nullptr, spec), b = conv1d<double>(x, k, nullptr, spec);
    CHECK(a == b);
}

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "ssrgan/trainer.hpp"
#include "ssrgan/verify.hpp"
#include "support.hpp"

using namespace ssrgan;
using testing::randn;

namespace {

// Unpaired toy domains on the tiny model: A = sine + spikes, B = sine.
struct Toy {
    Tensor<double> a, b;
};

Toy toy_data(std::size_t n, std::size_t w) {
    Toy d{Tensor<double>(Shape{n, 1, w}), Tensor<double>(Shape{n, 1, w})};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ph(0.0, 2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < n; ++i) {
        const double pa = ph(rng), pb = ph(rng);
        for (std::size_t t = 0; t < w; ++t) {
            d.a.at(i, 0, t) = std::sin(0.7 * t + pa) + (t % 5 == 0 ? 1.5 : 0.0);
            d.b.at(i, 0, t) = std::sin(0.7 * t + pb);
        }
    }
    return d;
}

TrainConfig small_cfg(std::size_t iters) {
    TrainConfig c;
    c.iterations = iters;
    c.batch_size = 4;
    c.seed = 9;
    c.adam.lr = 1e-3;
    return c;
}

ModelConfig tiny(bool sharing) {
    ModelConfig c = tiny_model_config();
    c.sharing_enabled = sharing;
    return c;
}

std::vector<Tensor<double>> snapshot(Model<double>& m) {
    std::vector<Tensor<double>> out;
    for (Parameter<double>* p : m.all_parameters()) out.push_back(p->value);
    return out;
}

} // namespace

TEST_CASE("zero iterations is a no-op") {
    Model<double> m(tiny(true), 1);
    const auto before = snapshot(m);
    const Toy d = toy_data(8, 16);
    const TrainHistory h = train(m, d.a, d.b, small_cfg(0));
    CHECK(h.records.empty());
    CHECK(snapshot(m) == before);
}

TEST_CASE("update schedule") {
    Model<double> m(tiny(true), 1);
    const Toy d = toy_data(8, 16);
    TrainConfig c = small_cfg(12);
    const TrainHistory h = train(m, d.a, d.b, c);
    REQUIRE(h.records.size() == 12);
    CHECK(h.generator_updates() == 24);
    CHECK(h.discriminator_updates() == 7);
    for (std::size_t i = 0; i < 12; ++i) {
        CHECK(h.records[i].iteration == i + 1);
        CHECK(h.records[i].d_updates == (i < 7 ? 1u : 0u));
        CHECK(std::isfinite(h.records[i].total));
    }
}

TEST_CASE("disabled subnets log zero and match zero-weight runs exactly") {
    const Toy d = toy_data(8, 16);
    auto run = [&](TrainConfig c) {
        Model<double> m(tiny(c.sharing_enabled), 2);
        const TrainHistory h = train(m, d.a, d.b, c);
        return std::make_pair(snapshot(m), h);
    };
    TrainConfig off = small_cfg(6);
    off.sn2_enabled = false;
    off.sn3_enabled = false;
    TrainConfig zero = small_cfg(6);
    zero.weights.lambda_ae = 0.0;
    zero.weights.lambda_mid_mse = 0.0;
    zero.weights.lambda_mid_mmd = 0.0;
    const auto [p_off, h_off] = run(off);
    const auto [p_zero, h_zero] = run(zero);
    for (const auto& r : h_off.records) {
        CHECK(r.ae == 0.0);
        CHECK(r.mid_mse == 0.0);
        CHECK(r.mid_mmd == 0.0);
    }
    CHECK(h_zero.records[0].ae > 0.0);
    CHECK(p_off == p_zero);

    const LossWeights w = off.effective_weights();
    CHECK(w.lambda_ae == 0.0);
    CHECK(w.lambda_mid_mse == 0.0);
    CHECK(w.lambda_mid_mmd == 0.0);
    CHECK(w.lambda_cyc == 10.0);
}

TEST_CASE("ablation presets") {
    const TrainConfig m2 = ablation_preset("model2");
    CHECK_FALSE(m2.sn2_enabled);
    CHECK_FALSE(m2.sn3_enabled);
    CHECK_FALSE(m2.sharing_enabled);
    const TrainConfig m5 = ablation_preset("model5");
    CHECK(m5.sn2_enabled);
    CHECK(m5.sn3_enabled);
    CHECK_FALSE(m5.sharing_enabled);
    CHECK(ablation_preset("model1") == TrainConfig{});
    CHECK_FALSE(ablation_preset("model3").sn2_enabled);
    CHECK_FALSE(ablation_preset("model4").sn3_enabled);
    CHECK(ablation_preset("model6").weights.forward_emphasis > 1.0);
    CHECK_THROWS_AS(ablation_preset("model7"), ConfigError);
}

TEST_CASE("training is deterministic in the seed") {
    const Toy d = toy_data(8, 16);
    auto run = [&](std::uint64_t seed) {
        Model<double> m(tiny(true), 4);
        TrainConfig c = small_cfg(5);
        c.seed = seed;
        train(m, d.a, d.b, c);
        return snapshot(m);
    };
    CHECK(run(1) == run(1));
    CHECK_FALSE(run(1) == run(2));
}

TEST_CASE("configuration errors") {
    const Toy d = toy_data(8, 16);
    Model<double> m(tiny(true), 1);
    TrainConfig c = small_cfg(10);
    c.batch_size = 1;
    CHECK_THROWS_AS(train(m, d.a, d.b, c), ConfigError);
    c = small_cfg(3);
    CHECK_THROWS_AS(train(m, d.a, d.b, c), ConfigError);
    c = small_cfg(10);
    c.sharing_enabled = false;
    CHECK_THROWS_AS(train(m, d.a, d.b, c), ConfigError);
    CHECK_THROWS_AS(train(m, Tensor<double>(Shape{0, 1, 16}), d.b, small_cfg(10)), ConfigError);
    CHECK_THROWS_AS(train(m, randn({4, 1, 15}, 1), d.b, small_cfg(10)), InvalidArgument);
}

TEST_CASE("non-finite data aborts with the iteration index") {
    Toy d = toy_data(4, 16);
    for (auto& v : d.a.data()) v = std::numeric_limits<double>::quiet_NaN();
    Model<double> m(tiny(true), 1);
    try {
        train(m, d.a, d.b, small_cfg(10));
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("iteration 1") != std::string::npos);
    }
}

TEST_CASE("cycle loss decreases on the toy domains") {
    const Toy d = toy_data(32, 16);
    for (const bool sharing : {true, false}) {
        Model<double> m(tiny(sharing), 5);
        TrainConfig c = small_cfg(300);
        c.sharing_enabled = sharing;
        const TrainHistory h = train(m, d.a, d.b, c);
        const double tail = tail_mean(h, &IterationRecord::cycle, 50);
        INFO("sharing " << sharing << " first " << h.records.front().cycle << " tail " << tail);
        CHECK(tail < h.records.front().cycle);
    }
}

TEST_CASE("history csv") {
    TrainHistory h;
    h.records.push_back(IterationRecord{1, 0.5, 1.0, 0.25, 0.1, 0.2, 0.3, 7.5, 2, 1});
    std::ostringstream os;
    h.write_csv(os);
    const std::string s = os.str();
    CHECK(s.rfind(std::string(TrainHistory::csv_header), 0) == 0);
    CHECK(s.find("\n1,0.5,1,0.25,0.1,0.2,0.3,7.5") != std::string::npos);
    CHECK(tail_mean(h, &IterationRecord::cycle, 10) == 0.5);
}

#include <doctest.h>

#include <fstream>
#include <iterator>

#include "ssrgan/checkpoint.hpp"
#include "ssrgan/json_io.hpp"
#include "ssrgan/model.hpp"
#include "ssrgan/verify.hpp"
#include "support.hpp"

using namespace ssrgan;

namespace {

std::vector<char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void dump(const std::string& path, const std::vector<char>& bytes) {
    std::ofstream(path, std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Tensor<float> probe(std::size_t w) {
    Tensor<float> x(Shape{3, 1, w});
    std::mt19937_64 rng(1);
    std::normal_distribution<float> d;
    for (auto& v : x.data()) v = d(rng);
    return x;
}

} // namespace

TEST_CASE("checkpoint round trip") {
    testing::TempDir dir("ckpt");
    ModelConfig c;
    c.sharing_enabled = false;
    Model<float> m(c, 5);
    m.normalization_scale = 3.25;
    m.forward_blocks()[1].bias.value[3] = 0.125f;
    m.discriminator(Side::B).biases[2].value[0] = -1.5f;
    save_checkpoint(m, dir.file("m.ssrg"));
    Model<float> back = load_checkpoint<float>(dir.file("m.ssrg"));
    CHECK(back.config() == m.config());
    CHECK(back.normalization_scale == 3.25);
    auto pa = m.all_parameters(), pb = back.all_parameters();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i]->name == pb[i]->name);
        CHECK(pa[i]->value == pb[i]->value);
    }
    const Tensor<float> x = probe(c.window_length);
    CHECK(generator_forward(m, x) == generator_forward(back, x));
    CHECK(generator_reverse(m, x) == generator_reverse(back, x));
}

TEST_CASE("checkpoint corruption") {
    testing::TempDir dir("ckpt");
    Model<float> m(tiny_model_config(), 1);
    save_checkpoint(m, dir.file("m.ssrg"));
    const std::vector<char> good = slurp(dir.file("m.ssrg"));

    SUBCASE("bad magic") {
        std::vector<char> b = good;
        b[0] = 'X';
        dump(dir.file("b.ssrg"), b);
        CHECK_THROWS_AS(load_checkpoint<float>(dir.file("b.ssrg")), FormatError);
    }
    SUBCASE("newer version") {
        std::vector<char> b = good;
        b[4] = static_cast<char>(kCheckpointVersion + 1);
        dump(dir.file("b.ssrg"), b);
        CHECK_THROWS_AS(load_checkpoint<float>(dir.file("b.ssrg")), UnsupportedError);
    }
    SUBCASE("truncated blob") {
        std::vector<char> b(good.begin(), good.end() - 6);
        dump(dir.file("b.ssrg"), b);
        try {
            load_checkpoint<float>(dir.file("b.ssrg"));
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("truncated") != std::string::npos);
        }
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_checkpoint<float>(dir.file("nope.ssrg")), FormatError);
    }
}

TEST_CASE("config json round trips and rejects unknown keys") {
    TrainConfig t = ablation_preset("model6");
    t.iterations = 321;
    t.mmd.fixed_bandwidth = 0.75;
    Json j = t;
    CHECK(j.get<TrainConfig>() == t);

    ModelConfig m;
    m.blocks[1] = ConvSpec::same(16, 24, 5);
    m.blocks[2] = ConvSpec::same(24, 24, 5);
    m.blocks[3] = ConvSpec::same(24, 16, 5);
    Json jm = m;
    CHECK(jm.get<ModelConfig>() == m);

    AasConfig a;
    a.epochs = 11;
    CHECK(Json(a).get<AasConfig>() == a);

    Json bad = t;
    bad["weights"]["lambda_cycle"] = 3.0;
    try {
        (void)bad.get<TrainConfig>();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("lambda_cycle") != std::string::npos);
    }
    Json wrong = t;
    wrong["batch_size"] = "sixteen";
    CHECK_THROWS_AS((void)wrong.get<TrainConfig>(), ConfigError);

    Json partial = Json::object();
    partial["iterations"] = 7;
    const TrainConfig p = partial.get<TrainConfig>();
    CHECK(p.iterations == 7);
    CHECK(p.batch_size == TrainConfig{}.batch_size);
}

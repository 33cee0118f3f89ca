#include "ssrgan/model.hpp"

#include <random>
#include <set>

namespace ssrgan {
namespace {

constexpr std::array<BlockId, 5> kBlockOrder{BlockId::down, BlockId::convert_a, BlockId::content, BlockId::convert_b,
                                             BlockId::up};

[[noreturn]] void config_error(const std::string& msg) { throw ConfigError("model", msg); }

// Channels entering / leaving a block when applied in the G_f direction.
std::size_t fwd_in(const ConvSpec& s, ConvMode m) { return m == ConvMode::conv ? s.in_channels : s.out_channels; }
std::size_t fwd_out(const ConvSpec& s, ConvMode m) { return m == ConvMode::conv ? s.out_channels : s.in_channels; }

template <typename T>
Parameter<T> gaussian_parameter(std::string name, Shape shape, double std, std::mt19937_64& rng) {
    Tensor<T> t(shape);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (auto& v : t.data()) v = static_cast<T>(std * dist(rng));
    return Parameter<T>(std::move(name), std::move(t));
}

template <typename T>
std::array<Block<T>, 5> make_blocks(const ModelConfig& c, const std::string& prefix, std::mt19937_64& rng) {
    std::array<Block<T>, 5> blocks;
    for (std::size_t i = 0; i < 5; ++i) {
        const BlockId id = kBlockOrder[i];
        Block<T>& b = blocks[i];
        b.id = id;
        b.spec = c.blocks[i];
        b.forward_mode = ModelConfig::forward_mode(id);
        b.conv_input_length = c.conv_input_length(id);
        const std::string name = prefix + block_name(id);
        b.weight = gaussian_parameter<T>(name + ".weight", b.spec.kernel_shape(), c.init_std, rng);
        b.bias = Parameter<T>(name + ".bias", Tensor<T>(b.spec.bias_shape()));
    }
    return blocks;
}

template <typename T>
Discriminator<T> make_discriminator(const ModelConfig& c, const std::string& prefix, std::mt19937_64& rng) {
    Discriminator<T> d;
    d.specs = c.discriminator;
    for (std::size_t i = 0; i < 3; ++i) {
        const std::string name = prefix + ".layer" + std::to_string(i);
        d.weights[i] = gaussian_parameter<T>(name + ".weight", d.specs[i].kernel_shape(), c.init_std, rng);
        d.biases[i] = Parameter<T>(name + ".bias", Tensor<T>(d.specs[i].bias_shape()));
    }
    return d;
}

template <typename T>
void append_block_params(std::array<Block<T>, 5>& blocks, std::vector<Parameter<T>*>& out) {
    for (auto& b : blocks) {
        out.push_back(&b.weight);
        out.push_back(&b.bias);
    }
}

template <typename T>
std::size_t count(const std::array<Block<T>, 5>& blocks) {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.weight.value.size() + b.bias.value.size();
    return n;
}

} // namespace

std::string block_name(BlockId id) {
    switch (id) {
    case BlockId::down: return "block1_down";
    case BlockId::convert_a: return "block2_convert_a";
    case BlockId::content: return "block3_content";
    case BlockId::convert_b: return "block4_convert_b";
    case BlockId::up: return "block5_up";
    }
    return "block?";
}

std::size_t ModelConfig::conv_input_length(BlockId id) const {
    if (id == BlockId::down || id == BlockId::up) return window_length;
    return middle_length();
}

std::size_t ModelConfig::middle_length() const { return blocks[0].output_length(window_length); }

void ModelConfig::validate() const {
    if (window_length == 0 || window_length % 2 != 0) {
        config_error("window_length must be positive and even, got " + std::to_string(window_length));
    }
    if (data_channels == 0) config_error("data_channels must be positive");
    if (!(activation_slope >= 0.0 && activation_slope < 1.0)) config_error("activation_slope must be in [0,1)");
    if (!(init_std >= 0.0)) config_error("init_std must be nonnegative");
    for (std::size_t i = 0; i < 5; ++i) {
        try {
            blocks[i].validate();
        } catch (const InvalidArgument& e) {
            config_error(block_name(kBlockOrder[i]) + ": " + e.what());
        }
        const bool outer = i == 0 || i == 4;
        if (outer && blocks[i].stride != 2) config_error(block_name(kBlockOrder[i]) + " must have stride 2");
        if (!outer && blocks[i].stride != 1) config_error(block_name(kBlockOrder[i]) + " must have stride 1");
    }
    if (fwd_in(blocks[0], ConvMode::conv) != data_channels) {
        config_error("block1_down in_channels " + std::to_string(blocks[0].in_channels) + " != data_channels " +
                     std::to_string(data_channels));
    }
    for (std::size_t i = 0; i + 1 < 5; ++i) {
        const std::size_t out = fwd_out(blocks[i], forward_mode(kBlockOrder[i]));
        const std::size_t in = fwd_in(blocks[i + 1], forward_mode(kBlockOrder[i + 1]));
        if (out != in) {
            config_error("channel chain mismatch: " + block_name(kBlockOrder[i]) + " emits " + std::to_string(out) +
                         " channels but " + block_name(kBlockOrder[i + 1]) + " expects " + std::to_string(in));
        }
    }
    if (fwd_out(blocks[4], ConvMode::adjoint) != data_channels) {
        config_error("block5_up must emit data_channels (" + std::to_string(data_channels) + ")");
    }
    if (blocks[2].in_channels != blocks[2].out_channels) config_error("block3_content must preserve channels");

    std::size_t mid = 0;
    try {
        mid = middle_length();
        for (std::size_t i = 1; i < 4; ++i) {
            if (blocks[i].output_length(mid) != mid) {
                config_error(block_name(kBlockOrder[i]) + " must preserve the middle length " + std::to_string(mid));
            }
        }
        if (blocks[4].output_length(window_length) != mid) {
            config_error("block5_up convolution of a " + std::to_string(window_length) +
                         "-sample window does not land on the middle length " + std::to_string(mid));
        }
    } catch (const InvalidArgument& e) {
        config_error(e.what());
    }

    if (discriminator[0].in_channels != data_channels) config_error("discriminator layer0 must read data_channels");
    std::size_t len = window_length;
    for (std::size_t i = 0; i < 3; ++i) {
        try {
            len = discriminator[i].output_length(len);
        } catch (const InvalidArgument& e) {
            config_error("discriminator layer" + std::to_string(i) + ": " + e.what());
        }
        if (i > 0 && discriminator[i].in_channels != discriminator[i - 1].out_channels) {
            config_error("discriminator channel chain mismatch at layer" + std::to_string(i));
        }
    }
}

template <typename T>
Model<T>::Model(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
    config_.validate();
    std::mt19937_64 rng(seed);
    forward_ = make_blocks<T>(config_, "", rng);
    if (!config_.sharing_enabled) reverse_ = make_blocks<T>(config_, "reverse.", rng);
    disc_a_ = make_discriminator<T>(config_, "disc_a", rng);
    disc_b_ = make_discriminator<T>(config_, "disc_b", rng);
}

template <typename T>
std::vector<Parameter<T>*> Model<T>::forward_generator_parameters() {
    std::vector<Parameter<T>*> out;
    append_block_params(forward_, out);
    return out;
}

template <typename T>
std::vector<Parameter<T>*> Model<T>::reverse_generator_parameters() {
    std::vector<Parameter<T>*> out;
    append_block_params(reverse_blocks(), out);
    return out;
}

template <typename T>
std::vector<Parameter<T>*> Model<T>::generator_parameters() {
    std::vector<Parameter<T>*> out;
    append_block_params(forward_, out);
    if (reverse_) append_block_params(*reverse_, out);
    return out;
}

template <typename T>
std::vector<Parameter<T>*> Model<T>::discriminator_parameters() {
    std::vector<Parameter<T>*> out;
    for (auto* d : {&disc_a_, &disc_b_}) {
        for (std::size_t i = 0; i < 3; ++i) {
            out.push_back(&d->weights[i]);
            out.push_back(&d->biases[i]);
        }
    }
    return out;
}

template <typename T>
std::vector<Parameter<T>*> Model<T>::all_parameters() {
    auto out = generator_parameters();
    auto d = discriminator_parameters();
    out.insert(out.end(), d.begin(), d.end());
    return out;
}

template <typename T>
std::size_t Model<T>::generator_parameter_count() const {
    return count(forward_) + (reverse_ ? count(*reverse_) : 0);
}

template <typename T>
std::size_t Model<T>::block_parameter_count() const {
    return count(forward_);
}

// ---------------------------------------------------------------------------

template <typename T>
GeneratorGraph<T>::GeneratorGraph(Model<T>& model, Tape<T>& tape, Binding binding)
    : slope_(static_cast<T>(model.config().activation_slope)),
      window_(model.config().window_length),
      data_channels_(model.config().data_channels) {
    auto bind = [&](Block<T>& b) {
        Bound out;
        out.block = &b;
        out.weight = binding == Binding::trainable ? tape.parameter(b.weight) : tape.frozen(b.weight);
        out.bias = binding == Binding::trainable ? tape.parameter(b.bias) : tape.frozen(b.bias);
        return out;
    };
    for (std::size_t i = 0; i < 5; ++i) fwd_[i] = bind(model.forward_blocks()[i]);
    if (model.config().sharing_enabled) {
        rev_ = fwd_;
    } else {
        for (std::size_t i = 0; i < 5; ++i) rev_[i] = bind(model.reverse_blocks()[i]);
    }
}

template <typename T>
Var<T> GeneratorGraph<T>::apply(const Bound& b, Var<T> x, ConvMode mode) const {
    if (mode == ConvMode::conv) return ad::conv1d(x, b.weight, std::optional<Var<T>>(b.bias), b.block->spec);
    return ad::conv1d_adjoint(x, b.weight, b.block->spec, b.block->conv_input_length);
}

template <typename T>
void GeneratorGraph<T>::check_input(Var<T> x, std::size_t channels, std::size_t length, const char* op) const {
    const Shape& s = x.shape();
    if (s.channels != channels || s.length != length) {
        throw InvalidArgument("model", std::string(op) + ": input shape " + s.str() + " expected (n," +
                                           std::to_string(channels) + "," + std::to_string(length) + ")");
    }
}

template <typename T>
Var<T> GeneratorGraph<T>::phi_a(Var<T> a) const {
    check_input(a, data_channels_, window_, "phi_a");
    Var<T> h = a;
    for (std::size_t i = 0; i < 3; ++i) h = act(apply(fwd_[i], h, fwd_[i].block->forward_mode));
    return h;
}

template <typename T>
Var<T> GeneratorGraph<T>::phi_b(Var<T> b) const {
    check_input(b, data_channels_, window_, "phi_b");
    Var<T> h = b;
    for (std::size_t i = 5; i-- > 2;) h = act(apply(rev_[i], h, flip(rev_[i].block->forward_mode)));
    return h;
}

template <typename T>
Var<T> GeneratorGraph<T>::finish_forward(Var<T> h) const {
    h = act(apply(fwd_[3], h, fwd_[3].block->forward_mode));
    return apply(fwd_[4], h, fwd_[4].block->forward_mode);
}

template <typename T>
Var<T> GeneratorGraph<T>::finish_reverse(Var<T> h) const {
    h = act(apply(rev_[1], h, flip(rev_[1].block->forward_mode)));
    return apply(rev_[0], h, flip(rev_[0].block->forward_mode));
}

template <typename T>
Var<T> GeneratorGraph<T>::autoencode(Var<T> x, Side side) const {
    check_input(x, data_channels_, window_, "autoencode");
    const Bound& b = side == Side::A ? fwd_[0] : rev_[4];
    return apply(b, act(apply(b, x, ConvMode::conv)), ConvMode::adjoint);
}

template <typename T>
DiscriminatorGraph<T>::DiscriminatorGraph(Model<T>& model, Side side, Tape<T>& tape, Binding binding)
    : slope_(static_cast<T>(model.config().activation_slope)),
      window_(model.config().window_length),
      data_channels_(model.config().data_channels) {
    Discriminator<T>& d = model.discriminator(side);
    specs_ = d.specs;
    for (std::size_t i = 0; i < 3; ++i) {
        weights_[i] = binding == Binding::trainable ? tape.parameter(d.weights[i]) : tape.frozen(d.weights[i]);
        biases_[i] = binding == Binding::trainable ? tape.parameter(d.biases[i]) : tape.frozen(d.biases[i]);
    }
}

template <typename T>
Var<T> DiscriminatorGraph<T>::score(Var<T> x) const {
    const Shape& s = x.shape();
    if (s.channels != data_channels_ || s.length != window_) {
        throw InvalidArgument("model", "discriminate: input shape " + s.str() + " expected (n," +
                                           std::to_string(data_channels_) + "," + std::to_string(window_) + ")");
    }
    Var<T> h = x;
    for (std::size_t i = 0; i < 3; ++i) {
        h = ad::conv1d(h, weights_[i], std::optional<Var<T>>(biases_[i]), specs_[i]);
        if (i < 2) h = ad::leaky_relu(h, slope_);
    }
    return ad::item_mean(h);
}

template <typename T>
Tensor<T> generator_forward(Model<T>& model, const Tensor<T>& a) {
    Tape<T> tape;
    GeneratorGraph<T> g(model, tape, Binding::frozen);
    return g.forward(tape.constant(a)).value();
}

template <typename T>
Tensor<T> generator_reverse(Model<T>& model, const Tensor<T>& b) {
    Tape<T> tape;
    GeneratorGraph<T> g(model, tape, Binding::frozen);
    return g.reverse(tape.constant(b)).value();
}

template <typename T>
Tensor<T> middle_content(Model<T>& model, const Tensor<T>& x, Side side) {
    Tape<T> tape;
    GeneratorGraph<T> g(model, tape, Binding::frozen);
    return g.middle_content(tape.constant(x), side).value();
}

template <typename T>
Tensor<T> autoencode(Model<T>& model, const Tensor<T>& x, Side side) {
    Tape<T> tape;
    GeneratorGraph<T> g(model, tape, Binding::frozen);
    return g.autoencode(tape.constant(x), side).value();
}

template <typename T>
Tensor<T> discriminate(Model<T>& model, const Tensor<T>& x, Side side) {
    Tape<T> tape;
    DiscriminatorGraph<T> d(model, side, tape, Binding::frozen);
    return d.score(tape.constant(x)).value();
}

#define SSRGAN_INSTANTIATE_MODEL(T)                                                 \
    template class Model<T>;                                                        \
    template class GeneratorGraph<T>;                                               \
    template class DiscriminatorGraph<T>;                                           \
    template Tensor<T> generator_forward(Model<T>&, const Tensor<T>&);              \
    template Tensor<T> generator_reverse(Model<T>&, const Tensor<T>&);              \
    template Tensor<T> middle_content(Model<T>&, const Tensor<T>&, Side);           \
    template Tensor<T> autoencode(Model<T>&, const Tensor<T>&, Side);               \
    template Tensor<T> discriminate(Model<T>&, const Tensor<T>&, Side);

SSRGAN_INSTANTIATE_MODEL(float)
SSRGAN_INSTANTIATE_MODEL(double)

} // namespace ssrgan

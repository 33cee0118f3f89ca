#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ssrgan/autodiff.hpp"

namespace ssrgan {

/// The five functional blocks, in G_f order.
enum class BlockId { down = 0, convert_a = 1, content = 2, convert_b = 3, up = 4 };

/// How a block's tied kernel is applied: as a convolution or as its exact adjoint.
enum class ConvMode { conv, adjoint };

enum class Side { A, B };

inline ConvMode flip(ConvMode m) { return m == ConvMode::conv ? ConvMode::adjoint : ConvMode::conv; }

std::string block_name(BlockId id);

struct ModelConfig {
    std::size_t window_length = 250;
    std::size_t data_channels = 1;
    /// Underlying convolution of each block. The up-sampling block is stored as
    /// the convolution whose adjoint it applies in the forward direction
    /// (default 1->16 k15 s2, so its forward application maps 16x125 -> 1x250).
    std::array<ConvSpec, 5> blocks{ConvSpec{1, 16, 15, 2, 7}, ConvSpec::same(16, 32, 7), ConvSpec::same(32, 32, 7),
                                   ConvSpec::same(32, 16, 7), ConvSpec{1, 16, 15, 2, 7}};
    std::array<ConvSpec, 3> discriminator{ConvSpec{1, 16, 15, 2, 7}, ConvSpec{16, 32, 7, 2, 3},
                                          ConvSpec::same(32, 1, 7)};
    double activation_slope = 0.2;
    double init_std = 0.02;
    bool sharing_enabled = true;

    /// Throws ConfigError on an inconsistent block chain.
    void validate() const;

    static ConvMode forward_mode(BlockId id) { return id == BlockId::up ? ConvMode::adjoint : ConvMode::conv; }
    /// Length on the convolution-input side of a block (what its adjoint must reproduce).
    std::size_t conv_input_length(BlockId id) const;
    /// Length of the middle (content) space.
    std::size_t middle_length() const;

    bool operator==(const ModelConfig&) const = default;
};

template <typename T>
struct Block {
    BlockId id = BlockId::down;
    ConvSpec spec;
    ConvMode forward_mode = ConvMode::conv;
    std::size_t conv_input_length = 0;
    Parameter<T> weight;
    Parameter<T> bias;
};

template <typename T>
struct Discriminator {
    std::array<ConvSpec, 3> specs;
    std::array<Parameter<T>, 3> weights;
    std::array<Parameter<T>, 3> biases;
};

/// Five tied blocks (or two copies when sharing is disabled) plus D_A and D_B.
template <typename T>
class Model {
public:
    /// Gaussian(0, init_std) weights, zero biases, deterministic in seed.
    explicit Model(ModelConfig config, std::uint64_t seed = 0);

    const ModelConfig& config() const noexcept { return config_; }

    std::array<Block<T>, 5>& forward_blocks() noexcept { return forward_; }
    const std::array<Block<T>, 5>& forward_blocks() const noexcept { return forward_; }
    /// Blocks used by G_r; the same objects as forward_blocks() when sharing.
    std::array<Block<T>, 5>& reverse_blocks() noexcept { return reverse_ ? *reverse_ : forward_; }
    const std::array<Block<T>, 5>& reverse_blocks() const noexcept { return reverse_ ? *reverse_ : forward_; }

    Discriminator<T>& discriminator(Side side) noexcept { return side == Side::A ? disc_a_ : disc_b_; }
    const Discriminator<T>& discriminator(Side side) const noexcept { return side == Side::A ? disc_a_ : disc_b_; }

    std::vector<Parameter<T>*> forward_generator_parameters();
    std::vector<Parameter<T>*> reverse_generator_parameters();
    /// Unique generator buffers (forward set, plus reverse set when unshared).
    std::vector<Parameter<T>*> generator_parameters();
    std::vector<Parameter<T>*> discriminator_parameters();
    std::vector<Parameter<T>*> all_parameters();

    std::size_t generator_parameter_count() const;
    std::size_t block_parameter_count() const;

    /// Global amplitude scale of the training data; windows are divided by it.
    double normalization_scale = 1.0;

private:
    ModelConfig config_;
    std::array<Block<T>, 5> forward_;
    std::optional<std::array<Block<T>, 5>> reverse_;
    Discriminator<T> disc_a_;
    Discriminator<T> disc_b_;
};

enum class Binding { trainable, frozen };

/// G_f / G_r / AE / phi graphs of a model, bound onto one tape.
template <typename T>
class GeneratorGraph {
public:
    GeneratorGraph(Model<T>& model, Tape<T>& tape, Binding binding);

    /// G_f: B1..B5 in forward modes, leaky ReLU between blocks, linear output.
    Var<T> forward(Var<T> a) const { return finish_forward(phi_a(a)); }
    /// G_r: B5..B1 in flipped modes, same tied weights.
    Var<T> reverse(Var<T> b) const { return finish_reverse(phi_b(b)); }

    /// phi_1: act(B3(act(B2(act(B1 x))))), the G_f prefix into the middle space.
    Var<T> phi_a(Var<T> a) const;
    /// phi_2: the G_r prefix through B5, B4, B3 in flipped modes.
    Var<T> phi_b(Var<T> b) const;
    /// B5(act(B4 h)) applied to a phi_1 feature map.
    Var<T> finish_forward(Var<T> h) const;
    /// B1'(act(B2' h)) applied to a phi_2 feature map.
    Var<T> finish_reverse(Var<T> h) const;

    /// AE_A = B1 adjoint(act(B1 conv x)); AE_B = B5 adjoint(act(B5 conv x)).
    Var<T> autoencode(Var<T> x, Side side) const;

    Var<T> middle_content(Var<T> x, Side side) const { return side == Side::A ? phi_a(x) : phi_b(x); }

private:
    struct Bound {
        const Block<T>* block = nullptr;
        Var<T> weight;
        Var<T> bias;
    };
    Var<T> apply(const Bound& b, Var<T> x, ConvMode mode) const;
    Var<T> act(Var<T> x) const { return ad::leaky_relu(x, slope_); }
    void check_input(Var<T> x, std::size_t channels, std::size_t length, const char* op) const;

    std::array<Bound, 5> fwd_;
    std::array<Bound, 5> rev_;
    T slope_;
    std::size_t window_;
    std::size_t data_channels_;
};

/// 3-layer strided patch discriminator reduced to one unbounded score per window.
template <typename T>
class DiscriminatorGraph {
public:
    DiscriminatorGraph(Model<T>& model, Side side, Tape<T>& tape, Binding binding);
    /// (n, 1, W) -> (n, 1, 1)
    Var<T> score(Var<T> x) const;

private:
    std::array<ConvSpec, 3> specs_;
    std::array<Var<T>, 3> weights_;
    std::array<Var<T>, 3> biases_;
    T slope_;
    std::size_t window_;
    std::size_t data_channels_;
};

// Tensor-level conveniences (inference, no gradients kept).

template <typename T>
Model<T> build_model(const ModelConfig& config, std::uint64_t seed = 0) {
    return Model<T>(config, seed);
}

template <typename T>
Tensor<T> generator_forward(Model<T>& model, const Tensor<T>& a);
template <typename T>
Tensor<T> generator_reverse(Model<T>& model, const Tensor<T>& b);
template <typename T>
Tensor<T> middle_content(Model<T>& model, const Tensor<T>& x, Side side);
template <typename T>
Tensor<T> autoencode(Model<T>& model, const Tensor<T>& x, Side side);
template <typename T>
Tensor<T> discriminate(Model<T>& model, const Tensor<T>& x, Side side);

extern template class Model<float>;
extern template class Model<double>;
extern template class GeneratorGraph<float>;
extern template class GeneratorGraph<double>;
extern template class DiscriminatorGraph<float>;
extern template class DiscriminatorGraph<double>;

} // namespace ssrgan

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ssrgan/conv.hpp"
#include "ssrgan/tensor.hpp"

namespace ssrgan {

template <typename T>
class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid as long as the tape lives.
template <typename T>
struct Var {
    Tape<T>* tape = nullptr;
    std::size_t id = 0;

    const Tensor<T>& value() const { return tape->value(id); }
    const Shape& shape() const { return tape->value(id).shape(); }
    T item() const { return value().item(); }
};

/// Linear recording of a computation for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so iterating them backwards is a
/// valid topological order. A tape is single-threaded; build one per step.
///
/// Gradient semantics of backward():
///   - intermediate node gradients are recomputed from scratch on every call;
///   - `input` leaves keep accumulating across calls;
///   - `parameter` leaves add their gradient into Parameter::grad.
template <typename T>
class Tape {
public:
    using Backprop = std::function<void(Tape&, std::size_t)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var<T> constant(Tensor<T> value);
    Var<T> input(Tensor<T> value);
    /// Reads p.value by reference (in-place perturbation is visible); gradients go to p.grad.
    Var<T> parameter(Parameter<T>& p);
    /// Reads p.value by reference without requesting gradients.
    Var<T> frozen(const Parameter<T>& p);

    Var<T> record(Tensor<T> value, bool requires_grad, Backprop backprop);

    const Tensor<T>& value(std::size_t id) const;
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
    bool requires_grad(Var<T> v) const { return nodes_[v.id].requires_grad; }

    /// Gradient buffer of a node, zero-initialised on first use. For backprop closures.
    Tensor<T>& grad_accumulator(std::size_t id);
    /// Gradient of the last backward() w.r.t. a node (zeros if nothing reached it).
    Tensor<T> grad(Var<T> v) const;

    void backward(Var<T> loss);

    /// Parameters that the last backward() propagated into (unique, in binding order).
    std::vector<Parameter<T>*> reached_parameters() const;

    std::size_t size() const noexcept { return nodes_.size(); }

    /// Running hash of every branch decision taken by non-smooth ops
    /// (activation signs, |.| signs, median selections). Two evaluations with
    /// the same signature lie on the same smooth piece.
    /// Only maintained when branch tracking is on (off by default).
    std::uint64_t branch_signature() const noexcept { return signature_; }
    void note_branch(std::uint64_t bits) noexcept;
    void track_branches(bool on) noexcept { track_branches_ = on; }
    bool tracks_branches() const noexcept { return track_branches_; }

private:
    struct Node {
        Tensor<T> value;
        const Tensor<T>* external = nullptr;
        Parameter<T>* param = nullptr;
        Tensor<T> grad;
        bool requires_grad = false;
        bool accumulating_leaf = false;
        Backprop backprop;
    };

    Var<T> push(Node node);

    std::vector<Node> nodes_;
    std::uint64_t signature_ = 1469598103934665603ULL;
    bool track_branches_ = false;
};

namespace ad {

template <typename T>
Var<T> conv1d(Var<T> x, Var<T> weight, std::optional<Var<T>> bias, const ConvSpec& spec);

template <typename T>
Var<T> conv1d_adjoint(Var<T> y, Var<T> weight, const ConvSpec& spec, std::size_t input_length);

/// max(x, slope*x); derivative at 0 is `slope`.
template <typename T>
Var<T> leaky_relu(Var<T> x, T slope);

template <typename T>
Var<T> add(Var<T> a, Var<T> b);

template <typename T>
Var<T> sub(Var<T> a, Var<T> b);

template <typename T>
Var<T> scale(Var<T> a, T factor);

/// sum_i w_i * s_i over scalar nodes.
template <typename T>
Var<T> weighted_sum(std::span<const Var<T>> scalars, std::span<const T> weights);

template <typename T>
Var<T> sum(Var<T> x);

template <typename T>
Var<T> mean(Var<T> x);

template <typename T>
Var<T> sum_squares(Var<T> x);

/// mean |a - b|; subgradient 0 where a == b.
template <typename T>
Var<T> mean_abs_diff(Var<T> a, Var<T> b);

/// mean (a - b)^2.
template <typename T>
Var<T> mean_sq_diff(Var<T> a, Var<T> b);

/// mean (a - target)^2 for a constant scalar target.
template <typename T>
Var<T> mean_sq_to(Var<T> a, T target);

/// (n, c, l) -> (n, 1, 1): per-item mean over channels and length.
template <typename T>
Var<T> item_mean(Var<T> x);

} // namespace ad

extern template class Tape<float>;
extern template class Tape<double>;

} // namespace ssrgan

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ssrgan/tensor.hpp"

namespace ssrgan {

struct AdamConfig {
    double lr = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    bool operator==(const AdamConfig&) const = default;
};

/// First/second moments per parameter, in the order the parameters were registered.
template <typename T>
struct AdamState {
    AdamConfig config;
    std::vector<Tensor<T>> m;
    std::vector<Tensor<T>> v;
    std::uint64_t step = 0;
};

template <typename T>
AdamState<T> make_adam_state(std::span<Parameter<T>* const> params, const AdamConfig& config);

/// One bias-corrected Adam update from each parameter's accumulated grad.
/// Throws NumericalError naming the parameter if any gradient is non-finite;
/// nothing is modified in that case.
template <typename T>
void adam_step(std::span<Parameter<T>* const> params, AdamState<T>& state);

template <typename T>
double global_grad_norm(std::span<Parameter<T>* const> params);

/// Rescales all grads so their global L2 norm is at most max_norm. Returns the norm before clipping.
template <typename T>
double clip_grad_norm(std::span<Parameter<T>* const> params, double max_norm);

template <typename T>
void zero_grads(std::span<Parameter<T>* const> params);

} // namespace ssrgan

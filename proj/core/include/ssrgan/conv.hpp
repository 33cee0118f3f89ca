#pragma once

#include <cstddef>
#include <string>

#include "ssrgan/tensor.hpp"

namespace ssrgan {

/// Geometry of a 1-D cross-correlation with symmetric zero padding.
struct ConvSpec {
    std::size_t in_channels = 1;
    std::size_t out_channels = 1;
    std::size_t kernel_size = 1;
    std::size_t stride = 1;
    std::size_t padding = 0;

    /// floor((L + 2p - k) / s) + 1. Throws InvalidArgument when that is < 1.
    std::size_t output_length(std::size_t input_length) const;

    Shape kernel_shape() const { return {out_channels, in_channels, kernel_size}; }
    Shape bias_shape() const { return {1, out_channels, 1}; }
    std::size_t parameter_count() const { return out_channels * in_channels * kernel_size + out_channels; }

    /// Stride-1 spec with padding (k-1)/2, length preserving for odd k.
    static ConvSpec same(std::size_t in, std::size_t out, std::size_t k) { return {in, out, k, 1, (k - 1) / 2}; }

    void validate() const;
    std::string str() const;
    bool operator==(const ConvSpec&) const = default;
};

// Raw (tape-free) kernels. The tape ops in autodiff.hpp compose these.

/// y[n][o][t] = bias[o] + sum_{i,k} w[o][i][k] * x[n][i][t*s + k - p].
template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>* bias, const ConvSpec& spec);

/// Exact transpose of the linear part of conv1d for inputs of length `input_length`.
template <typename T>
Tensor<T> conv1d_adjoint(const Tensor<T>& y, const Tensor<T>& weight, const ConvSpec& spec,
                         std::size_t input_length);

/// grad_weight += sum_n response[n] (x) patches(image[n]). For conv1d pass (x, dy);
/// for conv1d_adjoint pass (dz, y).
template <typename T>
void conv1d_accumulate_weight_grad(const Tensor<T>& image, const Tensor<T>& response, const ConvSpec& spec,
                                   Tensor<T>& grad_weight);

/// grad_bias[o] += sum_{n,t} dy[n][o][t].
template <typename T>
void conv1d_accumulate_bias_grad(const Tensor<T>& dy, Tensor<T>& grad_bias);

} // namespace ssrgan

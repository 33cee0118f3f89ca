#include "ssrgan/conv.hpp"

#include <algorithm>
#include <utility>

#include <Eigen/Core>

namespace ssrgan {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapRow = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMapRow = Eigen::Map<const RowMatrix<T>>;

// Output positions t in [lo, hi) whose tap j reads inside the unpadded input.
std::pair<std::size_t, std::size_t> valid_range(std::size_t j, std::size_t stride, std::ptrdiff_t pad,
                                                std::ptrdiff_t len, std::size_t out_len) {
    const auto st = static_cast<std::ptrdiff_t>(stride);
    const std::ptrdiff_t first = pad - static_cast<std::ptrdiff_t>(j);
    const std::ptrdiff_t lo = first <= 0 ? 0 : (first + st - 1) / st;
    const std::ptrdiff_t last = len - 1 + pad - static_cast<std::ptrdiff_t>(j);
    const std::ptrdiff_t hi = last < 0 ? 0 : last / st + 1;
    const auto l = static_cast<std::size_t>(std::min<std::ptrdiff_t>(lo, static_cast<std::ptrdiff_t>(out_len)));
    const auto h = static_cast<std::size_t>(std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(out_len)));
    return {l, std::max(l, h)};
}

// Patch matrix of shape (in_channels * k, batch * out_len); column n*out_len + t holds
// the receptive field of output sample t of batch item n.
template <typename T>
RowMatrix<T> im2col(const Tensor<T>& x, const ConvSpec& spec, std::size_t out_len) {
    const auto& s = x.shape();
    const std::size_t k = spec.kernel_size;
    const std::size_t cols = s.batch * out_len;
    RowMatrix<T> m = RowMatrix<T>::Zero(static_cast<Eigen::Index>(spec.in_channels * k),
                                        static_cast<Eigen::Index>(cols));
    const auto pad = static_cast<std::ptrdiff_t>(spec.padding);
    const auto len = static_cast<std::ptrdiff_t>(s.length);
    for (std::size_t c = 0; c < spec.in_channels; ++c) {
        for (std::size_t j = 0; j < k; ++j) {
            T* row = m.data() + (c * k + j) * cols;
            const auto [lo, hi] = valid_range(j, spec.stride, pad, len, out_len);
            for (std::size_t n = 0; n < s.batch; ++n) {
                const T* src = x.raw() + (n * s.channels + c) * s.length;
                T* dst = row + n * out_len;
                const T* from = src + (static_cast<std::ptrdiff_t>(lo * spec.stride + j) - pad);
                if (spec.stride == 1) {
                    std::copy(from, from + (hi - lo), dst + lo);
                } else {
                    for (std::size_t t = lo; t < hi; ++t, from += spec.stride) dst[t] = *from;
                }
            }
        }
    }
    return m;
}

// Adjoint of im2col: scatter-add patch columns back into a (batch, in_channels, in_len) tensor.
template <typename T>
Tensor<T> col2im(const RowMatrix<T>& m, const ConvSpec& spec, std::size_t batch, std::size_t in_len,
                 std::size_t out_len) {
    Tensor<T> x(Shape{batch, spec.in_channels, in_len});
    const std::size_t k = spec.kernel_size;
    const std::size_t cols = batch * out_len;
    const auto pad = static_cast<std::ptrdiff_t>(spec.padding);
    const auto len = static_cast<std::ptrdiff_t>(in_len);
    for (std::size_t c = 0; c < spec.in_channels; ++c) {
        for (std::size_t j = 0; j < k; ++j) {
            const T* row = m.data() + (c * k + j) * cols;
            const auto [lo, hi] = valid_range(j, spec.stride, pad, len, out_len);
            for (std::size_t n = 0; n < batch; ++n) {
                T* dst = x.raw() + (n * spec.in_channels + c) * in_len;
                const T* src = row + n * out_len;
                T* to = dst + (static_cast<std::ptrdiff_t>(lo * spec.stride + j) - pad);
                for (std::size_t t = lo; t < hi; ++t, to += spec.stride) *to += src[t];
            }
        }
    }
    return x;
}

// (batch, channels, len) tensor -> (channels, batch*len) matrix.
template <typename T>
RowMatrix<T> to_channel_major(const Tensor<T>& y) {
    const auto& s = y.shape();
    RowMatrix<T> m(static_cast<Eigen::Index>(s.channels), static_cast<Eigen::Index>(s.batch * s.length));
    for (std::size_t n = 0; n < s.batch; ++n) {
        for (std::size_t c = 0; c < s.channels; ++c) {
            const T* src = y.raw() + (n * s.channels + c) * s.length;
            std::copy(src, src + s.length, m.data() + c * s.batch * s.length + n * s.length);
        }
    }
    return m;
}

void check_kernel(const Shape& w, const ConvSpec& spec, const char* op) {
    if (w != spec.kernel_shape()) {
        throw InvalidArgument("tensor-core", std::string(op) + ": kernel shape " + w.str() + " does not match " +
                                                 spec.str() + " (expected " + spec.kernel_shape().str() + ")");
    }
}

} // namespace

std::size_t ConvSpec::output_length(std::size_t input_length) const {
    validate();
    const std::size_t padded = input_length + 2 * padding;
    if (padded < kernel_size) {
        throw InvalidArgument("tensor-core", "length: input length " + std::to_string(input_length) +
                                                 " too short for " + str());
    }
    return (padded - kernel_size) / stride + 1;
}

void ConvSpec::validate() const {
    if (in_channels == 0) throw InvalidArgument("tensor-core", "in_channels must be positive");
    if (out_channels == 0) throw InvalidArgument("tensor-core", "out_channels must be positive");
    if (kernel_size == 0) throw InvalidArgument("tensor-core", "kernel_size must be positive");
    if (stride == 0) throw InvalidArgument("tensor-core", "stride must be positive");
}

std::string ConvSpec::str() const {
    return "conv(" + std::to_string(in_channels) + "->" + std::to_string(out_channels) + " k" +
           std::to_string(kernel_size) + " s" + std::to_string(stride) + " p" + std::to_string(padding) + ")";
}

template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>* bias, const ConvSpec& spec) {
    check_kernel(weight.shape(), spec, "conv1d");
    const auto& s = x.shape();
    if (s.channels != spec.in_channels) {
        throw InvalidArgument("tensor-core", "conv1d: channels " + std::to_string(s.channels) + " != in_channels " +
                                                 std::to_string(spec.in_channels) + " of " + spec.str());
    }
    if (bias != nullptr && bias->shape() != spec.bias_shape()) {
        throw InvalidArgument("tensor-core", "conv1d: bias shape " + bias->shape().str());
    }
    const std::size_t out_len = spec.output_length(s.length);
    const RowMatrix<T> cols = im2col(x, spec, out_len);
    const ConstMapRow<T> w(weight.raw(), static_cast<Eigen::Index>(spec.out_channels),
                           static_cast<Eigen::Index>(spec.in_channels * spec.kernel_size));
    RowMatrix<T> ym = w * cols;

    Tensor<T> y(Shape{s.batch, spec.out_channels, out_len});
    for (std::size_t n = 0; n < s.batch; ++n) {
        for (std::size_t o = 0; o < spec.out_channels; ++o) {
            const T b = bias != nullptr ? (*bias)[o] : T{0};
            const T* src = ym.data() + o * s.batch * out_len + n * out_len;
            T* dst = y.raw() + (n * spec.out_channels + o) * out_len;
            for (std::size_t t = 0; t < out_len; ++t) dst[t] = src[t] + b;
        }
    }
    return y;
}

template <typename T>
Tensor<T> conv1d_adjoint(const Tensor<T>& y, const Tensor<T>& weight, const ConvSpec& spec,
                         std::size_t input_length) {
    check_kernel(weight.shape(), spec, "conv1d_adjoint");
    const auto& s = y.shape();
    if (s.channels != spec.out_channels) {
        throw InvalidArgument("tensor-core", "conv1d_adjoint: channels " + std::to_string(s.channels) +
                                                 " != out_channels " + std::to_string(spec.out_channels) + " of " +
                                                 spec.str());
    }
    const std::size_t out_len = spec.output_length(input_length);
    if (s.length != out_len) {
        throw InvalidArgument("tensor-core", "conv1d_adjoint: length " + std::to_string(s.length) +
                                                 " inconsistent with original_input_length " +
                                                 std::to_string(input_length) + " (expected " +
                                                 std::to_string(out_len) + ")");
    }
    const RowMatrix<T> ym = to_channel_major(y);
    const ConstMapRow<T> w(weight.raw(), static_cast<Eigen::Index>(spec.out_channels),
                           static_cast<Eigen::Index>(spec.in_channels * spec.kernel_size));
    const RowMatrix<T> patches = w.transpose() * ym;
    return col2im(patches, spec, s.batch, input_length, out_len);
}

template <typename T>
void conv1d_accumulate_weight_grad(const Tensor<T>& image, const Tensor<T>& response, const ConvSpec& spec,
                                   Tensor<T>& grad_weight) {
    check_kernel(grad_weight.shape(), spec, "conv1d weight grad");
    const std::size_t out_len = response.shape().length;
    const RowMatrix<T> cols = im2col(image, spec, out_len);
    const RowMatrix<T> rm = to_channel_major(response);
    MapRow<T> gw(grad_weight.raw(), static_cast<Eigen::Index>(spec.out_channels),
                 static_cast<Eigen::Index>(spec.in_channels * spec.kernel_size));
    gw.noalias() += rm * cols.transpose();
}

template <typename T>
void conv1d_accumulate_bias_grad(const Tensor<T>& dy, Tensor<T>& grad_bias) {
    const auto& s = dy.shape();
    for (std::size_t n = 0; n < s.batch; ++n) {
        for (std::size_t o = 0; o < s.channels; ++o) {
            const T* src = dy.raw() + (n * s.channels + o) * s.length;
            T acc{0};
            for (std::size_t t = 0; t < s.length; ++t) acc += src[t];
            grad_bias[o] += acc;
        }
    }
}

#define SSRGAN_INSTANTIATE_CONV(T)                                                                               \
    template Tensor<T> conv1d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*, const ConvSpec&);          \
    template Tensor<T> conv1d_adjoint(const Tensor<T>&, const Tensor<T>&, const ConvSpec&, std::size_t);       \
    template void conv1d_accumulate_weight_grad(const Tensor<T>&, const Tensor<T>&, const ConvSpec&,           \
                                                Tensor<T>&);                                                   \
    template void conv1d_accumulate_bias_grad(const Tensor<T>&, Tensor<T>&);

SSRGAN_INSTANTIATE_CONV(float)
SSRGAN_INSTANTIATE_CONV(double)

} // namespace ssrgan

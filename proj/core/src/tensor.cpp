#include "ssrgan/tensor.hpp"

#include <numeric>

namespace ssrgan {

std::string Shape::str() const {
    return "(" + std::to_string(batch) + "," + std::to_string(channels) + "," + std::to_string(length) + ")";
}

template <typename T>
Tensor<T> concat_batch(std::span<const Tensor<T>> parts) {
    if (parts.empty()) return {};
    const Shape first = parts.front().shape();
    std::size_t batch = 0;
    for (const auto& p : parts) {
        if (p.shape().channels != first.channels || p.shape().length != first.length) {
            throw InvalidArgument("tensor", "concat_batch: shape " + p.shape().str() + " incompatible with " +
                                                first.str());
        }
        batch += p.shape().batch;
    }
    std::vector<T> data;
    data.reserve(batch * first.channels * first.length);
    for (const auto& p : parts) data.insert(data.end(), p.data().begin(), p.data().end());
    return Tensor<T>(Shape{batch, first.channels, first.length}, std::move(data));
}

template <typename T>
T dot(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape()) {
        throw InvalidArgument("tensor", "dot: shape " + a.shape().str() + " vs " + b.shape().str());
    }
    return std::inner_product(a.data().begin(), a.data().end(), b.data().begin(), T{0});
}

template class Tensor<float>;
template class Tensor<double>;
template Tensor<float> concat_batch(std::span<const Tensor<float>>);
template Tensor<double> concat_batch(std::span<const Tensor<double>>);
template float dot(const Tensor<float>&, const Tensor<float>&);
template double dot(const Tensor<double>&, const Tensor<double>&);

} // namespace ssrgan

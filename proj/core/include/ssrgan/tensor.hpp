#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ssrgan/errors.hpp"

namespace ssrgan {

/// (batch, channels, length). Kernels reuse the triple as
/// (out_channels, in_channels, kernel_size); biases are (1, out_channels, 1).
struct Shape {
    std::size_t batch = 0;
    std::size_t channels = 0;
    std::size_t length = 0;

    std::size_t numel() const noexcept { return batch * channels * length; }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

/// Dense row-major [batch][channels][length] array.
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;

    explicit Tensor(Shape shape, T fill = T{0}) : shape_(shape), data_(shape.numel(), fill) {}

    Tensor(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
        if (data_.size() != shape_.numel()) {
            throw InvalidArgument("tensor", "data length " + std::to_string(data_.size()) +
                                                " does not match shape " + shape_.str());
        }
    }

    static Tensor scalar(T v) { return Tensor(Shape{1, 1, 1}, v); }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }
    T* raw() noexcept { return data_.data(); }
    const T* raw() const noexcept { return data_.data(); }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    T& at(std::size_t n, std::size_t c, std::size_t l) noexcept {
        return data_[(n * shape_.channels + c) * shape_.length + l];
    }
    const T& at(std::size_t n, std::size_t c, std::size_t l) const noexcept {
        return data_[(n * shape_.channels + c) * shape_.length + l];
    }

    /// Value of a (1,1,1) tensor.
    T item() const {
        if (data_.size() != 1) throw ContractError("tensor", "item() on non-scalar tensor " + shape_.str());
        return data_[0];
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    /// Rows [first, first+count) along the batch axis.
    Tensor slice_batch(std::size_t first, std::size_t count) const;

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(shape_);
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return out;
    }

    bool operator==(const Tensor&) const = default;

private:
    Shape shape_{};
    std::vector<T> data_;
};

template <typename T>
Tensor<T> Tensor<T>::slice_batch(std::size_t first, std::size_t count) const {
    if (first + count > shape_.batch) {
        throw InvalidArgument("tensor", "batch slice out of range for shape " + shape_.str());
    }
    const std::size_t stride = shape_.channels * shape_.length;
    Shape s{count, shape_.channels, shape_.length};
    std::vector<T> d(data_.begin() + static_cast<std::ptrdiff_t>(first * stride),
                     data_.begin() + static_cast<std::ptrdiff_t>((first + count) * stride));
    return Tensor(s, std::move(d));
}

/// Stacks tensors with identical (channels, length) along the batch axis.
template <typename T>
Tensor<T> concat_batch(std::span<const Tensor<T>> parts);

template <typename T>
T dot(const Tensor<T>& a, const Tensor<T>& b);

/// Trainable buffer with its gradient accumulator.
template <typename T>
struct Parameter {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;

    Parameter() = default;
    Parameter(std::string n, Tensor<T> v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

    void zero_grad() { grad = Tensor<T>(value.shape()); }
};

extern template class Tensor<float>;
extern template class Tensor<double>;

} // namespace ssrgan

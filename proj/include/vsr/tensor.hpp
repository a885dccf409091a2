#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vsr {

// Extents of a rank-5 tensor laid out as (batch, group, depth, height, width),
// width fastest. Unused axes have extent 1.
struct Shape {
    int n = 1;
    int c = 1;
    int d = 1;
    int h = 1;
    int w = 1;

    std::size_t size() const {
        return static_cast<std::size_t>(n) * c * d * h * w;
    }
    std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
    bool valid() const { return n >= 1 && c >= 1 && d >= 1 && h >= 1 && w >= 1; }

    friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

template <typename T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;
    explicit BasicTensor(Shape shape, T fill = T(0)) : shape_(shape) {
        if (!shape.valid()) {
            throw std::invalid_argument("tensor extents must be >= 1, got " + to_string(shape));
        }
        data_.assign(shape.size(), fill);
    }
    BasicTensor(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
        if (!shape.valid() || data_.size() != shape.size()) {
            throw std::invalid_argument("tensor data length does not match " + to_string(shape));
        }
    }

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::size_t index(int n, int c, int d, int h, int w) const {
        return (((static_cast<std::size_t>(n) * shape_.c + c) * shape_.d + d) * shape_.h + h) * shape_.w + w;
    }
    T& at(int n, int c, int d, int h, int w) { return data_[index(n, c, d, h, w)]; }
    const T& at(int n, int c, int d, int h, int w) const { return data_[index(n, c, d, h, w)]; }

    // Start of the (n, c, d) spatial plane.
    T* plane(int n, int c, int d) { return data_.data() + index(n, c, d, 0, 0); }
    const T* plane(int n, int c, int d) const { return data_.data() + index(n, c, d, 0, 0); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }
    std::vector<T>& storage() { return data_; }
    const std::vector<T>& storage() const { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    // Same data, new extents with equal element count.
    BasicTensor reshaped(Shape s) const& { return BasicTensor(s, data_); }
    BasicTensor reshaped(Shape s) && { return BasicTensor(s, std::move(data_)); }

    template <typename U>
    BasicTensor<U> cast() const {
        return BasicTensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
    }

    friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

private:
    Shape shape_{};
    std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

}  // namespace vsr

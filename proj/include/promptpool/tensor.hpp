// Copyright (c) 2026 The promptpool Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace promptpool {

enum class Dtype { f32, f64 };

inline const char* to_string(Dtype d) { return d == Dtype::f32 ? "f32" : "f64"; }

template <typename T>
struct dtype_traits;

template <>
struct dtype_traits<float> {
    static constexpr Dtype value = Dtype::f32;
    static constexpr const char* npy_descr = "<f4";
};

template <>
struct dtype_traits<double> {
    static constexpr Dtype value = Dtype::f64;
    static constexpr const char* npy_descr = "<f8";
};

/// Extents of a 3-D token grid (frames x patch-grid width x patch-grid height).
struct Shape3 {
    std::size_t t = 1;
    std::size_t w = 1;
    std::size_t h = 1;

    std::size_t count() const { return t * w * h; }
    bool operator==(const Shape3&) const = default;
};

inline std::string to_string(const Shape3& s) {
    return "(" + std::to_string(s.t) + "," + std::to_string(s.w) + "," + std::to_string(s.h) + ")";
}

namespace detail {

// Product of extents with an overflow guard; rejects ranks above 4.
inline std::size_t checked_numel(const std::vector<std::size_t>& shape) {
    if (shape.size() > 4) {
        throw std::invalid_argument("tensor rank " + std::to_string(shape.size()) +
                                    " not supported (at most 4 axes)");
    }
    std::size_t n = 1;
    for (std::size_t e : shape) {
        if (e != 0 && n > std::numeric_limits<std::size_t>::max() / e) {
            throw std::invalid_argument("tensor shape product overflows size_t");
        }
        n *= e;
    }
    return n;
}

}  // namespace detail

/// Dense row-major tensor of up to 4 axes, contiguous and owning its storage.
/// Element (t,w,h,d) of a TxWxHxD tensor lives at flat index
/// ((t*W + w)*H + h)*D + d. No views, strides, or broadcasting.
template <typename T>
class Tensor {
    static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>,
                  "only binary32 / binary64 tensors are supported");

public:
    using value_type = T;

    Tensor() = default;

    /// Zero-filled tensor of the given shape.
    explicit Tensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), data_(detail::checked_numel(shape_), T(0)) {}

    Tensor(std::vector<std::size_t> shape, std::vector<T> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        const std::size_t expect = detail::checked_numel(shape_);
        if (data_.size() != expect) {
            throw std::invalid_argument("tensor data has " + std::to_string(data_.size()) +
                                        " elements, shape requires " + std::to_string(expect));
        }
    }

    static constexpr Dtype dtype() { return dtype_traits<T>::value; }

    std::size_t rank() const { return shape_.size(); }
    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
    std::size_t numel() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    const T* data() const { return data_.data(); }
    T* data() { return data_.data(); }
    const std::vector<T>& values() const { return data_; }

    T operator[](std::size_t flat) const { return data_[flat]; }
    T& operator[](std::size_t flat) { return data_[flat]; }

    /// Flat offset of (t,w,h) in a rank-3 tensor.
    std::size_t index3(std::size_t t, std::size_t w, std::size_t h) const {
        return (t * shape_[1] + w) * shape_[2] + h;
    }

    /// Flat offset of (t,w,h,d) in a rank-4 tensor.
    std::size_t index4(std::size_t t, std::size_t w, std::size_t h, std::size_t d) const {
        return ((t * shape_[1] + w) * shape_[2] + h) * shape_[3] + d;
    }

    bool operator==(const Tensor& other) const = default;

private:
    std::vector<std::size_t> shape_;
    std::vector<T> data_;
};

namespace detail {

inline std::string shape_string(const std::vector<std::size_t>& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

template <typename T>
void require_rank(const Tensor<T>& t, std::size_t rank, const char* what) {
    if (t.rank() != rank) {
        throw std::invalid_argument(std::string(what) + " must be rank-" + std::to_string(rank) +
                                    ", got shape " + shape_string(t.shape()));
    }
}

}  // namespace detail

/// First three extents of a rank-3 or rank-4 tensor as a grid shape.
template <typename T>
Shape3 grid_shape(const Tensor<T>& t) {
    if (t.rank() < 3) {
        throw std::invalid_argument("grid shape needs a rank-3 or rank-4 tensor, got shape " +
                                    detail::shape_string(t.shape()));
    }
    return Shape3{t.extent(0), t.extent(1), t.extent(2)};
}

}  // namespace promptpool

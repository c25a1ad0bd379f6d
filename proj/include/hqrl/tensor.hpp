#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "hqrl/error.hpp"

namespace hqrl {

inline std::int64_t numel_of(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw ArgumentError("tensor dimensions must be positive");
        n *= d;
    }
    return n;
}

// Dense row-major tensor. Spatial data uses HWC layout throughout.
template <class T>
struct Tensor {
    std::vector<int> shape;
    std::vector<T> v;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)), v(static_cast<std::size_t>(numel_of(shape)), T(0)) {}
    Tensor(std::initializer_list<int> s) : Tensor(std::vector<int>(s)) {}

    std::int64_t numel() const { return static_cast<std::int64_t>(v.size()); }
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
    int rank() const { return static_cast<int>(shape.size()); }

    T& operator[](std::int64_t i) { return v[static_cast<std::size_t>(i)]; }
    const T& operator[](std::int64_t i) const { return v[static_cast<std::size_t>(i)]; }

    // HWC accessors for rank-3 tensors.
    T& at(int y, int x, int c) {
        return v[static_cast<std::size_t>((static_cast<std::int64_t>(y) * shape[1] + x) * shape[2] + c)];
    }
    const T& at(int y, int x, int c) const {
        return v[static_cast<std::size_t>((static_cast<std::int64_t>(y) * shape[1] + x) * shape[2] + c)];
    }

    // Rank-2 accessors (rows, cols).
    T& at(int r, int c) { return v[static_cast<std::size_t>(static_cast<std::int64_t>(r) * shape[1] + c)]; }
    const T& at(int r, int c) const { return v[static_cast<std::size_t>(static_cast<std::int64_t>(r) * shape[1] + c)]; }

    void fill(T x) { std::fill(v.begin(), v.end(), x); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    template <class U>
    Tensor<U> cast() const {
        Tensor<U> out(shape);
        for (std::size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
        return out;
    }
};

template <class T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
    if (!a.same_shape(b)) throw ArgumentError(std::string(what) + ": tensor shape mismatch");
}

} // namespace hqrl

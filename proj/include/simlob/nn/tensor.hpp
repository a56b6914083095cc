#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <new>
#include <numeric>
#include <string>
#include <vector>

namespace simlob::nn {

using Shape = std::vector<std::size_t>;

// Vectorized kernels peel loops by buffer alignment, and the rounding order
// follows the peel. A fixed alignment keeps results independent of where the
// allocator happens to place a buffer.
inline constexpr std::size_t kTensorAlign = 64;

template <typename T>
struct AlignedAllocator {
    using value_type = T;

    AlignedAllocator() = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) {
        return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{kTensorAlign}));
    }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, std::align_val_t{kTensorAlign}); }

    template <typename U>
    bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

inline std::size_t shape_size(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

// Dense row-major tensor. Ops treat it as a matrix of rows() x cols(), where
// cols() is the last dimension.
template <typename T>
struct Tensor {
    Shape shape;
    AlignedVector<T> data;

    Tensor() = default;
    explicit Tensor(Shape s, T fill = T(0)) : shape(std::move(s)), data(shape_size(shape), fill) {}
    Tensor(Shape s, const std::vector<T>& values) : shape(std::move(s)), data(values.begin(), values.end()) {}
    Tensor(Shape s, AlignedVector<T> values) : shape(std::move(s)), data(std::move(values)) {}
    Tensor(Shape s, std::initializer_list<T> values) : shape(std::move(s)), data(values) {}

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t cols() const { return shape.empty() ? 1 : shape.back(); }
    std::size_t rows() const { return cols() == 0 ? 0 : size() / cols(); }
    bool empty() const { return data.empty(); }

    T* ptr() { return data.data(); }
    const T* ptr() const { return data.data(); }

    T& operator[](std::size_t i) { return data[i]; }
    const T& operator[](std::size_t i) const { return data[i]; }
    T& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
    const T& at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }
};

template <typename T>
bool all_finite(const Tensor<T>& t) {
    for (T v : t.data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

template <typename T>
struct Parameter {
    std::string name;
    Tensor<T> value;
};

template <typename T>
using ParameterList = std::vector<Parameter<T>>;

// One gradient tensor per parameter, aligned with a ParameterList.
template <typename T>
using Gradients = std::vector<Tensor<T>>;

template <typename T>
Gradients<T> zero_gradients(const ParameterList<T>& params) {
    Gradients<T> g;
    g.reserve(params.size());
    for (const auto& p : params) g.emplace_back(p.value.shape);
    return g;
}

} // namespace simlob::nn

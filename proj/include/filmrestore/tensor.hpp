#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "filmrestore/errors.hpp"
#include "filmrestore/rng.hpp"

namespace filmrestore {

using Shape = std::vector<int64_t>;

inline int64_t numel_of(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return n;
}

// Dense row-major tensor; flat storage, shape on the side.
template <class T>
struct Tensor {
    Shape shape;
    std::vector<T> v;

    Tensor() = default;
    explicit Tensor(Shape s) : shape(std::move(s)), v(static_cast<size_t>(numel_of(shape)), T(0)) {}
    Tensor(Shape s, T fill) : shape(std::move(s)), v(static_cast<size_t>(numel_of(shape)), fill) {}

    static Tensor zeros(Shape s) { return Tensor(std::move(s)); }
    static Tensor full(Shape s, T value) { return Tensor(std::move(s), value); }

    static Tensor randn(Shape s, Pcg32& rng, T stddev = T(1)) {
        Tensor t(std::move(s));
        for (auto& x : t.v) x = static_cast<T>(rng.normal()) * stddev;
        return t;
    }

    int64_t numel() const { return static_cast<int64_t>(v.size()); }
    int ndim() const { return static_cast<int>(shape.size()); }
    int64_t dim(int i) const { return shape[static_cast<size_t>(i)]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    T* data() { return v.data(); }
    const T* data() const { return v.data(); }

    T& operator[](int64_t i) { return v[static_cast<size_t>(i)]; }
    const T& operator[](int64_t i) const { return v[static_cast<size_t>(i)]; }

    // 4-D accessor for [n, h, w, c] layouts.
    T& at4(int64_t n, int64_t h, int64_t w, int64_t c) {
        return v[static_cast<size_t>(((n * shape[1] + h) * shape[2] + w) * shape[3] + c)];
    }
    const T& at4(int64_t n, int64_t h, int64_t w, int64_t c) const {
        return v[static_cast<size_t>(((n * shape[1] + h) * shape[2] + w) * shape[3] + c)];
    }
    T& at3(int64_t a, int64_t b, int64_t c) {
        return v[static_cast<size_t>((a * shape[1] + b) * shape[2] + c)];
    }
    const T& at3(int64_t a, int64_t b, int64_t c) const {
        return v[static_cast<size_t>((a * shape[1] + b) * shape[2] + c)];
    }
    T& at2(int64_t r, int64_t c) { return v[static_cast<size_t>(r * shape[1] + c)]; }
    const T& at2(int64_t r, int64_t c) const { return v[static_cast<size_t>(r * shape[1] + c)]; }

    Tensor reshaped(Shape s) const {
        if (numel_of(s) != numel()) throw InternalError("reshape: element count mismatch");
        Tensor out = *this;
        out.shape  = std::move(s);
        return out;
    }

    template <class U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.v.resize(v.size());
        for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
        return out;
    }

    T max_abs() const {
        T m = 0;
        for (T x : v) m = std::max(m, static_cast<T>(std::abs(static_cast<double>(x))));
        return m;
    }

    double norm2() const {
        double s = 0;
        for (T x : v) s += static_cast<double>(x) * static_cast<double>(x);
        return std::sqrt(s);
    }

    bool all_finite() const {
        for (T x : v)
            if (!std::isfinite(static_cast<double>(x))) return false;
        return true;
    }

    Tensor& operator+=(const Tensor& o) {
        for (size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
        return *this;
    }
    Tensor& operator*=(T s) {
        for (auto& x : v) x *= s;
        return *this;
    }
};

template <class T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
    if (!a.same_shape(b)) throw InternalError("max_abs_diff: shape mismatch");
    double m = 0;
    for (size_t i = 0; i < a.v.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a.v[i]) - static_cast<double>(b.v[i])));
    return m;
}

// C = A[M,K] * B[K,N], Eigen-backed.
template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0))
        throw InternalError("matmul: bad shapes");
    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const Mat> ma(a.data(), a.dim(0), a.dim(1));
    Eigen::Map<const Mat> mb(b.data(), b.dim(0), b.dim(1));
    Tensor<T> c({a.dim(0), b.dim(1)});
    Eigen::Map<Mat> mc(c.data(), c.dim(0), c.dim(1));
    mc.noalias() = ma * mb;
    return c;
}

// C += A^T * B, used by matmul backward without materialising transposes.
template <class T>
void matmul_at_b_acc(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& c) {
    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const Mat> ma(a.data(), a.dim(0), a.dim(1));
    Eigen::Map<const Mat> mb(b.data(), b.dim(0), b.dim(1));
    Eigen::Map<Mat> mc(c.data(), c.dim(0), c.dim(1));
    mc.noalias() += ma.transpose() * mb;
}

// C += A * B^T.
template <class T>
void matmul_a_bt_acc(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& c) {
    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const Mat> ma(a.data(), a.dim(0), a.dim(1));
    Eigen::Map<const Mat> mb(b.data(), b.dim(0), b.dim(1));
    Eigen::Map<Mat> mc(c.data(), c.dim(0), c.dim(1));
    mc.noalias() += ma * mb.transpose();
}

}  // namespace filmrestore

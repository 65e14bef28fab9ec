#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "demonet/errors.hpp"

namespace demonet {

// Dense row-major matrix. Every tensor in the engine is rank 2; vectors are 1xn.
template <typename Real>
class Matrix {
public:
    using value_type = Real;

    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, Real fill = Real(0)) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<Real> values) : rows_(rows), cols_(cols), data_(std::move(values)) {
        if (data_.size() != rows * cols) throw ShapeError("matrix payload does not match its shape");
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = Real(1);
        return m;
    }

    template <typename Other>
    static Matrix cast(const Matrix<Other>& src) {
        Matrix m(src.rows(), src.cols());
        std::transform(src.data().begin(), src.data().end(), m.data_.begin(), [](Other x) { return static_cast<Real>(x); });
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    Real& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    Real operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<Real> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const Real> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<Real> data() { return data_; }
    std::span<const Real> data() const { return data_; }
    const std::vector<Real>& values() const { return data_; }

    void fill(Real x) { std::fill(data_.begin(), data_.end(), x); }

    Matrix& operator+=(const Matrix& o) {
        if (!same_shape(o)) throw ShapeError("matrix += shape mismatch");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }

    bool operator==(const Matrix&) const = default;

    std::string shape_string() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<Real> data_;
};

template <typename Real>
Matrix<Real> multiply(const Matrix<Real>& a, const Matrix<Real>& b) {
    if (a.cols() != b.rows()) throw ShapeError("matmul inner dimensions " + a.shape_string() + " * " + b.shape_string());
    Matrix<Real> out(a.rows(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        Real* o = out.row(i).data();
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const Real x = a(i, k);
            if (x == Real(0)) continue;
            const Real* br = b.row(k).data();
            for (std::size_t j = 0; j < n; ++j) o[j] += x * br[j];
        }
    }
    return out;
}

// out += a^T * b
template <typename Real>
void gemm_tn_add(const Matrix<Real>& a, const Matrix<Real>& b, Matrix<Real>& out) {
    if (a.rows() != b.rows() || out.rows() != a.cols() || out.cols() != b.cols()) throw ShapeError("gemm_tn shape mismatch");
    const std::size_t n = b.cols();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const Real* br = b.row(r).data();
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const Real x = a(r, i);
            if (x == Real(0)) continue;
            Real* o = out.row(i).data();
            for (std::size_t j = 0; j < n; ++j) o[j] += x * br[j];
        }
    }
}

// out += a * b^T
template <typename Real>
void gemm_nt_add(const Matrix<Real>& a, const Matrix<Real>& b, Matrix<Real>& out) {
    if (a.cols() != b.cols() || out.rows() != a.rows() || out.cols() != b.rows()) throw ShapeError("gemm_nt shape mismatch");
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const Real* ar = a.row(i).data();
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const Real* br = b.row(j).data();
            Real s = 0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += ar[k] * br[k];
            out(i, j) += s;
        }
    }
}

template <typename Real>
Real frobenius_dot(const Matrix<Real>& a, const Matrix<Real>& b) {
    if (!a.same_shape(b)) throw ShapeError("inner product shape mismatch");
    Real s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
    return s;
}

template <typename Real>
bool all_finite(const Matrix<Real>& m) {
    return std::all_of(m.data().begin(), m.data().end(), [](Real x) { return std::isfinite(x); });
}

}  // namespace demonet

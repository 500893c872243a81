#ifndef OCETS_MATRIX_HPP
#define OCETS_MATRIX_HPP

#include <cassert>
#include <cstddef>
#include <vector>

#include "ocets/errors.hpp"

namespace ocets {

using Vec = std::vector<double>;

/// Dense row-major matrix of doubles. Dimension checks happen in the public
/// algebra routines, not in element access.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix from_rows(std::size_t rows, std::size_t cols, Vec data) {
        if (data.size() != rows * cols)
            throw InvalidDimension("Matrix::from_rows: data length mismatch");
        Matrix m;
        m.rows_ = rows;
        m.cols_ = cols;
        m.data_ = std::move(data);
        return m;
    }

    double& operator()(std::size_t r, std::size_t c) {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }
    double operator()(std::size_t r, std::size_t c) const {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    Vec& storage() { return data_; }
    const Vec& storage() const { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vec data_;
};

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
Vec operator*(const Matrix& a, const Vec& x);

Matrix transpose(const Matrix& a);

/// xxᵀ for a column vector x.
Matrix outer(const Vec& x, const Vec& y);

double dot(const Vec& a, const Vec& b);
double norm2(const Vec& a);
double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);

bool is_symmetric(const Matrix& a, double tol);
bool all_finite(const Matrix& a);
bool all_finite(const Vec& a);

}  // namespace ocets

#endif

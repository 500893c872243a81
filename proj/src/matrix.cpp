#include "ocets/matrix.hpp"

#include <cmath>

namespace ocets {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw InvalidDimension(std::string(op) + ": shape mismatch");
}

}  // namespace

Matrix operator+(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "Matrix::operator+");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.storage()[i] += b.storage()[i];
    return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "Matrix::operator-");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.storage()[i] -= b.storage()[i];
    return out;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw InvalidDimension("Matrix::operator*: inner dimension mismatch");
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

Matrix operator*(double s, const Matrix& a) {
    Matrix out = a;
    for (auto& v : out.storage()) v *= s;
    return out;
}

Vec operator*(const Matrix& a, const Vec& x) {
    if (a.cols() != x.size())
        throw InvalidDimension("Matrix*Vec: dimension mismatch");
    Vec out(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
        out[i] = acc;
    }
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

Matrix outer(const Vec& x, const Vec& y) {
    Matrix out(x.size(), y.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < y.size(); ++j) out(i, j) = x[i] * y[j];
    return out;
}

double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw InvalidDimension("dot: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm2(const Vec& a) {
    double acc = 0.0;
    for (double v : a) acc += v * v;
    return std::sqrt(acc);
}

double frobenius_norm(const Matrix& a) {
    double acc = 0.0;
    for (double v : a.storage()) acc += v * v;
    return std::sqrt(acc);
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double v : a.storage()) m = std::max(m, std::abs(v));
    return m;
}

bool is_symmetric(const Matrix& a, double tol) {
    if (a.rows() != a.cols()) return false;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j)
            if (std::abs(a(i, j) - a(j, i)) > tol) return false;
    return true;
}

bool all_finite(const Matrix& a) {
    for (double v : a.storage())
        if (!std::isfinite(v)) return false;
    return true;
}

bool all_finite(const Vec& a) {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace ocets

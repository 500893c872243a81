#include "ocets/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace ocets {

namespace {

constexpr int kMaxIter = 500;
constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;

// std::lgamma writes the global signgam on glibc, which serializes threaded
// callers; route through the reentrant variant where available.
double lgamma_ts(double x) {
#if defined(__GLIBC__)
    int sign = 0;
    return ::lgamma_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

// Series expansion of the lower incomplete gamma, stable for x < s + 1.
// lg_s is the precomputed log-gamma of s.
double gamma_series(double s, double x, double lg_s) {
    double term = 1.0 / s;
    double sum = term;
    double a = s;
    for (int n = 0; n < kMaxIter; ++n) {
        a += 1.0;
        term *= x / a;
        sum += term;
        if (std::abs(term) < std::abs(sum) * kEps) break;
    }
    return sum * std::exp(-x + s * std::log(x) - lg_s);
}

// Lentz continued fraction for the upper incomplete gamma, x >= s + 1.
double gamma_cf(double s, double x, double lg_s) {
    double b = x + 1.0 - s;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kMaxIter; ++i) {
        double an = -i * (i - s);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) break;
    }
    return std::exp(-x + s * std::log(x) - lg_s) * h;
}

// Continued fraction for the incomplete beta (Lentz).
double beta_cf(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

void check_prob(const ProbVector& p, double tol) {
    if (p.empty()) throw InvalidDimension("check_prob: empty vector");
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) throw InvariantViolation("check_prob: negative entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > tol)
        throw InvariantViolation("check_prob: sum " + std::to_string(sum) + " != 1");
}

double inc_gamma_lower_reg(double s, double x) {
    if (x < 0.0 || s <= 0.0) throw InvalidParameter("inc_gamma_lower_reg: bad arguments");
    if (x == 0.0) return 0.0;
    const double lg_s = lgamma_ts(s);
    if (x < s + 1.0) return gamma_series(s, x, lg_s);
    return 1.0 - gamma_cf(s, x, lg_s);
}

double erf(double x) {
    if (x == 0.0) return 0.0;
    constexpr double kLgammaHalf = 0.57236494292470008707;  // log Gamma(1/2)
    const double z = x * x;
    const double p =
        z < 1.5 ? gamma_series(0.5, z, kLgammaHalf) : 1.0 - gamma_cf(0.5, z, kLgammaHalf);
    return x > 0.0 ? p : -p;
}

double inc_beta_reg(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw InvalidParameter("inc_beta_reg: a, b must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double front = std::exp(lgamma_ts(a + b) - lgamma_ts(a) - lgamma_ts(b) +
                            a * std::log(x) + b * std::log1p(-x));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

void softmax_into(const double* logits, std::size_t k, double* out) {
    double mx = logits[0];
    for (std::size_t i = 1; i < k; ++i) mx = std::max(mx, logits[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (std::size_t i = 0; i < k; ++i) out[i] /= sum;
}

ProbVector softmax(const Vec& logits) {
    if (logits.empty()) throw InvalidDimension("softmax: empty input");
    ProbVector out(logits.size());
    softmax_into(logits.data(), logits.size(), out.data());
    return out;
}

Matrix kron(const Matrix& a, const Matrix& b) {
    if (a.empty() || b.empty()) throw InvalidDimension("kron: empty operand");
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const double aij = a(i, j);
            if (aij == 0.0) continue;
            for (std::size_t r = 0; r < b.rows(); ++r)
                for (std::size_t c = 0; c < b.cols(); ++c)
                    out(i * b.rows() + r, j * b.cols() + c) = aij * b(r, c);
        }
    return out;
}

EigenResult sym_eigen(const Matrix& m) {
    const std::size_t n = m.rows();
    if (n == 0 || m.rows() != m.cols())
        throw InvalidDimension("sym_eigen: matrix must be square and non-empty");
    if (!is_symmetric(m, 1e-10 * std::max(1.0, max_abs(m))))
        throw InvalidDimension("sym_eigen: matrix not symmetric");

    Matrix a = m;
    Matrix v = Matrix::identity(n);
    const double scale = std::max(1.0, frobenius_norm(a));

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (std::sqrt(2.0 * off) <= 1e-15 * scale) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) <= 1e-18 * scale) continue;
                const double apq = a(p, q);
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (std::size_t j = 0; j < n; ++j) {
                    const double apj = a(p, j), aqj = a(q, j);
                    a(p, j) = c * apj - s * aqj;
                    a(q, j) = s * apj + c * aqj;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    EigenResult res;
    res.values.resize(n);
    res.vectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        res.values[k] = a(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i) res.vectors(i, k) = v(i, order[k]);
    }
    return res;
}

Vec solve(const Matrix& a, const Vec& b) {
    const std::size_t n = a.rows();
    if (n == 0 || a.rows() != a.cols()) throw InvalidDimension("solve: matrix must be square");
    if (b.size() != n) throw InvalidDimension("solve: rhs length mismatch");

    Matrix lu = a;
    Vec x = b;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    double smallest_pivot = std::numeric_limits<double>::infinity();

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(lu(r, col)) > std::abs(lu(piv, col))) piv = r;
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(lu(col, c), lu(piv, c));
            std::swap(x[col], x[piv]);
        }
        const double pivot = lu(col, col);
        smallest_pivot = std::min(smallest_pivot, std::abs(pivot));
        if (std::abs(pivot) <= 1e-12)
            throw SingularMatrix("solve: pivot " + std::to_string(pivot) +
                                     " at column " + std::to_string(col),
                                 std::abs(pivot));
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = lu(r, col) / pivot;
            if (f == 0.0) continue;
            lu(r, col) = f;
            for (std::size_t c = col + 1; c < n; ++c) lu(r, c) -= f * lu(col, c);
            x[r] -= f * x[col];
        }
    }
    for (std::size_t i = n; i-- > 0;) {
        double acc = x[i];
        for (std::size_t c = i + 1; c < n; ++c) acc -= lu(i, c) * x[c];
        x[i] = acc / lu(i, i);
    }
    return x;
}

Vec gauss_sample(Rng& rng, double mean, double stddev, std::size_t n) {
    if (stddev < 0.0) throw InvalidParameter("gauss_sample: negative stddev");
    Vec out(n);
    if (stddev == 0.0) {
        std::fill(out.begin(), out.end(), mean);
        return out;
    }
    for (auto& v : out) v = rng.normal(mean, stddev);
    return out;
}

}  // namespace ocets

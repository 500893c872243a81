#ifndef OCETS_NUMERICS_HPP
#define OCETS_NUMERICS_HPP

#include <cstddef>
#include <utility>
#include <vector>

#include "ocets/matrix.hpp"
#include "ocets/rng.hpp"

namespace ocets {

/// Nonnegative vector summing to one. Producers (softmax, the target
/// encoders) guarantee the invariant; check_prob() asserts it at module
/// boundaries.
using ProbVector = std::vector<double>;

void check_prob(const ProbVector& p, double tol = 1e-9);

/// Gauss error function, |abs error| <= 1e-12 on |x| <= 6, saturating to +-1
/// beyond. Series for small arguments, Lentz continued fraction otherwise;
/// never calls the libm erf.
double erf(double x);

/// Regularized lower incomplete gamma P(s, x).
double inc_gamma_lower_reg(double s, double x);

/// Regularized incomplete beta I_x(a, b) via continued fraction.
double inc_beta_reg(double a, double b, double x);

/// Max-subtracted softmax; entries positive and summing to 1 within 1e-12.
ProbVector softmax(const Vec& logits);
void softmax_into(const double* logits, std::size_t k, double* out);

/// Kronecker product, (m·p)x(n·q) block layout.
Matrix kron(const Matrix& a, const Matrix& b);

struct EigenResult {
    Vec values;      // descending
    Matrix vectors;  // column i pairs with values[i]
};

/// Cyclic Jacobi eigendecomposition for small symmetric matrices.
EigenResult sym_eigen(const Matrix& m);

/// Solve a·x = b by LU with partial pivoting; throws SingularMatrix when the
/// smallest pivot magnitude is <= 1e-12.
Vec solve(const Matrix& a, const Vec& b);

/// n deterministic Gaussian draws.
Vec gauss_sample(Rng& rng, double mean, double stddev, std::size_t n);

}  // namespace ocets

#endif

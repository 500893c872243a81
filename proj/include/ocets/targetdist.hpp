#ifndef OCETS_TARGETDIST_HPP
#define OCETS_TARGETDIST_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "ocets/numerics.hpp"
#include "ocets/parallel.hpp"

namespace ocets {

/// Uniform partition of the support [a, b] into k ordered bins with shared
/// edges and midpoint representatives.
struct BinScheme {
    std::size_t k = 0;
    double a = 0.0;
    double b = 1.0;
    double delta = 0.0;
    Vec edges;    // k + 1 ascending, edges[0] == a, edges[k] == b
    Vec centers;  // (edges[i] + edges[i+1]) / 2
};

BinScheme make_bins(std::size_t k, double a, double b);

enum class DistFamily { truncated_gaussian, student_t, laplace };

DistFamily parse_family(const std::string& name);
std::string family_name(DistFamily f);

struct TargetDistSpec {
    DistFamily family = DistFamily::truncated_gaussian;
    double sigma = 0.01;
    double nu = 5.0;  // student_t only

    double lambda() const { return sigma / 1.41421356237309504880; }
};

/// Standard Student-t CDF with nu degrees of freedom (regularized incomplete
/// beta) and the closed-form standard Laplace CDF.
double student_t_cdf(double t, double nu);
double laplace_cdf(double x);

/// Bin-probability encoders: mass of the truncated distribution centered at
/// y_c over each bin, renormalized to sum exactly 1. The _into variants write
/// k probabilities into caller storage without allocating.
ProbVector encode_gaussian(double y_c, const BinScheme& bins, const TargetDistSpec& spec);
ProbVector encode_student_t(double y_c, const BinScheme& bins, const TargetDistSpec& spec);
ProbVector encode_laplace(double y_c, const BinScheme& bins, const TargetDistSpec& spec);
ProbVector encode(double y_c, const BinScheme& bins, const TargetDistSpec& spec);
void encode_into(double y_c, const BinScheme& bins, const TargetDistSpec& spec, double* out);

/// Bulk encoder over many targets; outputs are independent, so serial and
/// parallel modes produce identical vectors.
std::vector<ProbVector> encode_many(const Vec& targets, const BinScheme& bins,
                                    const TargetDistSpec& spec, Exec mode = Exec::parallel);

}  // namespace ocets

#endif

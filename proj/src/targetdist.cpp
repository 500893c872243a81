#include "ocets/targetdist.hpp"

#include <cmath>

namespace ocets {

namespace {

constexpr double kZFloor = 1e-300;

void require_in_support(double y_c, const BinScheme& bins) {
    if (!(y_c >= bins.a && y_c <= bins.b))
        throw OutOfSupport("encode: target " + std::to_string(y_c) + " outside [" +
                           std::to_string(bins.a) + ", " + std::to_string(bins.b) + "]");
}

// Differences a CDF over consecutive bin edges and renormalizes. cdf takes the
// standardized coordinate (edge - y_c) / scale.
template <typename Cdf>
void encode_with_cdf(double y_c, const BinScheme& bins, double scale, Cdf&& cdf, double* p) {
    const double z = cdf((bins.b - y_c) / scale) - cdf((bins.a - y_c) / scale);
    if (!(z > kZFloor))
        throw DegenerateDistribution("encode: normalization mass " + std::to_string(z));

    double prev = cdf((bins.edges[0] - y_c) / scale);
    double sum = 0.0;
    for (std::size_t i = 0; i < bins.k; ++i) {
        const double next = cdf((bins.edges[i + 1] - y_c) / scale);
        // CDF differencing can go epsilon-negative in far tails
        p[i] = std::max(next - prev, 0.0);
        sum += p[i];
        prev = next;
    }
    if (!(sum > kZFloor))
        throw DegenerateDistribution("encode: zero total bin mass");
    for (std::size_t i = 0; i < bins.k; ++i) p[i] /= sum;
}

}  // namespace

BinScheme make_bins(std::size_t k, double a, double b) {
    if (k < 2) throw InvalidParameter("make_bins: need k >= 2");
    if (!(b > a)) throw InvalidParameter("make_bins: need b > a");
    BinScheme s;
    s.k = k;
    s.a = a;
    s.b = b;
    s.delta = (b - a) / static_cast<double>(k);
    s.edges.resize(k + 1);
    for (std::size_t i = 0; i <= k; ++i)
        s.edges[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(k);
    s.edges[0] = a;
    s.edges[k] = b;
    s.centers.resize(k);
    for (std::size_t i = 0; i < k; ++i) s.centers[i] = 0.5 * (s.edges[i] + s.edges[i + 1]);
    return s;
}

DistFamily parse_family(const std::string& name) {
    if (name == "truncated_gaussian" || name == "gaussian") return DistFamily::truncated_gaussian;
    if (name == "student_t") return DistFamily::student_t;
    if (name == "laplace") return DistFamily::laplace;
    throw ConfigError("unknown distribution family '" + name + "'");
}

std::string family_name(DistFamily f) {
    switch (f) {
        case DistFamily::truncated_gaussian: return "truncated_gaussian";
        case DistFamily::student_t: return "student_t";
        case DistFamily::laplace: return "laplace";
    }
    return "?";
}

double student_t_cdf(double t, double nu) {
    if (nu <= 0.0) throw InvalidParameter("student_t_cdf: nu must be positive");
    if (t == 0.0) return 0.5;
    const double half = 0.5 * inc_beta_reg(0.5 * nu, 0.5, nu / (nu + t * t));
    return t > 0.0 ? 1.0 - half : half;
}

double laplace_cdf(double x) {
    return x < 0.0 ? 0.5 * std::exp(x) : 1.0 - 0.5 * std::exp(-x);
}

namespace {

void encode_gaussian_into(double y_c, const BinScheme& bins, const TargetDistSpec& spec,
                          double* out) {
    if (!(spec.sigma > 0.0)) throw InvalidParameter("encode_gaussian: sigma must be positive");
    require_in_support(y_c, bins);
    const double s = spec.sigma * 1.41421356237309504880;  // sigma * sqrt(2)
    // erf differencing equals the 1/(2Z) form up to the shared renormalization
    encode_with_cdf(y_c, bins, s, [](double u) { return 0.5 * ocets::erf(u); }, out);
}

void encode_student_t_into(double y_c, const BinScheme& bins, const TargetDistSpec& spec,
                           double* out) {
    if (!(spec.sigma > 0.0)) throw InvalidParameter("encode_student_t: sigma must be positive");
    if (!(spec.nu > 0.0)) throw InvalidParameter("encode_student_t: nu must be positive");
    require_in_support(y_c, bins);
    const double nu = spec.nu;
    encode_with_cdf(y_c, bins, spec.sigma, [nu](double u) { return student_t_cdf(u, nu); },
                    out);
}

void encode_laplace_into(double y_c, const BinScheme& bins, const TargetDistSpec& spec,
                         double* out) {
    if (!(spec.sigma > 0.0)) throw InvalidParameter("encode_laplace: sigma must be positive");
    require_in_support(y_c, bins);
    encode_with_cdf(y_c, bins, spec.lambda(), laplace_cdf, out);
}

}  // namespace

ProbVector encode_gaussian(double y_c, const BinScheme& bins, const TargetDistSpec& spec) {
    ProbVector p(bins.k);
    encode_gaussian_into(y_c, bins, spec, p.data());
    return p;
}

ProbVector encode_student_t(double y_c, const BinScheme& bins, const TargetDistSpec& spec) {
    ProbVector p(bins.k);
    encode_student_t_into(y_c, bins, spec, p.data());
    return p;
}

ProbVector encode_laplace(double y_c, const BinScheme& bins, const TargetDistSpec& spec) {
    ProbVector p(bins.k);
    encode_laplace_into(y_c, bins, spec, p.data());
    return p;
}

void encode_into(double y_c, const BinScheme& bins, const TargetDistSpec& spec, double* out) {
    switch (spec.family) {
        case DistFamily::truncated_gaussian: return encode_gaussian_into(y_c, bins, spec, out);
        case DistFamily::student_t: return encode_student_t_into(y_c, bins, spec, out);
        case DistFamily::laplace: return encode_laplace_into(y_c, bins, spec, out);
    }
    throw ConfigError("encode: unhandled family");
}

ProbVector encode(double y_c, const BinScheme& bins, const TargetDistSpec& spec) {
    ProbVector p(bins.k);
    encode_into(y_c, bins, spec, p.data());
    return p;
}

std::vector<ProbVector> encode_many(const Vec& targets, const BinScheme& bins,
                                    const TargetDistSpec& spec, Exec mode) {
    std::vector<ProbVector> out(targets.size());
    ErrorCapture errors;
    parallel_index(targets.size(), mode, [&](std::size_t i) {
        errors.run([&] { out[i] = encode(targets[i], bins, spec); });
    });
    errors.rethrow();
    return out;
}

}  // namespace ocets

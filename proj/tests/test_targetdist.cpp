#include "doctest.h"

#include <cmath>

#include "ocets/targetdist.hpp"
#include "oracles.hpp"

using namespace ocets;

TEST_CASE("make_bins examples") {
    const BinScheme b4 = make_bins(4, 0.0, 1.0);
    CHECK(b4.delta == doctest::Approx(0.25));
    const Vec edges{0.0, 0.25, 0.5, 0.75, 1.0};
    const Vec centers{0.125, 0.375, 0.625, 0.875};
    for (std::size_t i = 0; i < edges.size(); ++i)
        CHECK(b4.edges[i] == doctest::Approx(edges[i]).epsilon(1e-14));
    for (std::size_t i = 0; i < centers.size(); ++i)
        CHECK(b4.centers[i] == doctest::Approx(centers[i]).epsilon(1e-14));

    const BinScheme b2 = make_bins(2, -1.0, 1.0);
    CHECK(b2.centers[0] == doctest::Approx(-0.5));
    CHECK(b2.centers[1] == doctest::Approx(0.5));

    const BinScheme b100 = make_bins(100, 0.0, 1.0);
    CHECK(b100.delta == doctest::Approx(0.01).epsilon(1e-14));
    CHECK(b100.edges.front() == 0.0);
    CHECK(b100.edges.back() == 1.0);

    CHECK_THROWS_AS(make_bins(1, 0.0, 1.0), InvalidParameter);
    CHECK_THROWS_AS(make_bins(4, 1.0, 1.0), InvalidParameter);
}

TEST_CASE("bin edges are shared and centers interior") {
    const BinScheme b = make_bins(37, -1.0, 1.0);
    for (std::size_t i = 0; i + 1 < b.edges.size(); ++i) CHECK(b.edges[i] < b.edges[i + 1]);
    for (std::size_t i = 0; i < b.k; ++i) {
        CHECK(b.centers[i] > b.edges[i]);
        CHECK(b.centers[i] < b.edges[i + 1]);
    }
}

namespace {

TargetDistSpec gauss_spec(double sigma) {
    TargetDistSpec s;
    s.family = DistFamily::truncated_gaussian;
    s.sigma = sigma;
    return s;
}

TargetDistSpec t_spec(double sigma, double nu = 5.0) {
    TargetDistSpec s;
    s.family = DistFamily::student_t;
    s.sigma = sigma;
    s.nu = nu;
    return s;
}

TargetDistSpec laplace_spec(double sigma) {
    TargetDistSpec s;
    s.family = DistFamily::laplace;
    s.sigma = sigma;
    return s;
}

// Quadrature oracle: integrates the family's density kernel over each bin and
// normalizes by the integral over the support.
ProbVector quadrature_encode(double y_c, const BinScheme& bins, const TargetDistSpec& spec) {
    std::function<double(double)> kernel;
    switch (spec.family) {
        case DistFamily::truncated_gaussian:
            kernel = [&](double y) { return oracles::gauss_kernel(y, y_c, spec.sigma); };
            break;
        case DistFamily::student_t:
            kernel = [&](double y) {
                return oracles::student_t_kernel(y, y_c, spec.sigma, spec.nu);
            };
            break;
        case DistFamily::laplace:
            kernel = [&](double y) { return oracles::laplace_kernel(y, y_c, spec.lambda()); };
            break;
    }
    ProbVector p(bins.k);
    double total = 0.0;
    for (std::size_t i = 0; i < bins.k; ++i) {
        p[i] = oracles::integrate(kernel, bins.edges[i], bins.edges[i + 1], 1e-14);
        total += p[i];
    }
    for (auto& v : p) v /= total;
    return p;
}

}  // namespace

TEST_CASE("encode_gaussian midpoint symmetry") {
    const BinScheme bins = make_bins(2, 0.0, 1.0);
    for (double sigma : {0.01, 0.1, 1.0}) {
        const ProbVector p = encode_gaussian(0.5, bins, gauss_spec(sigma));
        CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("encode_gaussian concentrates at small sigma") {
    const BinScheme bins = make_bins(2, 0.0, 1.0);
    const ProbVector p = encode_gaussian(0.25, bins, gauss_spec(0.01));
    const ProbVector q = quadrature_encode(0.25, bins, gauss_spec(0.01));
    CHECK(p[1] < 1e-8);
    CHECK(std::abs(p[0] - q[0]) <= 1e-9);
    CHECK(std::abs(p[1] - q[1]) <= 1e-9);
}

TEST_CASE("encode_gaussian flattens to uniform at huge sigma") {
    const BinScheme bins = make_bins(4, 0.0, 1.0);
    const ProbVector p = encode_gaussian(0.37, bins, gauss_spec(1000.0));
    const ProbVector q = quadrature_encode(0.37, bins, gauss_spec(1000.0));
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(std::abs(p[i] - 0.25) <= 1e-3);
        CHECK(std::abs(p[i] - q[i]) <= 1e-7);
    }
}

TEST_CASE("encode_student_t symmetry and gaussian limit") {
    const BinScheme bins = make_bins(2, 0.0, 1.0);
    const ProbVector p = encode_student_t(0.5, bins, t_spec(0.05));
    CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-12));

    const BinScheme b10 = make_bins(10, 0.0, 1.0);
    const ProbVector limit = encode_student_t(0.3, b10, t_spec(0.05, 1e6));
    const ProbVector gauss = encode_gaussian(0.3, b10, gauss_spec(0.05));
    for (std::size_t i = 0; i < 10; ++i) CHECK(std::abs(limit[i] - gauss[i]) <= 1e-4);
}

TEST_CASE("student_t tails are heavier than gaussian") {
    const BinScheme bins = make_bins(100, 0.0, 1.0);
    const double y_c = 0.25, sigma = 0.01;
    const ProbVector t = encode_student_t(y_c, bins, t_spec(sigma));
    const ProbVector g = encode_gaussian(y_c, bins, gauss_spec(sigma));
    double t_tail = 0.0, g_tail = 0.0;
    for (std::size_t i = 0; i < bins.k; ++i) {
        if (std::abs(bins.centers[i] - y_c) > 10.0 * sigma) {
            t_tail += t[i];
            g_tail += g[i];
        }
    }
    CHECK(t_tail > g_tail);
}

TEST_CASE("encode_laplace closed-form center bin") {
    const BinScheme bins = make_bins(100, 0.0, 1.0);
    const TargetDistSpec spec = laplace_spec(0.01);
    const double y_c = 0.505;  // center of bin 50, deep interior
    const ProbVector p = encode_laplace(y_c, bins, spec);
    const double h = bins.delta / 2.0;
    const double expected = 1.0 - std::exp(-h / spec.lambda());
    CHECK(std::abs(p[50] - expected) <= 1e-9);
}

TEST_CASE("laplace scale is sigma over sqrt two") {
    const TargetDistSpec spec = laplace_spec(0.01);
    CHECK(std::abs(spec.lambda() - 0.0070710678118654745) <= 1e-12);
}

TEST_CASE("encode dispatches per family") {
    const BinScheme bins = make_bins(8, 0.0, 1.0);
    CHECK(encode(0.4, bins, gauss_spec(0.05)) == encode_gaussian(0.4, bins, gauss_spec(0.05)));
    CHECK(encode(0.4, bins, t_spec(0.05)) == encode_student_t(0.4, bins, t_spec(0.05)));
    CHECK(encode(0.4, bins, laplace_spec(0.05)) ==
          encode_laplace(0.4, bins, laplace_spec(0.05)));
    CHECK_THROWS_AS(parse_family("cauchy"), ConfigError);
}

TEST_CASE("encoders reject out-of-support targets and degenerate mass") {
    const BinScheme bins = make_bins(4, 0.0, 1.0);
    CHECK_THROWS_AS(encode_gaussian(1.5, bins, gauss_spec(0.1)), OutOfSupport);
    CHECK_THROWS_AS(encode_gaussian(-0.01, bins, gauss_spec(0.1)), OutOfSupport);
    CHECK_THROWS_AS(encode_gaussian(0.5, bins, gauss_spec(1e308)), DegenerateDistribution);
}

TEST_CASE("all families: sum, nonnegativity, mirror symmetry") {
    Rng rng(5);
    const DistFamily families[] = {DistFamily::truncated_gaussian, DistFamily::student_t,
                                   DistFamily::laplace};
    for (int trial = 0; trial < 500; ++trial) {
        TargetDistSpec spec;
        spec.family = families[trial % 3];
        spec.sigma = std::pow(10.0, rng.uniform(-3.0, 0.0));
        const std::size_t k = 2 + rng.below(99);
        const BinScheme bins = make_bins(k, 0.0, 1.0);
        const double y_c = rng.uniform(0.0, 1.0);

        const ProbVector p = encode(y_c, bins, spec);
        double sum = 0.0;
        for (double v : p) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);

        const ProbVector mirrored = encode(1.0 - y_c, bins, spec);
        for (std::size_t i = 0; i < k; ++i)
            CHECK(std::abs(p[i] - mirrored[k - 1 - i]) <= 1e-9);
    }
}

TEST_CASE("bin containing the target carries the largest mass") {
    Rng rng(17);
    const DistFamily families[] = {DistFamily::truncated_gaussian, DistFamily::student_t,
                                   DistFamily::laplace};
    for (int trial = 0; trial < 150; ++trial) {
        const std::size_t k = 4 + rng.below(60);
        const BinScheme bins = make_bins(k, 0.0, 1.0);
        TargetDistSpec spec;
        spec.family = families[trial % 3];
        spec.sigma = rng.uniform(0.1, 1.0) * bins.delta;
        const double y_c = rng.uniform(0.0, 1.0);
        const ProbVector p = encode(y_c, bins, spec);

        std::size_t own = std::min<std::size_t>(
            static_cast<std::size_t>((y_c - bins.a) / bins.delta), k - 1);
        for (std::size_t i = 0; i < k; ++i) CHECK(p[own] >= p[i] - 1e-12);
    }
}

TEST_CASE("closed forms match quadrature") {
    Rng rng(29);
    const DistFamily families[] = {DistFamily::truncated_gaussian, DistFamily::student_t,
                                   DistFamily::laplace};
    for (DistFamily family : families) {
        for (int trial = 0; trial < 20; ++trial) {
            TargetDistSpec spec;
            spec.family = family;
            spec.sigma = std::pow(10.0, rng.uniform(-2.0, 0.0));
            const std::size_t k = 2 + rng.below(40);
            const BinScheme bins = make_bins(k, 0.0, 1.0);
            const double y_c = rng.uniform(0.0, 1.0);
            const ProbVector p = encode(y_c, bins, spec);
            const ProbVector q = quadrature_encode(y_c, bins, spec);
            for (std::size_t i = 0; i < k; ++i) CHECK(std::abs(p[i] - q[i]) <= 1e-7);
        }
    }
}

TEST_CASE("bin probabilities move continuously across edges") {
    const BinScheme bins = make_bins(20, 0.0, 1.0);
    const TargetDistSpec spec = gauss_spec(0.05);
    const double edge = bins.edges[7];
    ProbVector prev = encode(edge - 5e-8, bins, spec);
    for (int step = -4; step <= 5; ++step) {
        const double y = edge + 1e-8 * step;
        const ProbVector cur = encode(y, bins, spec);
        for (std::size_t i = 0; i < bins.k; ++i) CHECK(std::abs(cur[i] - prev[i]) <= 1e-6);
        prev = cur;
    }
}

TEST_CASE("student_t_cdf against quadrature of the density") {
    for (double t : {-3.0, -1.0, -0.2, 0.0, 0.4, 1.7, 4.0}) {
        const double nu = 5.0;
        const double norm =
            std::exp(std::lgamma((nu + 1.0) / 2.0) - std::lgamma(nu / 2.0)) /
            std::sqrt(nu * oracles::kPi);
        // integrate from 0 to t and add half
        const double tail = oracles::integrate(
            [&](double y) { return norm * oracles::student_t_kernel(y, 0.0, 1.0, nu); }, 0.0,
            t, 1e-13);
        CHECK(std::abs(student_t_cdf(t, nu) - (0.5 + tail)) <= 1e-10);
    }
    CHECK(student_t_cdf(0.0, 5.0) == 0.5);
    CHECK(laplace_cdf(0.0) == 0.5);
}

TEST_CASE("encode_many matches scalar encode in both modes") {
    const BinScheme bins = make_bins(25, 0.0, 1.0);
    const TargetDistSpec spec = gauss_spec(0.03);
    Rng rng(3);
    Vec targets(64);
    for (auto& v : targets) v = rng.uniform(0.0, 1.0);
    const auto par = encode_many(targets, bins, spec, Exec::parallel);
    const auto ser = encode_many(targets, bins, spec, Exec::serial);
    REQUIRE(par.size() == targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        CHECK(par[i] == ser[i]);
        CHECK(par[i] == encode(targets[i], bins, spec));
    }
}

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ocets/loss.hpp"
#include "oracles.hpp"

using namespace ocets;

TEST_CASE("ce of a perfect one-hot prediction is zero") {
    const ProbVector onehot{0.0, 1.0, 0.0};
    CHECK(ce(onehot, onehot) == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("ce and oce reproduce the four reference cases") {
    const ProbVector true1{0.8, 0.1, 0.1};
    const ProbVector pred1a{0.3, 0.5, 0.2};
    const ProbVector pred1b{0.4, 0.1, 0.5};
    const ProbVector true2{0.2, 0.1, 0.7};
    const ProbVector pred2a{0.6, 0.2, 0.2};
    const ProbVector pred2b{0.3, 0.5, 0.2};

    CHECK(std::abs(ce(true1, pred1a, LogBase::base10) - 0.518) <= 0.001);
    CHECK(std::abs(ce(true1, pred1b, LogBase::base10) - 0.449) <= 0.001);
    CHECK(std::abs(ce(true2, pred2a, LogBase::base10) - 0.604) <= 0.001);
    CHECK(std::abs(ce(true2, pred2b, LogBase::base10) - 0.624) <= 0.001);

    CHECK(std::abs(oce(true1, pred1a, LogBase::natural) - 1.396) <= 0.001);
    CHECK(std::abs(oce(true1, pred1b, LogBase::natural) - 1.528) <= 0.001);
    CHECK(std::abs(oce(true2, pred2a, LogBase::natural) - 2.029) <= 0.001);
    CHECK(std::abs(oce(true2, pred2b, LogBase::natural) - 1.720) <= 0.001);
}

TEST_CASE("cumsum_head examples") {
    const Vec c = cumsum_head({0.3, 0.5, 0.2});
    CHECK(c[0] == doctest::Approx(0.3));
    CHECK(c[1] == doctest::Approx(0.8));

    const Vec clamped = cumsum_head({1.0, 0.0, 0.0});
    CHECK(clamped[0] == doctest::Approx(1.0 - kProbFloor));
    CHECK(clamped[1] == doctest::Approx(1.0 - kProbFloor));

    const Vec uniform = cumsum_head({0.25, 0.25, 0.25, 0.25});
    CHECK(uniform[0] == doctest::Approx(0.25));
    CHECK(uniform[1] == doctest::Approx(0.5));
    CHECK(uniform[2] == doctest::Approx(0.75));

    CHECK_THROWS_AS(cumsum_head({1.0}), InvalidDimension);
    CHECK_THROWS_AS(oce({0.5, 0.5}, {0.3, 0.3, 0.4}), InvalidDimension);
}

TEST_CASE("oce self-value is the cumulative binary entropy and a minimum") {
    const ProbVector p{0.5, 0.3, 0.2};
    const Vec cp = cumsum_head(p);
    double expected = 0.0;
    for (double c : cp) expected -= c * std::log(c) + (1.0 - c) * std::log(1.0 - c);
    CHECK(oce(p, p) == doctest::Approx(expected).epsilon(1e-12));

    // coarse grid search over the simplex confirms q = p minimizes oce(p, .)
    const double self = oce(p, p);
    for (double q1 = 0.02; q1 < 1.0; q1 += 0.02)
        for (double q2 = 0.02; q1 + q2 < 1.0; q2 += 0.02) {
            const ProbVector q{q1, q2, 1.0 - q1 - q2};
            CHECK(oce(p, q) >= self - 1e-12);
        }
}

TEST_CASE("oce is ordinal sensitive where ce is blind") {
    const ProbVector p{1.0, 0.0, 0.0};
    const double q1 = 0.5;
    const ProbVector near{q1, 0.4, 0.1};
    const ProbVector far{q1, 0.1, 0.4};
    CHECK(ce(p, near) == doctest::Approx(ce(p, far)).epsilon(1e-12));
    CHECK(oce(p, far) > oce(p, near) + 1e-6);
}

TEST_CASE("ce permutation invariance, oce reversal invariance") {
    Rng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t k = 3 + rng.below(8);
        Vec lp(k), lq(k);
        for (auto& v : lp) v = rng.normal(0.0, 1.0);
        for (auto& v : lq) v = rng.normal(0.0, 1.0);
        const ProbVector p = softmax(lp), q = softmax(lq);

        std::vector<std::size_t> perm(k);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        rng.shuffle(perm);
        ProbVector pp(k), qp(k), pr(k), qr(k);
        for (std::size_t i = 0; i < k; ++i) {
            pp[i] = p[perm[i]];
            qp[i] = q[perm[i]];
            pr[i] = p[k - 1 - i];
            qr[i] = q[k - 1 - i];
        }
        CHECK(ce(pp, qp) == doctest::Approx(ce(p, q)).epsilon(1e-12));
        CHECK(oce(pr, qr) == doctest::Approx(oce(p, q)).epsilon(1e-10));
    }
}

TEST_CASE("kl nonnegativity and loss nonnegativity") {
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t k = 2 + rng.below(10);
        Vec lp(k), lq(k);
        for (auto& v : lp) v = rng.normal(0.0, 2.0);
        for (auto& v : lq) v = rng.normal(0.0, 2.0);
        const ProbVector p = softmax(lp), q = softmax(lq);
        const double entropy = ce(p, p);
        CHECK(ce(p, q) >= entropy - 1e-10);
        CHECK(ce(p, q) >= 0.0);
        CHECK(oce(p, q) >= 0.0);
    }
}

TEST_CASE("oce_grad_logits vanishes at a match") {
    Rng rng(37);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t k = 2 + rng.below(10);
        Vec logits(k);
        for (auto& v : logits) v = rng.normal(0.0, 1.5);
        const ProbVector p = softmax(logits);
        const Vec g = oce_grad_logits(p, logits);
        for (double v : g) CHECK(std::abs(v) <= 1e-9);
    }
}

TEST_CASE("oce_grad_logits at K=2 reduces to the binary form") {
    Rng rng(41);
    for (int trial = 0; trial < 30; ++trial) {
        Vec logits{rng.normal(0.0, 1.0), rng.normal(0.0, 1.0)};
        Vec lp{rng.normal(0.0, 1.0), rng.normal(0.0, 1.0)};
        const ProbVector p = softmax(lp);
        const ProbVector q = softmax(logits);
        const Vec g = oce_grad_logits(p, logits);
        const double expected = q[0] - p[0];
        CHECK(g[0] == doctest::Approx(expected).epsilon(1e-10));
        CHECK(g[1] == doctest::Approx(-expected).epsilon(1e-10));
    }
}

TEST_CASE("oce_grad_logits matches central finite differences") {
    Rng rng(43);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t k = 2 + rng.below(99);
        Vec logits(k), lp(k);
        for (auto& v : logits) v = rng.normal(0.0, 1.0);
        for (auto& v : lp) v = rng.normal(0.0, 1.0);
        const ProbVector p = softmax(lp);

        const Vec analytic = oce_grad_logits(p, logits);
        const Vec fd = oracles::fd_gradient(
            [&](const Vec& z) { return oce(p, softmax(z)); }, logits, 1e-5);
        CHECK(oracles::max_rel_diff(analytic, fd) <= 1e-6);
    }
}

TEST_CASE("ce_grad_logits matches finite differences") {
    Rng rng(53);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t k = 2 + rng.below(20);
        Vec logits(k), lp(k);
        for (auto& v : logits) v = rng.normal(0.0, 1.0);
        for (auto& v : lp) v = rng.normal(0.0, 1.0);
        const ProbVector p = softmax(lp);
        const Vec analytic = ce_grad_logits(p, logits);
        const Vec fd = oracles::fd_gradient(
            [&](const Vec& z) { return ce(p, softmax(z)); }, logits, 1e-5);
        CHECK(oracles::max_rel_diff(analytic, fd) <= 1e-6);
    }
}

namespace {

ProbGrid grid_of(const ProbVector& p, std::size_t h, std::size_t c) {
    return ProbGrid(h, std::vector<ProbVector>(c, p));
}

}  // namespace

TEST_CASE("batch_objective means and determinism") {
    const ProbVector p{0.7, 0.2, 0.1};
    const ProbVector q{0.3, 0.3, 0.4};
    const ProbVector p2{0.1, 0.8, 0.1};
    const ProbVector q2{0.2, 0.5, 0.3};

    const std::vector<ProbGrid> t1{grid_of(p, 1, 1)};
    const std::vector<ProbGrid> q1{grid_of(q, 1, 1)};
    CHECK(batch_objective(t1, q1) == doctest::Approx(oce(p, q)).epsilon(1e-14));

    const std::vector<ProbGrid> t2{grid_of(p, 1, 1), grid_of(p2, 1, 1)};
    const std::vector<ProbGrid> q2g{grid_of(q, 1, 1), grid_of(q2, 1, 1)};
    const double two = batch_objective(t2, q2g);
    CHECK(two == doctest::Approx((oce(p, q) + oce(p2, q2)) / 2.0).epsilon(1e-14));

    // duplicating the batch leaves the mean unchanged
    std::vector<ProbGrid> t4 = t2, q4 = q2g;
    t4.insert(t4.end(), t2.begin(), t2.end());
    q4.insert(q4.end(), q2g.begin(), q2g.end());
    CHECK(batch_objective(t4, q4) == doctest::Approx(two).epsilon(1e-14));

    // fixed-slot reduction: serial and parallel agree bitwise
    CHECK(batch_objective(t4, q4, LossKind::oce, Exec::serial) ==
          batch_objective(t4, q4, LossKind::oce, Exec::parallel));
    CHECK(std::abs(batch_objective_reference(t4, q4) - two) <= 1e-12);

    std::vector<ProbGrid> ragged{grid_of(p, 2, 1)};
    CHECK_THROWS_AS(batch_objective(t1, ragged), InvalidDimension);
}

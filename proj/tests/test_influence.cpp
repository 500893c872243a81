#include "doctest.h"

#include <cmath>
#include <string>

#include "ocets/influence.hpp"
#include "ocets/rng.hpp"
#include "oracles.hpp"

using namespace ocets;

namespace {

// Closed-form reweighted least squares: theta minimizing
// (1-eps)/n sum (y_i - x_i't)^2/2 + eps (y - x't)^2/2.
Vec reweighted_ls(const std::vector<Vec>& xs, const Vec& ys, const Vec& zx, double zy,
                  double eps) {
    const std::size_t d = xs[0].size();
    Matrix lhs(d, d);
    Vec rhs(d, 0.0);
    const double w = (1.0 - eps) / static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = 0; b < d; ++b) lhs(a, b) += w * xs[i][a] * xs[i][b];
            rhs[a] += w * xs[i][a] * ys[i];
        }
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = 0; b < d; ++b) lhs(a, b) += eps * zx[a] * zx[b];
        rhs[a] += eps * zx[a] * zy;
    }
    return solve(lhs, rhs);
}

double softmax_ce_value(const std::vector<Vec>& xs, const std::vector<std::size_t>& labels,
                        const Matrix& beta, const Vec& zx, std::size_t zlabel, double eps) {
    auto point_loss = [&](const Vec& x, std::size_t y) {
        Vec logits(beta.cols(), 0.0);
        for (std::size_t k = 0; k < beta.cols(); ++k)
            for (std::size_t i = 0; i < x.size(); ++i) logits[k] += x[i] * beta(i, k);
        const ProbVector s = softmax(logits);
        return -std::log(std::max(s[y], 1e-300));
    };
    double acc = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) acc += point_loss(xs[i], labels[i]);
    return (1.0 - eps) * acc / static_cast<double>(xs.size()) + eps * point_loss(zx, zlabel);
}

// Full-batch gradient descent on the reweighted softmax CE to a gradient
// norm of 1e-10; the oracle refit for the classification influence check.
Matrix gd_refit(const std::vector<Vec>& xs, const std::vector<std::size_t>& labels,
                const Vec& zx, std::size_t zlabel, double eps, Matrix beta,
                std::size_t max_iters = 400000) {
    const std::size_t d = beta.rows(), k = beta.cols();
    double lipschitz = eps * dot(zx, zx);
    for (const auto& x : xs) lipschitz += dot(x, x) / static_cast<double>(xs.size());
    const double step = 1.0 / lipschitz;

    Matrix grad(d, k);
    for (std::size_t it = 0; it < max_iters; ++it) {
        for (auto& g : grad.storage()) g = 0.0;
        auto add_point = [&](const Vec& x, std::size_t y, double weight) {
            Vec logits(k, 0.0);
            for (std::size_t c = 0; c < k; ++c)
                for (std::size_t i = 0; i < d; ++i) logits[c] += x[i] * beta(i, c);
            const ProbVector s = softmax(logits);
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t c = 0; c < k; ++c)
                    grad(i, c) += weight * x[i] * (s[c] - (c == y ? 1.0 : 0.0));
        };
        const double w = (1.0 - eps) / static_cast<double>(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) add_point(xs[i], labels[i], w);
        add_point(zx, zlabel, eps);

        double gnorm = 0.0;
        for (double g : grad.storage()) gnorm += g * g;
        if (std::sqrt(gnorm) <= 1e-10) return beta;
        for (std::size_t i = 0; i < beta.size(); ++i)
            beta.storage()[i] -= step * grad.storage()[i];
    }
    FAIL("gd_refit did not reach the 1e-10 gradient norm");
    return beta;
}

}  // namespace

TEST_CASE("if_mse examples") {
    RegressionInstance inst;
    inst.sigma_x = Matrix::identity(2);
    inst.x = {1.0, 0.0};
    inst.theta = {0.0, 0.0};
    inst.y = 2.0;
    const Vec v = if_mse(inst);
    CHECK(v[0] == doctest::Approx(2.0));
    CHECK(v[1] == doctest::Approx(0.0));

    inst.y = 0.0;  // zero residual
    const Vec z = if_mse(inst);
    CHECK(norm2(z) == 0.0);
}

TEST_CASE("if_mse matches the reweighted least-squares oracle") {
    Rng rng(51);
    const std::size_t d = 3, n = 60;
    std::vector<Vec> xs(n, Vec(d));
    Vec ys(n);
    Vec truth{0.5, -1.0, 2.0};
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : xs[i]) v = rng.normal(0.0, 1.0);
        ys[i] = dot(xs[i], truth) + rng.normal(0.0, 0.3);
    }
    Matrix sigma(d, d);
    for (const auto& x : xs)
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) sigma(a, b) += x[a] * x[b] / n;

    const Vec theta_hat = reweighted_ls(xs, ys, xs[0], ys[0], 0.0);

    RegressionInstance inst;
    inst.sigma_x = sigma;
    inst.theta = theta_hat;
    inst.x = {1.2, -0.7, 0.4};
    inst.y = 3.0;
    const Vec analytic = if_mse(inst);

    const double eps = 1e-5;
    const Vec theta_eps = reweighted_ls(xs, ys, inst.x, inst.y, eps);
    Vec fd(d);
    for (std::size_t i = 0; i < d; ++i) fd[i] = (theta_eps[i] - theta_hat[i]) / eps;

    CHECK(oracles::max_rel_diff(analytic, fd) <= 1e-3);
    CHECK(oracles::cosine(analytic, fd) >= 0.999);
}

TEST_CASE("softmax_grad examples") {
    ClassificationInstance inst;
    inst.x = {0.5, -1.0};
    inst.label = 1;
    inst.beta = Matrix(2, 3);

    // exact one-hot sigma via an overwhelming logit gap
    inst.beta(0, 1) = 1600.0;  // x[0] * 1600 = 800
    const Vec s = inst.sigma();
    CHECK(s[1] == 1.0);
    const Matrix g = softmax_grad(inst);
    for (double v : g.storage()) CHECK(v == 0.0);

    // generic instance: gradient matches finite differences of -log sigma_y
    Rng rng(53);
    for (auto& v : inst.beta.storage()) v = rng.normal(0.0, 0.5);
    const Matrix grad = softmax_grad(inst);
    Vec flat(inst.beta.storage());
    const Vec fd = oracles::fd_gradient(
        [&](const Vec& b) {
            ClassificationInstance probe = inst;
            probe.beta.storage() = b;
            const Vec sig = probe.sigma();
            return -std::log(sig[probe.label]);
        },
        flat, 1e-6);
    CHECK(oracles::max_rel_diff(grad.storage(), fd) <= 1e-6);

    // column sums x_i * (sum sigma - 1) vanish
    for (std::size_t i = 0; i < 2; ++i) {
        double row_sum = 0.0;
        for (std::size_t k = 0; k < 3; ++k) row_sum += grad(i, k);
        CHECK(std::abs(row_sum) <= 1e-12);
    }
}

namespace {

ClassificationInstance random_cls(Rng& rng, std::size_t d, std::size_t k) {
    ClassificationInstance inst;
    inst.x.resize(d);
    for (auto& v : inst.x) v = rng.normal(0.0, 1.0);
    inst.label = rng.below(k);
    inst.beta = Matrix(d, k);
    for (auto& v : inst.beta.storage()) v = rng.normal(0.0, 0.6);
    return inst;
}

// Blockwise Hessian assembly from the per-class-pair formulas, laid out in
// the same feature-major order as kron(xx', P).
Matrix blockwise_hessian(const ClassificationInstance& inst) {
    const Vec s = inst.sigma();
    const std::size_t d = inst.dim(), k = inst.classes();
    Matrix h(d * k, d * k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            double block;
            if (i == j)
                block = s[i] * (1.0 - s[i]);
            else
                block = -s[i] * s[j];
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t c = 0; c < d; ++c)
                    h(r * k + i, c * k + j) = inst.x[r] * inst.x[c] * block;
        }
    return h;
}

}  // namespace

TEST_CASE("ce_hessian_single equals kron and the blockwise assembly") {
    Rng rng(59);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t d = 1 + rng.below(4);
        const std::size_t k = 2 + rng.below(4);
        const ClassificationInstance inst = random_cls(rng, d, k);
        const Matrix h = ce_hessian_single(inst);
        const Matrix blocks = blockwise_hessian(inst);
        CHECK(max_abs(h - blocks) <= 1e-12);
        const Matrix k_form = kron(outer(inst.x, inst.x), inst.p_single());
        CHECK(max_abs(h - k_form) == 0.0);
    }
}

TEST_CASE("ce_hessian_single matches a second-difference Hessian") {
    Rng rng(61);
    for (int trial = 0; trial < 5; ++trial) {
        const ClassificationInstance inst = random_cls(rng, 2, 3);
        const Matrix analytic = ce_hessian_single(inst);
        const Vec flat(inst.beta.storage());
        const Matrix fd = oracles::fd_hessian(
            [&](const Vec& b) {
                ClassificationInstance probe = inst;
                probe.beta.storage() = b;
                const Vec sig = probe.sigma();
                return -std::log(sig[probe.label]);
            },
            flat, 1e-4);
        CHECK(max_abs(analytic - fd) <= 1e-5);
    }

    ClassificationInstance zero;
    zero.x = {0.0, 0.0};
    zero.label = 0;
    zero.beta = Matrix(2, 2, 0.3);
    CHECK(max_abs(ce_hessian_single(zero)) == 0.0);
}

TEST_CASE("if_ce hand algebra at d=1, K=2") {
    ClassificationInstance inst;
    inst.x = {1.5};
    inst.label = 0;
    inst.beta = Matrix(1, 2);
    inst.beta(0, 0) = 0.2;
    inst.beta(0, 1) = -0.4;

    Matrix sigma_x(1, 1);
    sigma_x(0, 0) = 2.0;
    Matrix p(2, 2);
    p(0, 0) = 0.3; p(0, 1) = 0.1;
    p(1, 0) = 0.1; p(1, 1) = 0.4;

    const Vec v = if_ce(inst, separable_hessian(sigma_x, p));

    // hand inversion of H = 2 P against rhs = -x (sigma - e)
    const Vec s = inst.sigma();
    const Vec rhs{-1.5 * (s[0] - 1.0), -1.5 * s[1]};
    const double det = (2.0 * 0.3) * (2.0 * 0.4) - (2.0 * 0.1) * (2.0 * 0.1);
    const Vec expected{(2.0 * 0.4 * rhs[0] - 2.0 * 0.1 * rhs[1]) / det,
                       (-2.0 * 0.1 * rhs[0] + 2.0 * 0.3 * rhs[1]) / det};
    CHECK(v[0] == doctest::Approx(expected[0]).epsilon(1e-12));
    CHECK(v[1] == doctest::Approx(expected[1]).epsilon(1e-12));
}

TEST_CASE("if_ce is zero when sigma hits the one-hot label") {
    ClassificationInstance inst;
    inst.x = {0.5, -1.0};
    inst.label = 1;
    inst.beta = Matrix(2, 3);
    inst.beta(0, 1) = 1600.0;
    Matrix p = Matrix::identity(3);
    const Vec v = if_ce(inst, separable_hessian(Matrix::identity(2), p));
    CHECK(norm2(v) == 0.0);
}

TEST_CASE("if_ce flags a singular expected Hessian") {
    Rng rng(67);
    const ClassificationInstance inst = random_cls(rng, 2, 3);
    // the literal single-sample covariance is singular: P * ones = 0
    const Matrix coupled = empirical_ce_hessian({inst.x}, inst.beta);
    CHECK_THROWS_AS(if_ce(inst, coupled), SingularMatrix);
    // the opt-in ridge makes the consistent system solvable
    const Vec v = if_ce(inst, coupled, 1e-10);
    CHECK(all_finite(v));
}

TEST_CASE("if_ce matches the gradient-descent reweighting oracle") {
    Rng rng(71);
    const std::size_t d = 2, k = 3, n = 50;
    std::vector<Vec> xs(n, Vec(d));
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : xs[i]) v = rng.normal(0.0, 1.0);
        labels[i] = rng.below(k);  // random labels keep the problem non-separable
    }

    const Matrix beta_hat = gd_refit(xs, labels, xs[0], labels[0], 0.0, Matrix(d, k));

    ClassificationInstance z;
    z.x = {0.8, -0.6};
    z.label = 2;
    z.beta = beta_hat;

    const Matrix hess = empirical_ce_hessian(xs, beta_hat);
    const Vec analytic = if_ce(z, hess, 1e-10);

    const double eps = 1e-5;
    const Matrix beta_eps = gd_refit(xs, labels, z.x, z.label, eps, beta_hat);
    Vec fd(d * k);
    for (std::size_t i = 0; i < d * k; ++i)
        fd[i] = (beta_eps.storage()[i] - beta_hat.storage()[i]) / eps;

    CHECK(oracles::cosine(analytic, fd) >= 0.999);

    // the refit objective must actually have gone down for the upweighted z
    CHECK(softmax_ce_value(xs, labels, beta_eps, z.x, z.label, eps) <=
          softmax_ce_value(xs, labels, beta_hat, z.x, z.label, eps));
}

TEST_CASE("ratio-bound report and preconditions") {
    RegressionInstance reg;
    reg.sigma_x = Matrix::identity(2);
    reg.x = {1.0, 0.5};
    reg.theta = {0.2, 0.1};
    reg.y = dot(reg.x, reg.theta);  // zero residual

    ClassificationInstance cls;
    cls.x = reg.x;
    cls.label = 0;
    cls.beta = Matrix(2, 2, 0.3);

    Matrix p = Matrix::identity(2);
    try {
        influence_ratio_bounds(reg, cls, p);
        FAIL("expected PreconditionError");
    } catch (const PreconditionError& e) {
        CHECK(std::string(e.what()).find("residual") != std::string::npos);
    }

    reg.y += 1.0;
    const InfluenceReport rep = influence_ratio_bounds(reg, cls, p);
    CHECK(rep.lower_bound <= rep.ratio);
    CHECK(rep.ratio <= rep.upper_bound);

    // the literal singular softmax covariance violates the P precondition
    try {
        influence_ratio_bounds(reg, cls, cls.p_single());
        FAIL("expected PreconditionError");
    } catch (const PreconditionError& e) {
        CHECK(std::string(e.what()).find("P not positive definite") != std::string::npos);
    }

    ClassificationInstance mismatched = cls;
    mismatched.x = {9.0, 9.0};
    CHECK_THROWS_AS(influence_ratio_bounds(reg, mismatched, p), PreconditionError);
}

TEST_CASE("ratio bounds diverge as the residual vanishes") {
    RegressionInstance reg;
    reg.sigma_x = Matrix::identity(2);
    reg.x = {1.0, -0.3};
    reg.theta = {0.4, 0.7};

    ClassificationInstance cls;
    cls.x = reg.x;
    cls.label = 1;
    cls.beta = Matrix(2, 3, 0.25);
    cls.beta(0, 0) = -0.2;
    Matrix p(3, 3);
    p(0, 0) = 0.3; p(1, 1) = 0.25; p(2, 2) = 0.2;
    p(0, 1) = p(1, 0) = 0.05;

    double prev_upper = 0.0, prev_lower = 0.0;
    for (double r : {1.0, 0.1, 0.01, 0.001}) {
        reg.y = dot(reg.x, reg.theta) + r;
        const InfluenceReport rep = influence_ratio_bounds(reg, cls, p);
        CHECK(std::isfinite(rep.ratio));
        if (prev_upper > 0.0) {
            CHECK(rep.upper_bound == doctest::Approx(prev_upper * 10.0).epsilon(1e-9));
            CHECK(rep.lower_bound == doctest::Approx(prev_lower * 10.0).epsilon(1e-9));
        }
        prev_upper = rep.upper_bound;
        prev_lower = rep.lower_bound;
    }
}

TEST_CASE("randomized ratio-bound sweep has no violations") {
    const SweepResult sweep = run_ratio_bound_sweep(1000, 4242);
    CHECK(sweep.rows.size() == 1000);
    CHECK(sweep.violations == 0);
    std::size_t checked = 0;
    for (const auto& row : sweep.rows)
        if (!row.skipped) {
            CHECK(row.ok);
            ++checked;
        }
    CHECK(checked + sweep.skipped == 1000);
    CHECK(checked >= 990);  // near-zero residual draws are rare

    // per-instance sub-streams: serial and parallel sweeps agree exactly
    const SweepResult serial = run_ratio_bound_sweep(64, 4242, Exec::serial);
    const SweepResult parallel = run_ratio_bound_sweep(64, 4242, Exec::parallel);
    for (std::size_t i = 0; i < 64; ++i) {
        CHECK(serial.rows[i].report.ratio == parallel.rows[i].report.ratio);
        CHECK(serial.rows[i].report.upper_bound == parallel.rows[i].report.upper_bound);
    }
}

TEST_CASE("probability residual norm obeys the sqrt-two bound") {
    CHECK(prob_residual_norm({0.0, 1.0}, 0) == doctest::Approx(std::sqrt(2.0)));

    Rng rng(83);
    const double sqrt2 = std::sqrt(2.0);
    double worst = 0.0;
    for (int trial = 0; trial < 1000000; ++trial) {
        const std::size_t k = 2 + rng.below(5);
        Vec sigma(k);
        double sum = 0.0;
        for (auto& v : sigma) {
            v = -std::log(1.0 - rng.uniform01() + 1e-300);
            sum += v;
        }
        for (auto& v : sigma) v /= sum;
        const std::size_t label = rng.below(k);
        const double norm = prob_residual_norm(sigma, label);
        CHECK(norm <= sqrt2 + 1e-12);
        worst = std::max(worst, norm);

        if (trial % 100000 == 0) {
            // the appendix decomposition (1 - s_y)^2 + sum_{k != y} s_k^2
            double expected = (1.0 - sigma[label]) * (1.0 - sigma[label]);
            for (std::size_t i = 0; i < k; ++i)
                if (i != label) expected += sigma[i] * sigma[i];
            CHECK(norm * norm == doctest::Approx(expected).epsilon(1e-12));
        }
    }
    CHECK(worst > 1.0);  // the bound is approached from below by unbalanced draws
}

TEST_CASE("stability region classification") {
    const auto cells = stability_region({1.0, 10.0}, {1.0}, {10.0, 1.0});
    REQUIRE(cells.size() == 4);
    // kappa=1, lmin*r = 10: condition 1 <= 10/sqrt(2) holds
    CHECK(cells[0].condition_holds);
    // kappa=10, lmin*r = 1: fails
    CHECK_FALSE(cells[3].condition_holds);

    const double sqrt2 = std::sqrt(2.0);
    const auto boundary = stability_region({1.0 / sqrt2}, {1.0}, {1.0});
    CHECK(boundary[0].condition_holds);  // boundary counts as holding
    CHECK(boundary[0].upper_bound == doctest::Approx(1.0));

    CHECK_THROWS_AS(stability_region({-1.0}, {1.0}, {1.0}), InvalidParameter);
}

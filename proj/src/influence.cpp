#include "ocets/influence.hpp"

#include <cmath>
#include <string>

#include "ocets/rng.hpp"

namespace ocets {

namespace {

constexpr std::size_t kMaxHessianDim = 2048;

Vec kron_vec(const Vec& a, const Vec& b) {
    Vec out(a.size() * b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i * b.size() + j] = a[i] * b[j];
    return out;
}

}  // namespace

double RegressionInstance::residual() const {
    return y - dot(x, theta);
}

Vec ClassificationInstance::sigma() const {
    Vec logits(classes(), 0.0);
    for (std::size_t k = 0; k < classes(); ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < dim(); ++i) acc += x[i] * beta(i, k);
        logits[k] = acc;
    }
    return softmax(logits);
}

Vec ClassificationInstance::one_hot() const {
    if (label >= classes()) throw InvalidParameter("one_hot: label out of range");
    Vec e(classes(), 0.0);
    e[label] = 1.0;
    return e;
}

Matrix ClassificationInstance::p_single() const {
    const Vec s = sigma();
    Matrix p(s.size(), s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
            p(i, j) = (i == j ? s[i] : 0.0) - s[i] * s[j];
    return p;
}

double prob_residual_norm(const Vec& sigma, std::size_t label) {
    if (label >= sigma.size()) throw InvalidParameter("prob_residual_norm: label out of range");
    double acc = 0.0;
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        const double d = sigma[i] - (i == label ? 1.0 : 0.0);
        acc += d * d;
    }
    return std::sqrt(acc);
}

Vec if_mse(const RegressionInstance& inst) {
    if (inst.x.size() != inst.theta.size() || inst.sigma_x.rows() != inst.x.size())
        throw InvalidDimension("if_mse: dimension mismatch");
    const double r = inst.residual();
    Vec rhs(inst.x.size());
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = inst.x[i] * r;
    return solve(inst.sigma_x, rhs);
}

Matrix softmax_grad(const ClassificationInstance& inst) {
    const Vec s = inst.sigma();
    const Vec e = inst.one_hot();
    Matrix g(inst.dim(), inst.classes());
    for (std::size_t i = 0; i < inst.dim(); ++i)
        for (std::size_t k = 0; k < inst.classes(); ++k) g(i, k) = inst.x[i] * (s[k] - e[k]);
    return g;
}

Matrix ce_hessian_single(const ClassificationInstance& inst) {
    if (inst.dim() * inst.classes() > kMaxHessianDim)
        throw InvalidParameter("ce_hessian_single: d*K exceeds cap");
    return kron(outer(inst.x, inst.x), inst.p_single());
}

Matrix separable_hessian(const Matrix& sigma_x, const Matrix& p_expected) {
    if (sigma_x.rows() * p_expected.rows() > kMaxHessianDim)
        throw InvalidParameter("separable_hessian: d*K exceeds cap");
    return kron(sigma_x, p_expected);
}

Matrix empirical_ce_hessian(const std::vector<Vec>& xs, const Matrix& beta) {
    if (xs.empty()) throw InsufficientData("empirical_ce_hessian: no samples");
    const std::size_t d = beta.rows();
    const std::size_t k = beta.cols();
    if (d * k > kMaxHessianDim)
        throw InvalidParameter("empirical_ce_hessian: d*K exceeds cap");
    Matrix acc(d * k, d * k);
    ClassificationInstance inst;
    inst.beta = beta;
    for (const auto& x : xs) {
        if (x.size() != d) throw InvalidDimension("empirical_ce_hessian: feature dim mismatch");
        inst.x = x;
        const Matrix h = kron(outer(x, x), inst.p_single());
        for (std::size_t i = 0; i < acc.size(); ++i) acc.storage()[i] += h.storage()[i];
    }
    const double inv_n = 1.0 / static_cast<double>(xs.size());
    for (auto& v : acc.storage()) v *= inv_n;
    return acc;
}

Vec if_ce(const ClassificationInstance& inst, const Matrix& expected_hessian, double ridge) {
    const std::size_t dk = inst.dim() * inst.classes();
    if (expected_hessian.rows() != dk || expected_hessian.cols() != dk)
        throw InvalidDimension("if_ce: Hessian must be (dK) x (dK)");
    const Vec s = inst.sigma();
    Vec dev(inst.classes());
    const Vec e = inst.one_hot();
    for (std::size_t k = 0; k < inst.classes(); ++k) dev[k] = s[k] - e[k];
    Vec rhs = kron_vec(inst.x, dev);
    for (auto& v : rhs) v = -v;

    if (ridge > 0.0) {
        Matrix shifted = expected_hessian;
        for (std::size_t i = 0; i < dk; ++i) shifted(i, i) += ridge;
        return solve(shifted, rhs);
    }
    try {
        return solve(expected_hessian, rhs);
    } catch (const SingularMatrix& e_) {
        throw SingularMatrix(
            std::string("if_ce: expected Hessian near-singular (overconfident sigma: "
                        "lambda_min(P) ~ 0); ") +
                e_.what(),
            e_.smallest_pivot);
    }
}

InfluenceReport influence_ratio_report(const RegressionInstance& reg,
                                const ClassificationInstance& cls, const Matrix& p_expected) {
    if (reg.x.size() != cls.x.size())
        throw PreconditionError("influence_ratio_bounds: regression and classification x differ in size");
    for (std::size_t i = 0; i < reg.x.size(); ++i)
        if (std::abs(reg.x[i] - cls.x[i]) > 1e-12)
            throw PreconditionError("influence_ratio_bounds: shared feature vector required");
    if (p_expected.rows() != cls.classes() || p_expected.cols() != cls.classes())
        throw InvalidDimension("influence_ratio_bounds: P shape mismatch");

    const EigenResult eig_sigma = sym_eigen(reg.sigma_x);
    const double lmin_sigma = eig_sigma.values.back();
    const double lmax_sigma = eig_sigma.values.front();
    if (!(lmin_sigma > 0.0))
        throw PreconditionError("influence_ratio_bounds: Sigma_X not positive definite");

    const EigenResult eig_p = sym_eigen(p_expected);
    const double lmin_p = eig_p.values.back();
    const double lmax_p = eig_p.values.front();
    if (!(lmin_p > 0.0))
        throw PreconditionError("influence_ratio_bounds: P not positive definite");

    const double r = reg.residual();
    if (r == 0.0) throw PreconditionError("influence_ratio_bounds: zero MSE residual");

    const Vec s = cls.sigma();
    const double dev = prob_residual_norm(s, cls.label);
    if (dev == 0.0) throw PreconditionError("influence_ratio_bounds: sigma equals e_y");

    InfluenceReport rep;
    rep.if_mse_vec = if_mse(reg);
    rep.if_ce_vec = if_ce(cls, separable_hessian(reg.sigma_x, p_expected));
    rep.kappa2 = lmax_sigma / lmin_sigma;
    rep.lambda_min_p = lmin_p;
    rep.lambda_max_p = lmax_p;
    rep.residual = r;
    rep.sigma_deviation = dev;
    rep.ratio = norm2(rep.if_ce_vec) / norm2(rep.if_mse_vec);
    rep.lower_bound = dev / (rep.kappa2 * lmax_p * std::abs(r));
    rep.upper_bound = std::sqrt(2.0) * rep.kappa2 / (lmin_p * std::abs(r));
    return rep;
}

bool sandwich_holds(const InfluenceReport& rep) {
    // 1 ulp-scale slack on the comparison; the bounds themselves are loose
    const double slack = 1e-12 * std::max(1.0, rep.ratio);
    return rep.ratio >= rep.lower_bound - slack && rep.ratio <= rep.upper_bound + slack;
}

InfluenceReport influence_ratio_bounds(const RegressionInstance& reg,
                                const ClassificationInstance& cls, const Matrix& p_expected) {
    InfluenceReport rep = influence_ratio_report(reg, cls, p_expected);
    if (!sandwich_holds(rep))
        throw InvariantViolation("influence_ratio_bounds: sandwich violated: " +
                                 std::to_string(rep.lower_bound) + " <= " +
                                 std::to_string(rep.ratio) + " <= " +
                                 std::to_string(rep.upper_bound));
    return rep;
}

std::vector<StabilityCell> stability_region(const Vec& kappa2_grid, const Vec& lambda_min_grid,
                                            const Vec& residual_grid) {
    for (double v : kappa2_grid)
        if (!(v > 0.0)) throw InvalidParameter("stability_region: kappa2 must be positive");
    for (double v : lambda_min_grid)
        if (!(v > 0.0)) throw InvalidParameter("stability_region: lambda_min must be positive");
    for (double v : residual_grid)
        if (!(v > 0.0)) throw InvalidParameter("stability_region: residual must be positive");

    std::vector<StabilityCell> cells;
    cells.reserve(kappa2_grid.size() * lambda_min_grid.size() * residual_grid.size());
    const double sqrt2 = std::sqrt(2.0);
    for (double kappa : kappa2_grid)
        for (double lmin : lambda_min_grid)
            for (double r : residual_grid) {
                StabilityCell cell;
                cell.kappa2 = kappa;
                cell.lambda_min_p = lmin;
                cell.residual = r;
                cell.upper_bound = sqrt2 * kappa / (lmin * r);
                cell.condition_holds = kappa <= lmin * r / sqrt2;
                cells.push_back(cell);
            }
    return cells;
}

namespace {

// One random instance in the separable regime: random SPD covariance, random
// interior softmax, damped rank-one P (the literal diag(s) - s s' is singular
// because P * ones == 0).
SweepRow make_instance(std::size_t id, Rng rng) {
    SweepRow row;
    row.id = id;
    const std::size_t d = 2 + static_cast<std::size_t>(rng.below(4));  // 2..5
    const std::size_t k = 2 + static_cast<std::size_t>(rng.below(4));  // 2..5
    row.d = d;
    row.k = k;

    Matrix a(d, d);
    for (auto& v : a.storage()) v = rng.normal(0.0, 1.0);
    Matrix sigma_x = transpose(a) * a;
    for (std::size_t i = 0; i < d; ++i) sigma_x(i, i) += 0.1;

    RegressionInstance reg;
    reg.sigma_x = sigma_x;
    reg.x.resize(d);
    for (auto& v : reg.x) v = rng.normal(0.0, 1.0);
    reg.theta.resize(d);
    for (auto& v : reg.theta) v = rng.normal(0.0, 1.0);
    reg.y = dot(reg.x, reg.theta) + rng.normal(0.0, 1.0);
    if (std::abs(reg.residual()) < 1e-6) {
        row.skipped = true;  // precondition gate: residual too close to zero
        return row;
    }

    ClassificationInstance cls;
    cls.x = reg.x;
    cls.label = static_cast<std::size_t>(rng.below(k));
    cls.beta = Matrix(d, k);
    for (auto& v : cls.beta.storage()) v = rng.normal(0.0, 0.7);

    Vec p_logits(k);
    for (auto& v : p_logits) v = rng.normal(0.0, 1.0);
    const Vec sp = softmax(p_logits);
    const double damp = rng.uniform(0.2, 0.9);
    Matrix p_expected(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            p_expected(i, j) = (i == j ? sp[i] : 0.0) - damp * sp[i] * sp[j];

    row.report = influence_ratio_report(reg, cls, p_expected);
    row.ok = sandwich_holds(row.report);
    return row;
}

}  // namespace

SweepResult run_ratio_bound_sweep(std::size_t n_instances, std::uint64_t seed, Exec mode) {
    SweepResult result;
    result.rows.resize(n_instances);
    Rng base(seed);
    ErrorCapture errors;
    parallel_index(n_instances, mode, [&](std::size_t i) {
        errors.run([&] {
            result.rows[i] = make_instance(i, base.split(rng_stream::instance_base + i));
        });
    });
    errors.rethrow();
    for (const auto& row : result.rows) {
        if (row.skipped) ++result.skipped;
        else if (!row.ok) ++result.violations;
    }
    return result;
}

}  // namespace ocets

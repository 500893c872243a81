#ifndef OCETS_INFLUENCE_HPP
#define OCETS_INFLUENCE_HPP

#include <cstdint>
#include <vector>

#include "ocets/matrix.hpp"
#include "ocets/numerics.hpp"
#include "ocets/parallel.hpp"

namespace ocets {

/// Linear regression point y = x'theta + eps with its feature covariance.
struct RegressionInstance {
    Vec x;           // d
    double y = 0.0;
    Vec theta;       // d
    Matrix sigma_x;  // d x d, symmetric positive definite

    double residual() const;
};

/// Softmax classification point with parameters beta (d x K columns per
/// class). Labels are 0-based.
struct ClassificationInstance {
    Vec x;            // d
    std::size_t label = 0;
    Matrix beta;      // d x K

    std::size_t dim() const { return x.size(); }
    std::size_t classes() const { return beta.cols(); }
    Vec sigma() const;          // softmax(beta' x)
    Vec one_hot() const;        // e_y
    Matrix p_single() const;    // diag(sigma) - sigma sigma', singular by construction
};

/// ||sigma - e_y||_2; bounded by sqrt(2) for any softmax output.
double prob_residual_norm(const Vec& sigma, std::size_t label);

/// Solves Sigma_X v = x (y - x'theta) without forming the inverse.
Vec if_mse(const RegressionInstance& inst);

/// x (sigma - e_y)', the d x K loss gradient.
Matrix softmax_grad(const ClassificationInstance& inst);

/// kron(xx', P): the single-sample Hessian in feature-major vec layout
/// (parameter order beta[feature][class]).
Matrix ce_hessian_single(const ClassificationInstance& inst);

/// kron(Sigma_X, P) for a supplied positive definite expected softmax matrix.
Matrix separable_hessian(const Matrix& sigma_x, const Matrix& p_expected);

/// (1/n) sum kron(x_i x_i', P(x_i)): the coupled empirical Hessian. Always
/// singular along u (x) ones, so callers must opt into a ridge when solving.
Matrix empirical_ce_hessian(const std::vector<Vec>& xs, const Matrix& beta);

/// Solves H v = -kron(x, sigma - e_y). ridge, when positive, shifts H by
/// ridge*I; the default fails loudly on singularity because a near-singular
/// P is itself the finding.
Vec if_ce(const ClassificationInstance& inst, const Matrix& expected_hessian,
          double ridge = 0.0);

struct InfluenceReport {
    Vec if_mse_vec;
    Vec if_ce_vec;
    double ratio = 0.0;
    double lower_bound = 0.0;
    double upper_bound = 0.0;
    double kappa2 = 0.0;
    double lambda_min_p = 0.0;
    double lambda_max_p = 0.0;
    double residual = 0.0;
    double sigma_deviation = 0.0;  // ||sigma - e_y||
};

/// Computes the ratio and both bounds in the separable regime (shared x,
/// fixed positive definite P). Throws PreconditionError naming any violated
/// precondition.
InfluenceReport influence_ratio_report(const RegressionInstance& reg,
                                const ClassificationInstance& cls, const Matrix& p_expected);

/// influence_ratio_report plus the sandwich assertion; throws InvariantViolation if
/// lower <= ratio <= upper fails.
InfluenceReport influence_ratio_bounds(const RegressionInstance& reg,
                                const ClassificationInstance& cls, const Matrix& p_expected);

/// True when report.lower_bound <= ratio <= upper_bound up to rounding slack.
bool sandwich_holds(const InfluenceReport& report);

struct StabilityCell {
    double kappa2 = 0.0;
    double lambda_min_p = 0.0;
    double residual = 0.0;
    double upper_bound = 0.0;
    bool condition_holds = false;  // kappa2 <= lambda_min(P)|r|/sqrt(2)
};

std::vector<StabilityCell> stability_region(const Vec& kappa2_grid, const Vec& lambda_min_grid,
                                            const Vec& residual_grid);

struct SweepRow {
    std::size_t id = 0;
    std::size_t d = 0;
    std::size_t k = 0;
    InfluenceReport report;
    bool ok = false;
    bool skipped = false;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::size_t violations = 0;
    std::size_t skipped = 0;
};

/// Randomized ratio-bound verification: d <= 5, K <= 5, Sigma_X = A'A + 0.1 I,
/// P built from an interior softmax draw with its rank-one term damped so it
/// stays positive definite. Instances own seeded sub-streams, so results are
/// identical across serial/parallel modes.
SweepResult run_ratio_bound_sweep(std::size_t n_instances, std::uint64_t seed,
                               Exec mode = Exec::parallel);

}  // namespace ocets

#endif

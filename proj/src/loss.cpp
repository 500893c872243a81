#include "ocets/loss.hpp"

#include <cmath>
#include <string>

namespace ocets {

namespace {

constexpr double kLn10 = 2.30258509299404568402;

double to_base(double nats, LogBase base) {
    return base == LogBase::natural ? nats : nats / kLn10;
}

double clamped_log(double x) {
    return std::log(x < kProbFloor ? kProbFloor : x);
}

void require_pair(const ProbVector& p, const ProbVector& q, const char* op) {
    if (p.size() != q.size() || p.empty())
        throw InvalidDimension(std::string(op) + ": length mismatch");
}

}  // namespace

LossKind parse_loss_kind(const std::string& name) {
    if (name == "oce") return LossKind::oce;
    if (name == "ce") return LossKind::ce;
    throw ConfigError("unknown loss kind '" + name + "'");
}

std::string loss_kind_name(LossKind k) {
    return k == LossKind::oce ? "oce" : "ce";
}

double ce(const ProbVector& p, const ProbVector& q, LogBase base) {
    require_pair(p, q, "ce");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) acc -= p[i] * clamped_log(q[i]);
    return to_base(acc, base);
}

Vec cumsum_head(const ProbVector& q) {
    if (q.size() < 2) throw InvalidDimension("cumsum_head: need K >= 2");
    Vec out(q.size() - 1);
    double run = 0.0;
    for (std::size_t i = 0; i + 1 < q.size(); ++i) {
        run += q[i];
        out[i] = std::min(std::max(run, kProbFloor), 1.0 - kProbFloor);
    }
    return out;
}

double oce(const ProbVector& p, const ProbVector& q, LogBase base) {
    require_pair(p, q, "oce");
    const Vec cp = cumsum_head(p);
    const Vec cq = cumsum_head(q);
    double acc = 0.0;
    for (std::size_t k = 0; k < cp.size(); ++k)
        acc -= cp[k] * std::log(cq[k]) + (1.0 - cp[k]) * std::log(1.0 - cq[k]);
    return to_base(acc, base);
}

void oce_grad_logits_into(const double* p, const double* logits, std::size_t k, double* grad,
                          double* sigma) {
    softmax_into(logits, k, sigma);

    // True cumulative (clamped like the objective's).
    // coef_t = d(BCE threshold t)/d(pred cumulative t); suffix-summed below.
    double coef_suffix = 0.0;
    double coef_dot_cum = 0.0;
    Vec coef(k - 1);
    {
        double run_p = 0.0;
        double run_q = 0.0;
        for (std::size_t t = 0; t + 1 < k; ++t) {
            run_p += p[t];
            run_q += sigma[t];
            const double cp = std::min(std::max(run_p, kProbFloor), 1.0 - kProbFloor);
            if (run_q <= kProbFloor || run_q >= 1.0 - kProbFloor) {
                coef[t] = 0.0;  // clamp active: flat objective
                continue;
            }
            coef[t] = (run_q - cp) / (run_q * (1.0 - run_q));
            coef_dot_cum += coef[t] * run_q;
        }
    }
    // grad_j = sigma_j * (sum_{t >= j} coef_t - sum_t coef_t * cum_t)
    for (std::size_t j = k; j-- > 0;) {
        if (j + 1 < k) coef_suffix += coef[j];
        grad[j] = sigma[j] * (coef_suffix - coef_dot_cum);
    }
}

Vec oce_grad_logits(const ProbVector& p, const Vec& logits) {
    if (p.size() != logits.size() || p.size() < 2)
        throw InvalidDimension("oce_grad_logits: need matching K >= 2");
    Vec grad(p.size()), sigma(p.size());
    oce_grad_logits_into(p.data(), logits.data(), p.size(), grad.data(), sigma.data());
    return grad;
}

void ce_grad_logits_into(const double* p, const double* logits, std::size_t k, double* grad,
                         double* sigma) {
    softmax_into(logits, k, sigma);
    double active_mass = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        if (sigma[i] >= kProbFloor) active_mass += p[i];
    for (std::size_t j = 0; j < k; ++j)
        grad[j] = sigma[j] * active_mass - (sigma[j] >= kProbFloor ? p[j] : 0.0);
}

Vec ce_grad_logits(const ProbVector& p, const Vec& logits) {
    if (p.size() != logits.size() || p.empty())
        throw InvalidDimension("ce_grad_logits: length mismatch");
    Vec grad(p.size()), sigma(p.size());
    ce_grad_logits_into(p.data(), logits.data(), p.size(), grad.data(), sigma.data());
    return grad;
}

namespace {

void require_congruent(const std::vector<ProbGrid>& a, const std::vector<ProbGrid>& b) {
    if (a.size() != b.size() || a.empty())
        throw InvalidDimension("batch_objective: sample count mismatch");
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() != b[i].size())
            throw InvalidDimension("batch_objective: horizon mismatch");
        for (std::size_t j = 0; j < a[i].size(); ++j)
            if (a[i][j].size() != b[i][j].size())
                throw InvalidDimension("batch_objective: channel mismatch");
    }
}

double grid_cells(const std::vector<ProbGrid>& grids) {
    double cells = 0.0;
    for (const auto& g : grids)
        for (const auto& row : g) cells += static_cast<double>(row.size());
    return cells;
}

}  // namespace

double batch_objective(const std::vector<ProbGrid>& targets,
                       const std::vector<ProbGrid>& predictions, LossKind kind, Exec mode) {
    require_congruent(targets, predictions);
    const double cells = grid_cells(targets);
    if (cells == 0.0) throw InvalidDimension("batch_objective: empty grids");

    double partial[kReduceSlots] = {};
    ErrorCapture errors;
    for_each_slot(targets.size(), mode, [&](std::size_t slot, std::size_t lo, std::size_t hi) {
        errors.run([&] {
            double acc = 0.0;
            for (std::size_t i = lo; i < hi; ++i)
                for (std::size_t j = 0; j < targets[i].size(); ++j)
                    for (std::size_t c = 0; c < targets[i][j].size(); ++c) {
                        const auto& pv = targets[i][j][c];
                        const auto& qv = predictions[i][j][c];
                        acc += kind == LossKind::oce ? oce(pv, qv) : ce(pv, qv);
                    }
            partial[slot] = acc;
        });
    });
    errors.rethrow();

    double total = 0.0;
    for (double v : partial) total += v;
    return total / cells;
}

double batch_objective_reference(const std::vector<ProbGrid>& targets,
                                 const std::vector<ProbGrid>& predictions, LossKind kind) {
    require_congruent(targets, predictions);
    double total = 0.0;
    double cells = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i)
        for (std::size_t j = 0; j < targets[i].size(); ++j)
            for (std::size_t c = 0; c < targets[i][j].size(); ++c) {
                total += kind == LossKind::oce ? oce(targets[i][j][c], predictions[i][j][c])
                                               : ce(targets[i][j][c], predictions[i][j][c]);
                cells += 1.0;
            }
    if (cells == 0.0) throw InvalidDimension("batch_objective_reference: empty grids");
    return total / cells;
}

}  // namespace ocets

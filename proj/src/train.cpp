#include "ocets/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

namespace ocets {

NormScope parse_norm_scope(const std::string& name) {
    if (name == "window") return NormScope::window;
    if (name == "global") return NormScope::global;
    throw ConfigError("unknown norm scope '" + name + "'");
}

std::string norm_scope_name(NormScope s) {
    return s == NormScope::window ? "window" : "global";
}

TrainSample prepare_sample(const TimeWindow& window, const PrepConfig& prep) {
    TrainSample s;
    const NormStats x_stats = prep.scope == NormScope::window
                                  ? fit_norm(window.lookback, prep.mode, prep.epsilon)
                                  : prep.global_stats;
    const NormStats y_stats = prep.scope == NormScope::window
                                  ? fit_norm(window.horizon, prep.mode, prep.epsilon)
                                  : prep.global_stats;
    s.x_norm = normalize(window.lookback, x_stats);
    Matrix y = normalize(window.horizon, y_stats);
    if (prep.scope == NormScope::global) {
        const auto [a, b] = support_range(prep.mode);
        for (auto& v : y.storage()) v = std::min(std::max(v, a), b);
    }
    if (prep.head == HeadMode::shared) {
        s.y_norm = std::move(y);
    } else {
        // joint head predicts one distribution per step
        s.y_norm = Matrix(y.rows(), 1);
        for (std::size_t j = 0; j < y.rows(); ++j) {
            double acc = 0.0;
            for (std::size_t c = 0; c < y.cols(); ++c) acc += y(j, c);
            s.y_norm(j, 0) = acc / static_cast<double>(y.cols());
        }
    }
    return s;
}

std::vector<TrainSample> prepare_samples(const std::vector<TimeWindow>& windows,
                                         const PrepConfig& prep, Exec mode) {
    std::vector<TrainSample> out(windows.size());
    ErrorCapture errors;
    parallel_index(windows.size(), mode, [&](std::size_t i) {
        errors.run([&] { out[i] = prepare_sample(windows[i], prep); });
    });
    errors.rethrow();
    return out;
}

namespace {

std::size_t total_params(const ModelParams& p) {
    return p.w_t.size() + p.w_s.size() + p.w_o.size() + p.b_o.size();
}

// Shared analytic chain for one sample. target(j, c) supplies the encoded
// distribution for that cell; the gradient lands in param_vector layout
// [w_t | w_s | w_o | b_o]. Returns the sample's mean loss over cells.
template <typename TargetFn>
double sample_gradient(const ModelParams& params, const Matrix& x_norm, TargetFn&& target,
                       LossKind kind, double* grad) {
    const std::size_t w = params.w, h = params.h, m = params.m, k = params.k;
    const std::size_t pc = params.prob_channels();
    if (x_norm.rows() != w || x_norm.cols() != m)
        throw InvalidDimension("backward: input shape mismatch");

    Matrix trend, seasonal;
    decompose(x_norm, params.ma_window, trend, seasonal);

    Matrix point(h, m);
    for (std::size_t j = 0; j < h; ++j)
        for (std::size_t c = 0; c < m; ++c) {
            double acc = 0.0;
            for (std::size_t u = 0; u < w; ++u)
                acc += params.w_t(j, u) * trend(u, c) + params.w_s(j, u) * seasonal(u, c);
            point(j, c) = acc;
        }

    double* grad_wt = grad;
    double* grad_ws = grad + h * w;
    double* grad_wo = grad_ws + h * w;
    double* grad_bo = grad_wo + params.w_o.size();

    const double cell_scale = 1.0 / static_cast<double>(h * pc);
    Vec logits(k), gz(k), sigma(k);
    Matrix gy(h, m);  // d(loss)/d(point)
    double loss = 0.0;

    for (std::size_t j = 0; j < h; ++j) {
        for (std::size_t c = 0; c < pc; ++c) {
            const ProbVector p = target(j, c);
            if (p.size() != k) throw InvalidDimension("backward: target K mismatch");
            if (params.head == HeadMode::shared) {
                for (std::size_t kk = 0; kk < k; ++kk)
                    logits[kk] = params.w_o(kk, 0) * point(j, c) + params.b_o[kk];
            } else {
                for (std::size_t kk = 0; kk < k; ++kk) {
                    double acc = params.b_o[kk];
                    for (std::size_t cc = 0; cc < m; ++cc)
                        acc += params.w_o(kk, cc) * point(j, cc);
                    logits[kk] = acc;
                }
            }
            if (kind == LossKind::oce) {
                oce_grad_logits_into(p.data(), logits.data(), k, gz.data(), sigma.data());
                loss += oce(p, sigma) * cell_scale;
            } else {
                ce_grad_logits_into(p.data(), logits.data(), k, gz.data(), sigma.data());
                loss += ce(p, sigma) * cell_scale;
            }
            for (std::size_t kk = 0; kk < k; ++kk) gz[kk] *= cell_scale;

            for (std::size_t kk = 0; kk < k; ++kk) grad_bo[kk] += gz[kk];
            if (params.head == HeadMode::shared) {
                double gpoint = 0.0;
                for (std::size_t kk = 0; kk < k; ++kk) {
                    grad_wo[kk] += gz[kk] * point(j, c);
                    gpoint += gz[kk] * params.w_o(kk, 0);
                }
                gy(j, c) += gpoint;
            } else {
                for (std::size_t cc = 0; cc < m; ++cc) {
                    double gpoint = 0.0;
                    for (std::size_t kk = 0; kk < k; ++kk) {
                        grad_wo[kk * m + cc] += gz[kk] * point(j, cc);
                        gpoint += gz[kk] * params.w_o(kk, cc);
                    }
                    gy(j, cc) += gpoint;
                }
            }
        }
    }

    // chain through the projections: point = W_t trend + W_s seasonal
    for (std::size_t j = 0; j < h; ++j)
        for (std::size_t c = 0; c < m; ++c) {
            const double g = gy(j, c);
            if (g == 0.0) continue;
            for (std::size_t u = 0; u < w; ++u) {
                grad_wt[j * w + u] += g * trend(u, c);
                grad_ws[j * w + u] += g * seasonal(u, c);
            }
        }
    return loss;
}

double encoded_sample_gradient(const ModelParams& params, const TrainSample& s,
                               const BinScheme& bins, const TargetDistSpec& dist, LossKind kind,
                               const ProbGrid* cached, double* grad) {
    if (s.y_norm.rows() != params.h || s.y_norm.cols() != params.prob_channels())
        throw InvalidDimension("backward: target shape mismatch");
    if (cached)
        return sample_gradient(
            params, s.x_norm,
            [&](std::size_t j, std::size_t c) -> const ProbVector& { return (*cached)[j][c]; },
            kind, grad);
    return sample_gradient(
        params, s.x_norm,
        [&](std::size_t j, std::size_t c) { return encode(s.y_norm(j, c), bins, dist); }, kind,
        grad);
}

// Core batch kernel over sample indices; cache, when non-null, holds one
// pre-encoded grid per sample in the full set's indexing.
Vec backward_batch_indexed(const ModelParams& params, std::span<const TrainSample> samples,
                           std::span<const std::size_t> idx, const BinScheme& bins,
                           const TargetDistSpec& dist, LossKind kind, Exec mode,
                           const std::vector<ProbGrid>* cache, double* loss_out) {
    if (idx.empty()) throw InsufficientData("backward_batch: empty batch");
    const std::size_t np = total_params(params);

    std::vector<Vec> slot_grad(kReduceSlots);
    double slot_loss[kReduceSlots] = {};
    ErrorCapture errors;
    for_each_slot(idx.size(), mode, [&](std::size_t slot, std::size_t lo, std::size_t hi) {
        errors.run([&] {
            slot_grad[slot].assign(np, 0.0);
            double acc = 0.0;
            for (std::size_t i = lo; i < hi; ++i) {
                const std::size_t which = idx[i];
                acc += encoded_sample_gradient(params, samples[which], bins, dist, kind,
                                               cache ? &(*cache)[which] : nullptr,
                                               slot_grad[slot].data());
            }
            slot_loss[slot] = acc;
        });
    });
    errors.rethrow();

    Vec grad(np, 0.0);
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(idx.size());
    for (std::size_t s = 0; s < kReduceSlots; ++s) {
        if (slot_grad[s].empty()) continue;
        for (std::size_t i = 0; i < np; ++i) grad[i] += slot_grad[s][i];
        loss += slot_loss[s];
    }
    for (auto& g : grad) g *= inv_n;
    if (loss_out) *loss_out = loss * inv_n;
    return grad;
}

}  // namespace

Vec backward(const ModelParams& params, const Matrix& x_norm, const ProbGrid& target,
             LossKind kind, double* loss_out) {
    if (target.size() != params.h)
        throw InvalidDimension("backward: target horizon mismatch");
    for (const auto& row : target)
        if (row.size() != params.prob_channels())
            throw InvalidDimension("backward: target channel mismatch");
    Vec grad(total_params(params), 0.0);
    const double loss = sample_gradient(
        params, x_norm, [&](std::size_t j, std::size_t c) { return target[j][c]; }, kind,
        grad.data());
    if (loss_out) *loss_out = loss;
    return grad;
}

Vec backward_batch(const ModelParams& params, std::span<const TrainSample> samples,
                   const BinScheme& bins, const TargetDistSpec& dist, LossKind kind, Exec mode,
                   double* loss_out) {
    std::vector<std::size_t> idx(samples.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return backward_batch_indexed(params, samples, idx, bins, dist, kind, mode, nullptr,
                                  loss_out);
}

Vec backward_batch_reference(const ModelParams& params, std::span<const TrainSample> samples,
                             const BinScheme& bins, const TargetDistSpec& dist, LossKind kind,
                             double* loss_out) {
    if (samples.empty()) throw InsufficientData("backward_batch_reference: empty batch");
    Vec grad(total_params(params), 0.0);
    double loss = 0.0;
    for (const auto& s : samples)
        loss += encoded_sample_gradient(params, s, bins, dist, kind, nullptr, grad.data());
    const double inv_n = 1.0 / static_cast<double>(samples.size());
    for (auto& g : grad) g *= inv_n;
    if (loss_out) *loss_out = loss * inv_n;
    return grad;
}

double evaluate_objective(const ModelParams& params, std::span<const TrainSample> samples,
                          const BinScheme& bins, const TargetDistSpec& dist, LossKind kind,
                          Exec mode) {
    if (samples.empty()) throw InsufficientData("evaluate_objective: no samples");
    double slot_loss[kReduceSlots] = {};
    ErrorCapture errors;
    for_each_slot(samples.size(), mode, [&](std::size_t slot, std::size_t lo, std::size_t hi) {
        errors.run([&] {
            double acc = 0.0;
            for (std::size_t i = lo; i < hi; ++i) {
                const Forecast fc = forward(params, samples[i].x_norm);
                const std::size_t pc = params.prob_channels();
                double sample_acc = 0.0;
                for (std::size_t j = 0; j < params.h; ++j)
                    for (std::size_t c = 0; c < pc; ++c) {
                        const ProbVector p = encode(samples[i].y_norm(j, c), bins, dist);
                        sample_acc += kind == LossKind::oce ? oce(p, fc.probs[j][c])
                                                            : ce(p, fc.probs[j][c]);
                    }
                acc += sample_acc / static_cast<double>(params.h * pc);
            }
            slot_loss[slot] = acc;
        });
    });
    errors.rethrow();
    double total = 0.0;
    for (double v : slot_loss) total += v;
    return total / static_cast<double>(samples.size());
}

AdamState make_adam_state(std::size_t n_params) {
    AdamState s;
    s.m.assign(n_params, 0.0);
    s.v.assign(n_params, 0.0);
    return s;
}

void adam_step(AdamState& state, Vec& params, const Vec& grad, double lr) {
    if (params.size() != grad.size() || params.size() != state.m.size())
        throw InvalidDimension("adam_step: dimension mismatch");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw InvalidParameter("train: batch_size must be >= 1");
    if (epochs < 1) throw InvalidParameter("train: epochs must be >= 1");
    if (lr < 0.0) throw InvalidParameter("train: lr must be >= 0");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0))
        throw InvalidParameter("train: lr_decay must be in (0, 1]");
}

std::uint64_t params_checksum(const Vec& params) {
    std::uint64_t hash = 0xCBF29CE484222325ULL;
    for (double d : params) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, sizeof(bits));
        for (int b = 0; b < 8; ++b) {
            hash ^= (bits >> (8 * b)) & 0xFF;
            hash *= 0x100000001B3ULL;
        }
    }
    return hash;
}

FitResult fit(const ModelParams& init, const std::vector<TrainSample>& train_samples,
              const std::vector<TrainSample>& val_samples, const BinScheme& bins,
              const TargetDistSpec& dist, LossKind kind, const TrainConfig& cfg,
              const EpochCallback& on_epoch) {
    cfg.validate();
    if (train_samples.empty()) throw InsufficientData("fit: empty training set");

    const bool has_val = !val_samples.empty();
    const double nan = std::numeric_limits<double>::quiet_NaN();

    ModelParams model = init;
    Vec theta = param_vector(model);
    AdamState adam = make_adam_state(theta.size());
    double lr = cfg.lr;

    TrainReport report;
    report.train_loss.push_back(
        evaluate_objective(model, train_samples, bins, dist, kind, cfg.exec));
    report.val_loss.push_back(
        has_val ? evaluate_objective(model, val_samples, bins, dist, kind, cfg.exec) : nan);

    double best_val = report.val_loss[0];
    std::size_t best_epoch = 0;
    Vec best_theta = theta;
    std::size_t bad_epochs = 0;

    Rng shuffle_base = Rng(cfg.seed).split(rng_stream::shuffle);
    std::vector<std::size_t> order(train_samples.size());

    std::vector<ProbGrid> target_cache;
    if (cfg.precompute_targets) {
        target_cache.resize(train_samples.size());
        ErrorCapture errors;
        parallel_index(train_samples.size(), cfg.exec, [&](std::size_t i) {
            errors.run([&] {
                const auto& y = train_samples[i].y_norm;
                ProbGrid grid(y.rows(), std::vector<ProbVector>(y.cols()));
                for (std::size_t j = 0; j < y.rows(); ++j)
                    for (std::size_t c = 0; c < y.cols(); ++c)
                        grid[j][c] = encode(y(j, c), bins, dist);
                target_cache[i] = std::move(grid);
            });
        });
        errors.rethrow();
    }
    const std::vector<ProbGrid>* cache = cfg.precompute_targets ? &target_cache : nullptr;

    if (on_epoch) on_epoch(0, model, report.train_loss[0], report.val_loss[0]);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        if (cfg.shuffle) {
            Rng epoch_rng = shuffle_base.split(epoch);
            epoch_rng.shuffle(order);
        }
        report.lr_history.push_back(lr);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, order.size());
            const std::span<const std::size_t> batch_idx(order.data() + start, end - start);
            double batch_loss = 0.0;
            const Vec grad = backward_batch_indexed(model, train_samples, batch_idx, bins,
                                                    dist, kind, cfg.exec, cache, &batch_loss);
            adam_step(adam, theta, grad, lr);
            model = load_param_vector(model, theta);
            epoch_loss += batch_loss * static_cast<double>(end - start);
        }
        report.train_loss.push_back(epoch_loss / static_cast<double>(order.size()));

        double val = nan;
        if (has_val) {
            val = evaluate_objective(model, val_samples, bins, dist, kind, cfg.exec);
            report.val_loss.push_back(val);
            if (val < best_val) {
                best_val = val;
                best_epoch = epoch;
                best_theta = theta;
                bad_epochs = 0;
            } else {
                ++bad_epochs;
                lr *= cfg.lr_decay;
            }
        } else {
            report.val_loss.push_back(nan);
            best_epoch = epoch;
            best_theta = theta;
        }

        if (on_epoch) on_epoch(epoch, model, report.train_loss.back(), val);

        if (has_val && bad_epochs >= cfg.patience) {
            report.stopped_early = true;
            break;
        }
    }

    report.best_epoch = best_epoch;
    model = load_param_vector(model, best_theta);
    report.params_checksum = params_checksum(best_theta);

    FitResult result;
    result.params = std::move(model);
    result.report = std::move(report);
    return result;
}

}  // namespace ocets

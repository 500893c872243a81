#include "ocets/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ocets {

double reconstruct(const ProbVector& probs, const BinScheme& bins) {
    if (probs.size() != bins.k)
        throw InvalidDimension("reconstruct: expected " + std::to_string(bins.k) +
                               " probabilities, got " + std::to_string(probs.size()));
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) acc += bins.centers[i] * probs[i];
    return acc;
}

std::string metric_norm_name(MetricNorm n) {
    return n == MetricNorm::per_element ? "per_element" : "per_horizon";
}

namespace {

double error_sum(const Matrix& y, const Matrix& yhat, bool squared) {
    if (y.rows() != yhat.rows() || y.cols() != yhat.cols())
        throw InvalidDimension("metric: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y.storage()[i] - yhat.storage()[i];
        acc += squared ? e * e : std::abs(e);
    }
    return acc;
}

double metric_scale(const Matrix& y, MetricNorm norm) {
    const double h = static_cast<double>(y.rows());
    return norm == MetricNorm::per_horizon ? h : h * static_cast<double>(y.cols());
}

}  // namespace

double mse(const Matrix& y, const Matrix& yhat, MetricNorm norm) {
    return error_sum(y, yhat, true) / metric_scale(y, norm);
}

double mae(const Matrix& y, const Matrix& yhat, MetricNorm norm) {
    return error_sum(y, yhat, false) / metric_scale(y, norm);
}

double nemenyi_cd(const SignificanceConfig& cfg) {
    if (cfg.k_algorithms < 2) throw InvalidParameter("nemenyi_cd: need k >= 2");
    if (cfg.n_datasets < 1) throw InvalidParameter("nemenyi_cd: need N >= 1");
    if (!(cfg.q_alpha > 0.0)) throw InvalidParameter("nemenyi_cd: q_alpha must be positive");
    const double k = static_cast<double>(cfg.k_algorithms);
    const double n = static_cast<double>(cfg.n_datasets);
    return cfg.q_alpha * std::sqrt(k * (k + 1.0) / (6.0 * n));
}

Vec rank_table(const Matrix& scores, bool lower_is_better) {
    if (scores.rows() < 1 || scores.cols() < 1)
        throw InvalidDimension("rank_table: empty score matrix");
    for (double v : scores.storage())
        if (std::isnan(v)) throw InvalidInput("rank_table: NaN score");

    const std::size_t k = scores.rows();
    Vec avg(k, 0.0);
    std::vector<std::size_t> order(k);
    for (std::size_t d = 0; d < scores.cols(); ++d) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return lower_is_better ? scores(a, d) < scores(b, d) : scores(a, d) > scores(b, d);
        });
        // ties share the average of the rank positions they span
        std::size_t i = 0;
        while (i < k) {
            std::size_t j = i;
            while (j + 1 < k && scores(order[j + 1], d) == scores(order[i], d)) ++j;
            const double shared = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (std::size_t t = i; t <= j; ++t) avg[order[t]] += shared;
            i = j + 1;
        }
    }
    for (auto& v : avg) v /= static_cast<double>(scores.cols());
    return avg;
}

namespace {

struct WindowOutput {
    Matrix y_hat;  // denormalized H x M
    double se = 0.0;
    double ae = 0.0;
};

WindowOutput forecast_window(const ModelParams& params, const TimeWindow& win,
                             const PrepConfig& prep, const BinScheme& bins) {
    const NormStats x_stats = prep.scope == NormScope::window
                                  ? fit_norm(win.lookback, prep.mode, prep.epsilon)
                                  : prep.global_stats;
    const Matrix x_norm = normalize(win.lookback, x_stats);
    const Forecast fc = forward(params, x_norm);

    Matrix point_norm(params.h, params.m);
    for (std::size_t j = 0; j < params.h; ++j) {
        if (params.head == HeadMode::shared) {
            for (std::size_t c = 0; c < params.m; ++c)
                point_norm(j, c) = reconstruct(fc.probs[j][c], bins);
        } else {
            const double v = reconstruct(fc.probs[j][0], bins);
            for (std::size_t c = 0; c < params.m; ++c) point_norm(j, c) = v;
        }
    }

    WindowOutput out;
    out.y_hat = denormalize(point_norm, x_stats);
    for (std::size_t j = 0; j < params.h; ++j)
        for (std::size_t c = 0; c < params.m; ++c) {
            const double e = win.horizon(j, c) - out.y_hat(j, c);
            out.se += e * e;
            out.ae += std::abs(e);
        }
    return out;
}

template <typename Forecaster>
EvalResult evaluate_common(const std::vector<TimeWindow>& windows, std::size_t h, std::size_t m,
                           Exec mode, bool keep_predictions, Forecaster&& forecaster) {
    if (windows.empty()) throw InsufficientData("evaluate: no windows");
    const std::size_t n = windows.size();
    const double cells = static_cast<double>(h * m);

    EvalResult result;
    result.summary.per_window.resize(n);
    if (keep_predictions) result.predictions.resize(n * h * m);

    double slot_se[kReduceSlots] = {}, slot_ae[kReduceSlots] = {};
    ErrorCapture errors;
    for_each_slot(n, mode, [&](std::size_t slot, std::size_t lo, std::size_t hi) {
        errors.run([&] {
            double se = 0.0, ae = 0.0;
            for (std::size_t i = lo; i < hi; ++i) {
                WindowOutput out = forecaster(windows[i]);
                se += out.se;
                ae += out.ae;
                result.summary.per_window[i] = {i, out.se / cells, out.ae / cells};
                if (keep_predictions) {
                    std::size_t base = i * h * m;
                    for (std::size_t j = 0; j < h; ++j)
                        for (std::size_t c = 0; c < m; ++c)
                            result.predictions[base + j * m + c] = {
                                i, j, c, windows[i].horizon(j, c), out.y_hat(j, c)};
                }
            }
            slot_se[slot] = se;
            slot_ae[slot] = ae;
        });
    });
    errors.rethrow();

    double se = 0.0, ae = 0.0;
    for (std::size_t s = 0; s < kReduceSlots; ++s) {
        se += slot_se[s];
        ae += slot_ae[s];
    }
    const double nw = static_cast<double>(n);
    result.summary.mse_per_element = se / (nw * cells);
    result.summary.mae_per_element = ae / (nw * cells);
    result.summary.mse_per_horizon = se / (nw * static_cast<double>(h));
    result.summary.mae_per_horizon = ae / (nw * static_cast<double>(h));
    return result;
}

}  // namespace

EvalResult evaluate_model(const ModelParams& params, const std::vector<TimeWindow>& windows,
                          const PrepConfig& prep, const BinScheme& bins, Exec mode,
                          bool keep_predictions) {
    return evaluate_common(windows, params.h, params.m, mode, keep_predictions,
                           [&](const TimeWindow& win) {
                               return forecast_window(params, win, prep, bins);
                           });
}

EvalResult evaluate_model_reference(const ModelParams& params,
                                    const std::vector<TimeWindow>& windows,
                                    const PrepConfig& prep, const BinScheme& bins,
                                    bool keep_predictions) {
    if (windows.empty()) throw InsufficientData("evaluate: no windows");
    EvalResult result;
    result.summary.per_window.resize(windows.size());
    const std::size_t h = params.h, m = params.m;
    const double cells = static_cast<double>(h * m);
    if (keep_predictions) result.predictions.resize(windows.size() * h * m);
    double se = 0.0, ae = 0.0;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        WindowOutput out = forecast_window(params, windows[i], prep, bins);
        se += out.se;
        ae += out.ae;
        result.summary.per_window[i] = {i, out.se / cells, out.ae / cells};
        if (keep_predictions) {
            std::size_t base = i * h * m;
            for (std::size_t j = 0; j < h; ++j)
                for (std::size_t c = 0; c < m; ++c)
                    result.predictions[base + j * m + c] = {i, j, c, windows[i].horizon(j, c),
                                                            out.y_hat(j, c)};
        }
    }
    const double nw = static_cast<double>(windows.size());
    result.summary.mse_per_element = se / (nw * cells);
    result.summary.mae_per_element = ae / (nw * cells);
    result.summary.mse_per_horizon = se / (nw * static_cast<double>(h));
    result.summary.mae_per_horizon = ae / (nw * static_cast<double>(h));
    return result;
}

EvalSummary evaluate_persistence(const std::vector<TimeWindow>& windows) {
    if (windows.empty()) throw InsufficientData("evaluate_persistence: no windows");
    const std::size_t h = windows[0].horizon.rows();
    const std::size_t m = windows[0].horizon.cols();
    auto result = evaluate_common(windows, h, m, Exec::parallel, false,
                                  [&](const TimeWindow& win) {
                                      WindowOutput out;
                                      out.y_hat = Matrix(h, m);
                                      const std::size_t last = win.lookback.rows() - 1;
                                      for (std::size_t j = 0; j < h; ++j)
                                          for (std::size_t c = 0; c < m; ++c) {
                                              out.y_hat(j, c) = win.lookback(last, c);
                                              const double e =
                                                  win.horizon(j, c) - out.y_hat(j, c);
                                              out.se += e * e;
                                              out.ae += std::abs(e);
                                          }
                                      return out;
                                  });
    return result.summary;
}

}  // namespace ocets

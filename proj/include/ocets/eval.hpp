#ifndef OCETS_EVAL_HPP
#define OCETS_EVAL_HPP

#include <cstddef>
#include <vector>

#include "ocets/data.hpp"
#include "ocets/model.hpp"
#include "ocets/parallel.hpp"
#include "ocets/targetdist.hpp"
#include "ocets/train.hpp"

namespace ocets {

/// Probability-weighted mean of bin centers; always inside [centers.front(),
/// centers.back()].
double reconstruct(const ProbVector& probs, const BinScheme& bins);

/// per_horizon divides by H only; per_element divides by H*M and is the
/// headline convention for cross-dataset reporting.
enum class MetricNorm { per_horizon, per_element };

std::string metric_norm_name(MetricNorm n);

double mse(const Matrix& y, const Matrix& yhat, MetricNorm norm = MetricNorm::per_element);
double mae(const Matrix& y, const Matrix& yhat, MetricNorm norm = MetricNorm::per_element);

struct SignificanceConfig {
    std::size_t k_algorithms = 0;
    std::size_t n_datasets = 0;
    double q_alpha = 0.0;
};

/// Critical distance q_alpha * sqrt(k(k+1) / (6N)).
double nemenyi_cd(const SignificanceConfig& cfg);

/// Per-dataset ranks 1..k (ties averaged), averaged across datasets.
/// scores is algorithms x datasets.
Vec rank_table(const Matrix& scores, bool lower_is_better);

struct WindowMetrics {
    std::size_t window_id = 0;
    double mse = 0.0;  // per the summary's headline normalization
    double mae = 0.0;
};

struct PredictionRecord {
    std::size_t window_id = 0;
    std::size_t step = 0;
    std::size_t channel = 0;
    double y_true = 0.0;
    double y_pred = 0.0;
};

struct EvalSummary {
    double mse_per_element = 0.0;
    double mae_per_element = 0.0;
    double mse_per_horizon = 0.0;
    double mae_per_horizon = 0.0;
    std::vector<WindowMetrics> per_window;  // per_element normalization
};

struct EvalResult {
    EvalSummary summary;
    std::vector<PredictionRecord> predictions;
};

/// Forecast -> reconstruct -> denormalize with the window's own lookback
/// stats -> metrics in original units. Parallel over windows with the
/// fixed-slot reduction.
EvalResult evaluate_model(const ModelParams& params, const std::vector<TimeWindow>& windows,
                          const PrepConfig& prep, const BinScheme& bins, Exec mode = Exec::parallel,
                          bool keep_predictions = true);

/// Serial reference for the kernel above.
EvalResult evaluate_model_reference(const ModelParams& params,
                                    const std::vector<TimeWindow>& windows,
                                    const PrepConfig& prep, const BinScheme& bins,
                                    bool keep_predictions = true);

/// Repeat-last-value baseline, evaluated directly in original units.
EvalSummary evaluate_persistence(const std::vector<TimeWindow>& windows);

}  // namespace ocets

#endif

#ifndef OCETS_PIPELINE_HPP
#define OCETS_PIPELINE_HPP

#include <optional>
#include <string>
#include <vector>

#include "ocets/config.hpp"
#include "ocets/eval.hpp"
#include "ocets/influence.hpp"

namespace ocets {

/// One (lookback, horizon) training cell, end to end: split, window, train,
/// reconstruct, metrics.
struct CellResult {
    std::size_t lookback = 0;
    std::size_t horizon = 0;
    EvalSummary test_metrics;
    EvalSummary persistence;  // repeat-last-value baseline on the same split
    TrainReport report;
    ModelParams params;
    std::vector<PredictionRecord> predictions;
    Vec realized_snr_db;  // per feature; empty when noise is off
};

/// Per-feature realized SNR of noisy vs clean, in dB.
Vec realized_snr_db(const SeriesTable& clean, const SeriesTable& noisy);

/// Runs the full pipeline for one cell. Overridable knobs cover every ablation
/// axis; unset optionals fall back to the config baseline.
struct CellOverrides {
    std::optional<std::size_t> lookback;
    std::optional<std::size_t> horizon;
    std::optional<double> sigma;
    std::optional<std::size_t> bins;
    std::optional<DistFamily> family;
    std::optional<LossKind> loss;
    std::optional<double> snr_db;  // enables noise injection
};

CellResult run_cell(const ExperimentConfig& cfg, const SeriesTable& table,
                    const CellOverrides& overrides = {},
                    const EpochCallback& on_epoch = {});

/// Loads data.path or falls back to the built-in synthetic fixture when the
/// path is empty.
SeriesTable load_experiment_table(const ExperimentConfig& cfg);

struct AblateRow {
    std::string axis;
    std::string value;
    std::size_t lookback = 0;
    std::size_t horizon = 0;
    std::string status = "ok";  // or the error message
    double mse = 0.0;
    double mae = 0.0;
    double snr_dev_db = 0.0;  // max per-feature |realized - requested|, snr axis only
};

enum class AblateAxis { family, bins, sigma, lookback, snr, loss };

AblateAxis parse_ablate_axis(const std::string& name);
std::string ablate_axis_name(AblateAxis axis);

std::vector<AblateRow> run_ablation(const ExperimentConfig& cfg, const SeriesTable& table,
                                    AblateAxis axis);

// ---- run outputs -----------------------------------------------------------
// Fixed per-run filenames under out/<run-id>/ for scriptability. metrics.json
// carries no timestamps, so deterministic reruns are byte-identical; the
// manifest carries the wall-clock record instead.

void ensure_dir(const std::string& path);

void write_metrics_json(const std::string& path, const ExperimentConfig& cfg,
                        const CellResult& cell);
void write_predictions_csv(const std::string& path, const std::vector<PredictionRecord>& rows);
void write_window_metrics_csv(const std::string& path, const std::vector<WindowMetrics>& rows);
void write_train_log(const std::string& path, const TrainReport& report);
void write_ablate_csv(const std::string& path, const std::vector<AblateRow>& rows);
void write_influence_csv(const std::string& path, const SweepResult& sweep);
void write_stability_csv(const std::string& path, const std::vector<StabilityCell>& cells);
void write_ranks_csv(const std::string& path, const std::vector<std::string>& algorithms,
                     const Vec& ranks);
void write_results_csv(const std::string& path, const ExperimentConfig& cfg,
                       const std::vector<CellResult>& cells);

struct ScoreTable {
    std::vector<std::string> algorithms;  // column names
    std::vector<std::string> datasets;    // row labels (may be synthesized)
    Matrix scores;                        // algorithms x datasets
};

/// Score matrix CSV: header = algorithm names, one row per dataset; an
/// optional leading label column is detected by its non-numeric cells.
ScoreTable load_scores_csv(const std::string& path);

/// Manifest: resolved config snapshot, seeds, code version, timestamps and
/// output paths. Enough to re-run the experiment bit-identically in
/// deterministic mode.
void write_manifest(const std::string& path, const ExperimentConfig& cfg,
                    const std::vector<std::string>& outputs, const std::string& started_at,
                    const std::string& finished_at);

std::string timestamp_utc();

}  // namespace ocets

#endif

#ifndef OCETS_DATA_HPP
#define OCETS_DATA_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ocets/matrix.hpp"
#include "ocets/rng.hpp"

namespace ocets {

/// In-memory multivariate series: T rows by M feature columns, optional date
/// labels. Rows with unparsable cells abort ingestion; nothing is imputed.
struct SeriesTable {
    std::vector<std::string> timestamps;  // empty when no date column
    Matrix values;                        // T x M
    std::vector<std::string> feature_names;

    std::size_t rows() const { return values.rows(); }
    std::size_t cols() const { return values.cols(); }
};

struct CsvSchema {
    std::string date_column = "date";
    std::vector<std::string> feature_columns;  // empty selects every non-date column
};

SeriesTable load_csv(const std::string& path, const CsvSchema& schema = {});
void write_csv(const SeriesTable& table, const std::string& path);

/// One training/eval sample: w lookback rows ending at origin_index and the h
/// horizon rows after it.
struct TimeWindow {
    Matrix lookback;  // w x M
    Matrix horizon;   // h x M
    std::size_t origin_index = 0;
};

std::vector<TimeWindow> make_windows(const SeriesTable& table, std::size_t w, std::size_t h,
                                     std::size_t stride = 1);

enum class RangeMode { zero_one, sym_one };

RangeMode parse_range_mode(const std::string& name);
std::string range_mode_name(RangeMode m);

/// Normalization support [a, b] implied by the range mode.
std::pair<double, double> support_range(RangeMode mode);

struct NormStats {
    Vec x_min;  // per feature
    Vec x_max;
    double epsilon = 1e-8;
    RangeMode mode = RangeMode::zero_one;
};

/// Per-feature min/max over the given rows (a window lookback, a horizon
/// block, or a whole split for the global ablation mode).
NormStats fit_norm(const Matrix& values, RangeMode mode, double epsilon = 1e-8);

Matrix normalize(const Matrix& x, const NormStats& stats);
Matrix denormalize(const Matrix& x_norm, const NormStats& stats);

struct NoiseSpec {
    double snr_db = 0.0;
    std::uint64_t seed = 0;
    bool enabled = false;
};

/// Adds zero-mean Gaussian noise per feature with variance
/// P_signal / 10^(snr_db / 10), P_signal the column's mean squared value.
/// Disabled or infinite-SNR specs return the table unchanged.
SeriesTable inject_noise(const SeriesTable& table, const NoiseSpec& spec, Rng& rng);

struct SplitRatios {
    double train = 0.6;
    double val = 0.2;
    double test = 0.2;
};

/// Chronological contiguous split; segments concatenate back to the input.
std::array<SeriesTable, 3> split(const SeriesTable& table, const SplitRatios& ratios);

/// Deterministic sinusoid/trend/noise generator for fixtures and smoke runs.
/// Every channel mixes the same periods with channel-specific amplitudes and
/// phases; keeping the periods at or below the forecast horizon makes each
/// window's horizon range match its lookback range, which the per-window
/// normalization protocol relies on.
struct SynthSpec {
    std::size_t rows = 2000;
    std::size_t channels = 2;
    Vec periods{24.0, 12.0};
    double trend_slope = 0.0;
    double noise_std = 0.0;
    std::uint64_t seed = 7;
};

SeriesTable make_synthetic(const SynthSpec& spec);

}  // namespace ocets

#endif

#include "ocets/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace ocets {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& raw, std::size_t row, std::size_t col) {
    const std::string s = trim(raw);
    if (s.empty())
        throw ParseError("empty cell at row " + std::to_string(row) + ", col " +
                         std::to_string(col));
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(v))
        throw ParseError("non-numeric cell '" + s + "' at row " + std::to_string(row) +
                         ", col " + std::to_string(col));
    return v;
}

}  // namespace

SeriesTable load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw SchemaError("'" + path + "': empty file");
    const auto header = split_line(line);
    if (header.empty()) throw SchemaError("'" + path + "': empty header");

    bool has_date = !schema.date_column.empty() && trim(header[0]) == schema.date_column;
    SeriesTable table;
    const std::size_t first_feature = has_date ? 1 : 0;

    // columns to keep, in file order unless the schema names a subset
    std::vector<std::size_t> selected;
    if (schema.feature_columns.empty()) {
        for (std::size_t i = first_feature; i < header.size(); ++i) selected.push_back(i);
    } else {
        for (const auto& want : schema.feature_columns) {
            bool found = false;
            for (std::size_t i = first_feature; i < header.size(); ++i)
                if (trim(header[i]) == want) {
                    selected.push_back(i);
                    found = true;
                    break;
                }
            if (!found)
                throw SchemaError("'" + path + "': no column named '" + want + "'");
        }
    }
    for (std::size_t i : selected) table.feature_names.push_back(trim(header[i]));
    const std::size_t m = table.feature_names.size();
    if (m == 0) throw SchemaError("'" + path + "': no feature columns");

    std::vector<double> flat;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size())
            throw SchemaError("'" + path + "': row " + std::to_string(rows + 1) + " has " +
                              std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(header.size()));
        if (has_date) table.timestamps.push_back(trim(cells[0]));
        for (std::size_t c : selected) flat.push_back(parse_cell(cells[c], rows + 1, c));
        ++rows;
    }
    if (rows < 2) throw SchemaError("'" + path + "': need at least 2 data rows");
    table.values = Matrix::from_rows(rows, m, std::move(flat));
    return table;
}

void write_csv(const SeriesTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    const bool has_date = !table.timestamps.empty();
    if (has_date) out << "date,";
    for (std::size_t c = 0; c < table.feature_names.size(); ++c)
        out << table.feature_names[c] << (c + 1 < table.feature_names.size() ? "," : "\n");
    out.precision(17);
    for (std::size_t r = 0; r < table.rows(); ++r) {
        if (has_date) out << table.timestamps[r] << ",";
        for (std::size_t c = 0; c < table.cols(); ++c)
            out << table.values(r, c) << (c + 1 < table.cols() ? "," : "\n");
    }
}

std::vector<TimeWindow> make_windows(const SeriesTable& table, std::size_t w, std::size_t h,
                                     std::size_t stride) {
    if (w < 1 || h < 1 || stride < 1)
        throw InvalidParameter("make_windows: w, h, stride must be >= 1");
    const std::size_t t = table.rows();
    if (t < w + h)
        throw InsufficientData("make_windows: " + std::to_string(t) + " rows < w + h = " +
                               std::to_string(w + h));
    const std::size_t count = (t - w - h) / stride + 1;
    std::vector<TimeWindow> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t origin = w - 1 + i * stride;
        TimeWindow win;
        win.origin_index = origin;
        win.lookback = Matrix(w, table.cols());
        win.horizon = Matrix(h, table.cols());
        for (std::size_t r = 0; r < w; ++r)
            for (std::size_t c = 0; c < table.cols(); ++c)
                win.lookback(r, c) = table.values(origin + 1 - w + r, c);
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < table.cols(); ++c)
                win.horizon(r, c) = table.values(origin + 1 + r, c);
        out.push_back(std::move(win));
    }
    return out;
}

RangeMode parse_range_mode(const std::string& name) {
    if (name == "zero_one") return RangeMode::zero_one;
    if (name == "sym_one") return RangeMode::sym_one;
    throw ConfigError("unknown range mode '" + name + "'");
}

std::string range_mode_name(RangeMode m) {
    return m == RangeMode::zero_one ? "zero_one" : "sym_one";
}

std::pair<double, double> support_range(RangeMode mode) {
    return mode == RangeMode::zero_one ? std::pair{0.0, 1.0} : std::pair{-1.0, 1.0};
}

NormStats fit_norm(const Matrix& values, RangeMode mode, double epsilon) {
    if (values.rows() < 1) throw InvalidDimension("fit_norm: empty matrix");
    NormStats stats;
    stats.mode = mode;
    stats.epsilon = epsilon;
    stats.x_min.assign(values.cols(), std::numeric_limits<double>::infinity());
    stats.x_max.assign(values.cols(), -std::numeric_limits<double>::infinity());
    for (std::size_t r = 0; r < values.rows(); ++r)
        for (std::size_t c = 0; c < values.cols(); ++c) {
            stats.x_min[c] = std::min(stats.x_min[c], values(r, c));
            stats.x_max[c] = std::max(stats.x_max[c], values(r, c));
        }
    return stats;
}

Matrix normalize(const Matrix& x, const NormStats& stats) {
    if (x.cols() != stats.x_min.size())
        throw InvalidDimension("normalize: feature count mismatch");
    Matrix out(x.rows(), x.cols());
    for (std::size_t c = 0; c < x.cols(); ++c) {
        const double denom = stats.x_max[c] - stats.x_min[c] + stats.epsilon;
        for (std::size_t r = 0; r < x.rows(); ++r) {
            const double unit = (x(r, c) - stats.x_min[c]) / denom;
            out(r, c) = stats.mode == RangeMode::zero_one ? unit : 2.0 * unit - 1.0;
        }
    }
    return out;
}

Matrix denormalize(const Matrix& x_norm, const NormStats& stats) {
    if (x_norm.cols() != stats.x_min.size())
        throw InvalidDimension("denormalize: feature count mismatch");
    Matrix out(x_norm.rows(), x_norm.cols());
    for (std::size_t c = 0; c < x_norm.cols(); ++c) {
        const double range = stats.x_max[c] - stats.x_min[c] + stats.epsilon;
        for (std::size_t r = 0; r < x_norm.rows(); ++r) {
            const double unit = stats.mode == RangeMode::zero_one
                                    ? x_norm(r, c)
                                    : (x_norm(r, c) + 1.0) / 2.0;
            out(r, c) = unit * range + stats.x_min[c];
        }
    }
    return out;
}

SeriesTable inject_noise(const SeriesTable& table, const NoiseSpec& spec, Rng& rng) {
    if (!spec.enabled || std::isinf(spec.snr_db)) return table;
    SeriesTable out = table;
    const double atten = std::pow(10.0, spec.snr_db / 10.0);
    for (std::size_t c = 0; c < table.cols(); ++c) {
        double power = 0.0;
        for (std::size_t r = 0; r < table.rows(); ++r)
            power += table.values(r, c) * table.values(r, c);
        power /= static_cast<double>(table.rows());
        const double stddev = std::sqrt(power / atten);
        // one sub-stream per feature so column order never matters
        Rng col_rng = rng.split(c);
        for (std::size_t r = 0; r < table.rows(); ++r)
            out.values(r, c) += col_rng.normal(0.0, stddev);
    }
    return out;
}

std::array<SeriesTable, 3> split(const SeriesTable& table, const SplitRatios& ratios) {
    if (!(ratios.train > 0.0 && ratios.val > 0.0 && ratios.test > 0.0))
        throw InvalidParameter("split: fractions must be positive");
    if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9)
        throw InvalidParameter("split: fractions must sum to 1");

    const std::size_t t = table.rows();
    const auto b1 = static_cast<std::size_t>(std::floor(t * ratios.train));
    const auto b2 = static_cast<std::size_t>(std::floor(t * (ratios.train + ratios.val)));

    auto slice = [&](std::size_t lo, std::size_t hi) {
        SeriesTable s;
        s.feature_names = table.feature_names;
        s.values = Matrix(hi - lo, table.cols());
        for (std::size_t r = lo; r < hi; ++r) {
            if (!table.timestamps.empty()) s.timestamps.push_back(table.timestamps[r]);
            for (std::size_t c = 0; c < table.cols(); ++c)
                s.values(r - lo, c) = table.values(r, c);
        }
        return s;
    };
    return {slice(0, b1), slice(b1, b2), slice(b2, t)};
}

SeriesTable make_synthetic(const SynthSpec& spec) {
    if (spec.rows < 2 || spec.channels < 1)
        throw InvalidParameter("make_synthetic: need rows >= 2 and channels >= 1");
    if (spec.periods.empty()) throw InvalidParameter("make_synthetic: need at least one period");
    constexpr double kTau = 2.0 * 3.14159265358979323846;
    SeriesTable table;
    table.values = Matrix(spec.rows, spec.channels);
    Rng noise_rng(spec.seed);
    for (std::size_t c = 0; c < spec.channels; ++c) {
        table.feature_names.push_back("s" + std::to_string(c));
        Rng col_rng = noise_rng.split(c);
        for (std::size_t r = 0; r < spec.rows; ++r) {
            const double t = static_cast<double>(r);
            double v = 2.0 + spec.trend_slope * t;
            for (std::size_t i = 0; i < spec.periods.size(); ++i) {
                // channel-specific amplitude mix and phase over shared periods
                const double amp = 1.0 / (1.0 + 0.5 * i) * (1.0 - 0.25 * (c % 2) * (i % 2 ? -1.0 : 1.0));
                const double phase = 0.7 * static_cast<double>(c) + 0.4 * static_cast<double>(i);
                v += amp * std::sin(kTau * t / spec.periods[i] + phase);
            }
            if (spec.noise_std > 0.0) v += col_rng.normal(0.0, spec.noise_std);
            table.values(r, c) = v;
        }
    }
    return table;
}

}  // namespace ocets

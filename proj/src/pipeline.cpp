#include "ocets/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace ocets {

Vec realized_snr_db(const SeriesTable& clean, const SeriesTable& noisy) {
    if (clean.rows() != noisy.rows() || clean.cols() != noisy.cols())
        throw InvalidDimension("realized_snr_db: table shape mismatch");
    Vec out(clean.cols());
    for (std::size_t c = 0; c < clean.cols(); ++c) {
        double p_signal = 0.0, p_noise = 0.0;
        for (std::size_t r = 0; r < clean.rows(); ++r) {
            const double s = clean.values(r, c);
            const double n = noisy.values(r, c) - s;
            p_signal += s * s;
            p_noise += n * n;
        }
        out[c] = 10.0 * std::log10(p_signal / p_noise);
    }
    return out;
}

SeriesTable load_experiment_table(const ExperimentConfig& cfg) {
    if (cfg.data_path.empty()) {
        SynthSpec spec;
        spec.rows = 2000;
        spec.channels = 2;
        spec.seed = cfg.seed;
        return make_synthetic(spec);
    }
    CsvSchema schema;
    schema.date_column = cfg.date_column;
    schema.feature_columns = cfg.feature_columns;
    return load_csv(cfg.data_path, schema);
}

CellResult run_cell(const ExperimentConfig& cfg, const SeriesTable& table,
                    const CellOverrides& overrides, const EpochCallback& on_epoch) {
    const std::size_t w = overrides.lookback.value_or(cfg.lookbacks.front());
    const std::size_t h = overrides.horizon.value_or(cfg.horizons.front());

    TargetDistSpec dist = cfg.dist;
    if (overrides.sigma) dist.sigma = *overrides.sigma;
    if (overrides.family) dist.family = *overrides.family;
    const std::size_t k = overrides.bins.value_or(cfg.bins_k);
    const LossKind loss = overrides.loss.value_or(cfg.loss);

    CellResult cell;
    cell.lookback = w;
    cell.horizon = h;

    SeriesTable working = table;
    if (overrides.snr_db || cfg.noise.enabled) {
        NoiseSpec noise = cfg.noise;
        noise.enabled = true;
        if (overrides.snr_db) noise.snr_db = *overrides.snr_db;
        Rng noise_rng = Rng(noise.seed).split(rng_stream::noise);
        working = inject_noise(table, noise, noise_rng);
        cell.realized_snr_db = realized_snr_db(table, working);
    }

    const auto parts = split(working, cfg.split_ratios);
    const auto& train_part = parts[0];
    const auto& val_part = parts[1];
    const auto& test_part = parts[2];

    const auto train_windows = make_windows(train_part, w, h, cfg.stride);
    const auto val_windows = make_windows(val_part, w, h, cfg.stride);
    const auto test_windows = make_windows(test_part, w, h, cfg.stride);

    PrepConfig prep;
    prep.mode = cfg.range_mode;
    prep.epsilon = cfg.norm_epsilon;
    prep.scope = cfg.norm_scope;
    prep.head = cfg.head;
    if (cfg.norm_scope == NormScope::global)
        prep.global_stats = fit_norm(train_part.values, cfg.range_mode, cfg.norm_epsilon);

    const Exec exec = cfg.train.exec;
    const auto train_samples = prepare_samples(train_windows, prep, exec);
    const auto val_samples = prepare_samples(val_windows, prep, exec);

    const auto [a, b] = support_range(cfg.range_mode);
    const BinScheme bins = make_bins(k, a, b);

    Rng init_rng = Rng(cfg.seed).split(rng_stream::init);
    const std::size_t m = table.cols();
    std::size_t ma = cfg.ma_window;
    if (ma > w) ma = w % 2 == 0 ? w - 1 : w;  // keep it odd and within the window
    ModelParams init = init_params(w, h, m, k, ma, init_rng, cfg.init_jitter, cfg.head);

    FitResult fit_result =
        fit(init, train_samples, val_samples, bins, dist, loss, cfg.train, on_epoch);
    cell.report = std::move(fit_result.report);
    cell.params = std::move(fit_result.params);

    EvalResult eval = evaluate_model(cell.params, test_windows, prep, bins, exec, true);
    cell.test_metrics = std::move(eval.summary);
    cell.predictions = std::move(eval.predictions);
    cell.persistence = evaluate_persistence(test_windows);
    return cell;
}

AblateAxis parse_ablate_axis(const std::string& name) {
    if (name == "family") return AblateAxis::family;
    if (name == "bins") return AblateAxis::bins;
    if (name == "sigma") return AblateAxis::sigma;
    if (name == "lookback") return AblateAxis::lookback;
    if (name == "snr") return AblateAxis::snr;
    if (name == "loss") return AblateAxis::loss;
    throw ConfigError("unknown ablation axis '" + name + "'");
}

std::string ablate_axis_name(AblateAxis axis) {
    switch (axis) {
        case AblateAxis::family: return "family";
        case AblateAxis::bins: return "bins";
        case AblateAxis::sigma: return "sigma";
        case AblateAxis::lookback: return "lookback";
        case AblateAxis::snr: return "snr";
        case AblateAxis::loss: return "loss";
    }
    return "?";
}

namespace {

double headline(const ExperimentConfig& cfg, const EvalSummary& s, bool want_mse) {
    if (cfg.headline_norm == MetricNorm::per_element)
        return want_mse ? s.mse_per_element : s.mae_per_element;
    return want_mse ? s.mse_per_horizon : s.mae_per_horizon;
}

}  // namespace

std::vector<AblateRow> run_ablation(const ExperimentConfig& cfg, const SeriesTable& table,
                                    AblateAxis axis) {
    struct AxisValue {
        std::string label;
        CellOverrides overrides;
    };
    std::vector<AxisValue> values;
    switch (axis) {
        case AblateAxis::family:
            for (const auto& f : cfg.family_axis) {
                CellOverrides o;
                o.family = parse_family(f);
                values.push_back({f, o});
            }
            break;
        case AblateAxis::bins:
            for (auto kb : cfg.bins_axis) {
                CellOverrides o;
                o.bins = kb;
                values.push_back({std::to_string(kb), o});
            }
            break;
        case AblateAxis::sigma:
            for (auto s : cfg.sigma_axis) {
                CellOverrides o;
                o.sigma = s;
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%g", s);
                values.push_back({buf, o});
            }
            break;
        case AblateAxis::lookback:
            for (auto w : cfg.lookbacks) {
                CellOverrides o;
                o.lookback = w;
                values.push_back({std::to_string(w), o});
            }
            break;
        case AblateAxis::snr:
            for (auto snr : cfg.snr_axis) {
                CellOverrides o;
                o.snr_db = snr;
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%g", snr);
                values.push_back({buf, o});
            }
            break;
        case AblateAxis::loss:
            for (const auto& l : cfg.loss_axis) {
                CellOverrides o;
                o.loss = parse_loss_kind(l);
                values.push_back({l, o});
            }
            break;
    }

    std::vector<AblateRow> rows;
    for (const auto& value : values) {
        for (auto h : cfg.horizons) {
            AblateRow row;
            row.axis = ablate_axis_name(axis);
            row.value = value.label;
            row.horizon = h;
            CellOverrides overrides = value.overrides;
            overrides.horizon = h;
            row.lookback = overrides.lookback.value_or(cfg.lookbacks.front());
            try {
                const CellResult cell = run_cell(cfg, table, overrides);
                row.mse = headline(cfg, cell.test_metrics, true);
                row.mae = headline(cfg, cell.test_metrics, false);
                if (axis == AblateAxis::snr) {
                    double dev = 0.0;
                    for (double r : cell.realized_snr_db)
                        dev = std::max(dev, std::abs(r - *overrides.snr_db));
                    row.snr_dev_db = dev;
                }
            } catch (const Error& e) {
                // a failed cell is a logged row, not a sweep abort
                row.status = e.what();
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void ensure_dir(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw IoError("cannot create directory '" + path + "': " + ec.message());
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out.precision(17);
    return out;
}

}  // namespace

void write_metrics_json(const std::string& path, const ExperimentConfig& cfg,
                        const CellResult& cell) {
    nlohmann::json j;
    j["dataset"] = cfg.dataset_name;
    j["horizon"] = cell.horizon;
    j["lookback"] = cell.lookback;
    j["loss"] = loss_kind_name(cfg.loss);
    j["tpt"] = {{"family", family_name(cfg.dist.family)},
                {"k", cfg.bins_k},
                {"sigma", cfg.dist.sigma},
                {"nu", cfg.dist.nu}};
    j["seed"] = cfg.seed;
    j["normalization"] = metric_norm_name(cfg.headline_norm);
    const bool per_element = cfg.headline_norm == MetricNorm::per_element;
    j["mse"] = per_element ? cell.test_metrics.mse_per_element
                           : cell.test_metrics.mse_per_horizon;
    j["mae"] = per_element ? cell.test_metrics.mae_per_element
                           : cell.test_metrics.mae_per_horizon;
    j["mse_per_horizon"] = cell.test_metrics.mse_per_horizon;
    j["mae_per_horizon"] = cell.test_metrics.mae_per_horizon;
    j["mse_per_element"] = cell.test_metrics.mse_per_element;
    j["mae_per_element"] = cell.test_metrics.mae_per_element;
    j["persistence_mse"] = per_element ? cell.persistence.mse_per_element
                                       : cell.persistence.mse_per_horizon;
    j["persistence_mae"] = per_element ? cell.persistence.mae_per_element
                                       : cell.persistence.mae_per_horizon;
    j["best_epoch"] = cell.report.best_epoch;
    j["stopped_early"] = cell.report.stopped_early;
    j["params_checksum"] = cell.report.params_checksum;
    if (!cell.realized_snr_db.empty()) j["realized_snr_db"] = cell.realized_snr_db;
    auto out = open_out(path);
    out << j.dump(2) << "\n";
}

void write_predictions_csv(const std::string& path,
                           const std::vector<PredictionRecord>& rows) {
    auto out = open_out(path);
    out << "window_id,step,channel,y_true,y_pred\n";
    for (const auto& r : rows)
        out << r.window_id << "," << r.step << "," << r.channel << "," << r.y_true << ","
            << r.y_pred << "\n";
}

void write_window_metrics_csv(const std::string& path,
                              const std::vector<WindowMetrics>& rows) {
    auto out = open_out(path);
    out << "window_id,mse,mae\n";
    for (const auto& r : rows) out << r.window_id << "," << r.mse << "," << r.mae << "\n";
}

void write_train_log(const std::string& path, const TrainReport& report) {
    auto out = open_out(path);
    out << "epoch,train_loss,val_loss,lr\n";
    for (std::size_t e = 0; e < report.train_loss.size(); ++e) {
        out << e << "," << report.train_loss[e] << "," << report.val_loss[e] << ",";
        if (e == 0)
            out << "-";
        else
            out << report.lr_history[e - 1];
        out << "\n";
    }
}

void write_ablate_csv(const std::string& path, const std::vector<AblateRow>& rows) {
    auto out = open_out(path);
    out << "axis,value,lookback,horizon,status,mse,mae,snr_dev_db\n";
    for (const auto& r : rows) {
        std::string status = r.status;
        for (auto& ch : status)
            if (ch == ',' || ch == '\n') ch = ';';
        out << r.axis << "," << r.value << "," << r.lookback << "," << r.horizon << ","
            << status << "," << r.mse << "," << r.mae << "," << r.snr_dev_db << "\n";
    }
}

void write_influence_csv(const std::string& path, const SweepResult& sweep) {
    auto out = open_out(path);
    out << "id,d,k,skipped,ok,residual,sigma_deviation,kappa2,lambda_min_p,lambda_max_p,"
           "ratio,lower_bound,upper_bound\n";
    for (const auto& row : sweep.rows) {
        out << row.id << "," << row.d << "," << row.k << "," << (row.skipped ? 1 : 0) << ","
            << (row.ok ? 1 : 0) << ",";
        if (row.skipped) {
            out << ",,,,,,,\n";
            continue;
        }
        const auto& r = row.report;
        out << r.residual << "," << r.sigma_deviation << "," << r.kappa2 << ","
            << r.lambda_min_p << "," << r.lambda_max_p << "," << r.ratio << ","
            << r.lower_bound << "," << r.upper_bound << "\n";
    }
}

void write_stability_csv(const std::string& path, const std::vector<StabilityCell>& cells) {
    auto out = open_out(path);
    out << "kappa2,lambda_min_p,residual,upper_bound,condition_holds\n";
    for (const auto& c : cells)
        out << c.kappa2 << "," << c.lambda_min_p << "," << c.residual << "," << c.upper_bound
            << "," << (c.condition_holds ? 1 : 0) << "\n";
}

void write_ranks_csv(const std::string& path, const std::vector<std::string>& algorithms,
                     const Vec& ranks) {
    if (algorithms.size() != ranks.size())
        throw InvalidDimension("write_ranks_csv: name/rank count mismatch");
    auto out = open_out(path);
    out << "algorithm,average_rank\n";
    for (std::size_t i = 0; i < ranks.size(); ++i)
        out << algorithms[i] << "," << ranks[i] << "\n";
}

void write_results_csv(const std::string& path, const ExperimentConfig& cfg,
                       const std::vector<CellResult>& cells) {
    auto out = open_out(path);
    out << "dataset,lookback,horizon,mse,mae,persistence_mse,best_epoch,stopped_early\n";
    const bool pe = cfg.headline_norm == MetricNorm::per_element;
    for (const auto& c : cells)
        out << cfg.dataset_name << "," << c.lookback << "," << c.horizon << ","
            << (pe ? c.test_metrics.mse_per_element : c.test_metrics.mse_per_horizon) << ","
            << (pe ? c.test_metrics.mae_per_element : c.test_metrics.mae_per_horizon) << ","
            << (pe ? c.persistence.mse_per_element : c.persistence.mse_per_horizon) << ","
            << c.report.best_epoch << "," << (c.report.stopped_early ? 1 : 0) << "\n";
}

ScoreTable load_scores_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scores '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("'" + path + "': empty file");

    auto split_cells = [](const std::string& s) {
        std::vector<std::string> cells;
        std::string cur;
        for (char ch : s) {
            if (ch == ',') {
                cells.push_back(cur);
                cur.clear();
            } else if (ch != '\r') {
                cur += ch;
            }
        }
        cells.push_back(cur);
        return cells;
    };
    auto is_number = [](const std::string& s) {
        char* end = nullptr;
        std::strtod(s.c_str(), &end);
        return !s.empty() && end == s.c_str() + s.size();
    };

    const auto header = split_cells(line);
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_cells(line);
        if (cells.size() != header.size())
            throw ParseError("'" + path + "': ragged row with " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(header.size()));
        rows.push_back(cells);
    }
    if (rows.empty()) throw SchemaError("'" + path + "': no score rows");

    const bool labeled = !rows[0].empty() && !is_number(rows[0][0]);
    const std::size_t first_col = labeled ? 1 : 0;

    ScoreTable table;
    for (std::size_t c = first_col; c < header.size(); ++c) table.algorithms.push_back(header[c]);
    if (table.algorithms.empty()) throw SchemaError("'" + path + "': no algorithm columns");

    table.scores = Matrix(table.algorithms.size(), rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        table.datasets.push_back(labeled ? rows[r][0] : "dataset" + std::to_string(r));
        for (std::size_t c = first_col; c < header.size(); ++c) {
            if (!is_number(rows[r][c]))
                throw ParseError("'" + path + "': non-numeric score '" + rows[r][c] + "'");
            table.scores(c - first_col, r) = std::strtod(rows[r][c].c_str(), nullptr);
        }
    }
    return table;
}

std::string timestamp_utc() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

void write_manifest(const std::string& path, const ExperimentConfig& cfg,
                    const std::vector<std::string>& outputs, const std::string& started_at,
                    const std::string& finished_at) {
    nlohmann::json j;
    j["code_version"] = kCodeVersion;
    j["run_id"] = config_hash(cfg.raw);
    j["deterministic"] = cfg.deterministic;
    j["seed"] = cfg.seed;
    j["noise_seed"] = cfg.noise.seed;
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
    j["outputs"] = outputs;
    j["config"] = nlohmann::json::object();
    for (const auto& [key, value] : cfg.raw.entries()) {
        if (value.is_list)
            j["config"][key] = value.items;
        else
            j["config"][key] = value.scalar;
    }
    j["assumptions"] = {
        "train/val/test split is chronological at the configured fractions (default "
        "0.6/0.2/0.2)",
        "learning rate schedule: " + TrainReport{}.lr_schedule,
    };
    auto out = open_out(path);
    out << j.dump(2) << "\n";
}

}  // namespace ocets

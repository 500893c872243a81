// Experiment harness: train / ablate / influence / cd / gen-fixture.
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ocets/pipeline.hpp"

namespace {

using namespace ocets;

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> sets;
    std::string out_dir;
    long long seed = -1;
    bool deterministic = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "Config file (key = value trees)");
    cmd->add_option("--set", args.sets, "Override config keys, e.g. --set train.lr=0.01")
        ->take_all();
    cmd->add_option("--out", args.out_dir, "Output directory root");
    cmd->add_option("--seed", args.seed, "Global seed override");
    cmd->add_flag("--deterministic", args.deterministic, "Force deterministic mode");
}

ExperimentConfig resolve_config(const CommonArgs& args) {
    Config cfg = args.config_path.empty() ? Config() : Config::parse_file(args.config_path);
    for (const auto& kv : args.sets) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!args.out_dir.empty()) cfg.set("run.out", args.out_dir);
    if (args.seed >= 0) cfg.set("run.seed", std::to_string(args.seed));
    if (args.deterministic) cfg.set("run.deterministic", "true");
    return ExperimentConfig::resolve(cfg);
}

std::string make_run_dir(const ExperimentConfig& cfg, const std::string& command) {
    const std::string dir = cfg.out_dir + "/" + command + "-" + config_hash(cfg.raw);
    ensure_dir(dir);
    return dir;
}

int cmd_train(const CommonArgs& args) {
    const ExperimentConfig cfg = resolve_config(args);
    if (!cfg.data_path.empty()) {
        std::ifstream probe(cfg.data_path);
        if (!probe) throw IoError("data.path '" + cfg.data_path + "' does not exist");
    }
    const SeriesTable table = load_experiment_table(cfg);
    const std::string run_dir = make_run_dir(cfg, "train");
    const std::string started = timestamp_utc();

    std::vector<CellResult> cells;
    std::vector<std::string> outputs;
    for (std::size_t w : cfg.lookbacks) {
        for (std::size_t h : cfg.horizons) {
            const std::string cell_dir = run_dir + "/" + cfg.dataset_name + "_w" +
                                         std::to_string(w) + "_h" + std::to_string(h);
            ensure_dir(cell_dir);
            CellOverrides overrides;
            overrides.lookback = w;
            overrides.horizon = h;
            try {
                CellResult cell = run_cell(cfg, table, overrides);
                write_metrics_json(cell_dir + "/metrics.json", cfg, cell);
                write_predictions_csv(cell_dir + "/predictions.csv", cell.predictions);
                write_window_metrics_csv(cell_dir + "/window_metrics.csv",
                                         cell.test_metrics.per_window);
                write_train_log(cell_dir + "/train.log", cell.report);
                save_checkpoint(cell.params, cell_dir + "/checkpoint.json");
                for (const char* name :
                     {"/metrics.json", "/predictions.csv", "/window_metrics.csv", "/train.log",
                      "/checkpoint.json"})
                    outputs.push_back(cell_dir + name);
                std::cout << cfg.dataset_name << " w=" << w << " h=" << h
                          << " mse=" << (cfg.headline_norm == MetricNorm::per_element
                                             ? cell.test_metrics.mse_per_element
                                             : cell.test_metrics.mse_per_horizon)
                          << " mae=" << (cfg.headline_norm == MetricNorm::per_element
                                             ? cell.test_metrics.mae_per_element
                                             : cell.test_metrics.mae_per_horizon)
                          << "\n";
                cells.push_back(std::move(cell));
            } catch (const Error& e) {
                // one failed cell must not sink the whole sweep
                std::cerr << "cell w=" << w << " h=" << h << " failed: " << e.what() << "\n";
            }
        }
    }
    if (cells.empty()) throw InsufficientData("train: every cell failed");
    write_results_csv(run_dir + "/results.csv", cfg, cells);
    outputs.push_back(run_dir + "/results.csv");
    write_manifest(run_dir + "/manifest.json", cfg, outputs, started, timestamp_utc());
    std::cout << "run dir: " << run_dir << "\n";
    return 0;
}

int cmd_ablate(const CommonArgs& args, const std::string& axis_name) {
    const ExperimentConfig cfg = resolve_config(args);
    const AblateAxis axis = parse_ablate_axis(axis_name);
    const SeriesTable table = load_experiment_table(cfg);
    const std::string run_dir = make_run_dir(cfg, "ablate");
    const std::string started = timestamp_utc();

    const auto rows = run_ablation(cfg, table, axis);
    const std::string csv = run_dir + "/ablate_" + ablate_axis_name(axis) + ".csv";
    write_ablate_csv(csv, rows);
    write_manifest(run_dir + "/manifest.json", cfg, {csv}, started, timestamp_utc());
    for (const auto& row : rows)
        std::cout << row.axis << "=" << row.value << " h=" << row.horizon << " "
                  << (row.status == "ok" ? "mse=" + std::to_string(row.mse)
                                         : "error: " + row.status)
                  << "\n";
    std::cout << "wrote " << csv << "\n";
    return 0;
}

int cmd_influence(const CommonArgs& args) {
    const ExperimentConfig cfg = resolve_config(args);
    const std::string run_dir = make_run_dir(cfg, "influence");
    const std::string started = timestamp_utc();

    const SweepResult sweep = run_ratio_bound_sweep(cfg.influence_instances, cfg.seed);
    const std::string report_csv = run_dir + "/influence_report.csv";
    write_influence_csv(report_csv, sweep);

    const Vec kappa_grid{1.0, 2.0, 5.0, 10.0, 50.0};
    const Vec lambda_grid{0.01, 0.05, 0.1, 0.25, 0.5};
    const Vec residual_grid{0.1, 0.5, 1.0, 2.0, 10.0};
    const std::string stability_csv = run_dir + "/stability_region.csv";
    write_stability_csv(stability_csv, stability_region(kappa_grid, lambda_grid, residual_grid));

    write_manifest(run_dir + "/manifest.json", cfg, {report_csv, stability_csv}, started,
                   timestamp_utc());

    std::cout << "instances: " << sweep.rows.size() << "  skipped: " << sweep.skipped
              << "  violations: " << sweep.violations << "\n";
    if (sweep.violations > 0) {
        for (const auto& row : sweep.rows)
            if (!row.skipped && !row.ok)
                std::cerr << "violation at instance " << row.id << ": "
                          << row.report.lower_bound << " <= " << row.report.ratio
                          << " <= " << row.report.upper_bound << " fails\n";
        throw InvariantViolation("influence: ratio bound violated");
    }
    std::cout << "wrote " << report_csv << "\n";
    return 0;
}

int cmd_cd(const CommonArgs& args, const std::string& scores_path, double q_alpha,
           bool higher_is_better) {
    const ScoreTable table = load_scores_csv(scores_path);
    SignificanceConfig sig;
    sig.k_algorithms = table.algorithms.size();
    sig.n_datasets = table.datasets.size();
    sig.q_alpha = q_alpha;
    const double cd = nemenyi_cd(sig);
    const Vec ranks = rank_table(table.scores, !higher_is_better);

    std::cout << "k=" << sig.k_algorithms << " N=" << sig.n_datasets << " CD=" << cd << "\n";
    for (std::size_t i = 0; i < ranks.size(); ++i)
        std::cout << table.algorithms[i] << " rank " << ranks[i] << "\n";

    std::string out_dir = args.out_dir.empty() ? std::string("out") : args.out_dir;
    ensure_dir(out_dir);
    write_ranks_csv(out_dir + "/ranks.csv", table.algorithms, ranks);
    std::cout << "wrote " << out_dir << "/ranks.csv\n";
    return 0;
}

int cmd_gen_fixture(const std::string& out_path, std::size_t rows, std::size_t channels,
                    double noise_std, double trend, std::uint64_t seed) {
    SynthSpec spec;
    spec.rows = rows;
    spec.channels = channels;
    spec.noise_std = noise_std;
    spec.trend_slope = trend;
    spec.seed = seed;
    write_csv(make_synthetic(spec), out_path);
    std::cout << "wrote " << out_path << " (" << rows << " x " << channels << ")\n";
    return 0;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"Ordinal cross-entropy time series forecasting harness"};
    app.require_subcommand(1);

    CommonArgs train_args, ablate_args, influence_args, cd_args;
    std::string axis = "sigma";
    std::string scores_path;
    double q_alpha = 2.850;
    bool higher_is_better = false;

    std::string fixture_out = "fixture.csv";
    std::size_t fixture_rows = 2000, fixture_channels = 2;
    double fixture_noise = 0.0, fixture_trend = 0.0;
    std::uint64_t fixture_seed = 7;

    CLI::App* train = app.add_subcommand("train", "Train and evaluate over the sweep grid");
    add_common(train, train_args);

    CLI::App* ablate = app.add_subcommand("ablate", "Sweep one axis, baseline elsewhere");
    add_common(ablate, ablate_args);
    ablate->add_option("--axis", axis, "family|bins|sigma|lookback|snr|loss")->required();

    CLI::App* influence = app.add_subcommand("influence", "Influence-function bound sweep");
    add_common(influence, influence_args);

    CLI::App* cd = app.add_subcommand("cd", "Nemenyi critical-distance analysis");
    add_common(cd, cd_args);
    cd->add_option("--scores", scores_path, "CSV score matrix (header = algorithms)")
        ->required();
    cd->add_option("--q-alpha", q_alpha, "Studentized range critical value");
    cd->add_flag("--higher-is-better", higher_is_better, "Rank descending scores first");

    CLI::App* gen = app.add_subcommand("gen-fixture", "Write a synthetic series CSV");
    gen->add_option("--out", fixture_out, "Output CSV path");
    gen->add_option("--rows", fixture_rows, "Number of timesteps");
    gen->add_option("--channels", fixture_channels, "Number of channels");
    gen->add_option("--noise-std", fixture_noise, "Additive noise level");
    gen->add_option("--trend", fixture_trend, "Linear trend slope");
    gen->add_option("--gen-seed", fixture_seed, "Generator seed");

    CLI11_PARSE(app, argc, argv);

    if (train->parsed()) return cmd_train(train_args);
    if (ablate->parsed()) return cmd_ablate(ablate_args, axis);
    if (influence->parsed()) return cmd_influence(influence_args);
    if (cd->parsed()) return cmd_cd(cd_args, scores_path, q_alpha, higher_is_better);
    if (gen->parsed())
        return cmd_gen_fixture(fixture_out, fixture_rows, fixture_channels, fixture_noise,
                               fixture_trend, fixture_seed);
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const ocets::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const ocets::IoError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const ocets::ParseError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const ocets::SchemaError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const ocets::InsufficientData& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const ocets::InvariantViolation& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 4;
    } catch (const ocets::Error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

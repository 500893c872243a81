#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "ocets/pipeline.hpp"

using namespace ocets;

namespace {

ExperimentConfig tiny_config(const std::string& extra = "") {
    return ExperimentConfig::resolve(Config::parse_string(
        "sweep.lookbacks = [32]\n"
        "sweep.horizons = [8]\n"
        "tpt.k = 12\n"
        "train.epochs = 2\n" +
        extra));
}

}  // namespace

TEST_CASE("run_cell produces finite metrics and a persistence baseline") {
    SynthSpec synth;
    synth.rows = 400;
    const CellResult cell = run_cell(tiny_config(), make_synthetic(synth));
    CHECK(std::isfinite(cell.test_metrics.mse_per_element));
    CHECK(std::isfinite(cell.test_metrics.mae_per_element));
    CHECK(cell.persistence.mse_per_element > 0.0);
    CHECK(cell.predictions.size() == cell.test_metrics.per_window.size() * 8 * 2);
    CHECK(cell.report.train_loss.size() == 3);  // init plus two epochs
}

TEST_CASE("ili-style grid yields one result row per horizon") {
    // lookback 104 with horizons 24/36/48/60 over a 966-row series
    const ExperimentConfig cfg = ExperimentConfig::resolve(Config::parse_string(
        "sweep.lookbacks = [104]\n"
        "sweep.horizons = [24, 36, 48, 60]\n"
        "tpt.k = 12\n"
        "train.epochs = 1\n"));
    SynthSpec synth;
    synth.rows = 966;
    synth.channels = 2;
    const SeriesTable table = make_synthetic(synth);

    std::vector<CellResult> cells;
    for (std::size_t w : cfg.lookbacks)
        for (std::size_t h : cfg.horizons) {
            CellOverrides o;
            o.lookback = w;
            o.horizon = h;
            cells.push_back(run_cell(cfg, table, o));
        }
    REQUIRE(cells.size() == 4);

    const std::string path = "/tmp/ocets_test_results.csv";
    write_results_csv(path, cfg, cells);
    std::ifstream in(path);
    std::string line;
    std::size_t rows = 0;
    std::getline(in, line);
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 4);
    std::remove(path.c_str());
}

TEST_CASE("sigma axis emits one row per value and horizon") {
    SynthSpec synth;
    synth.rows = 300;
    const ExperimentConfig cfg = tiny_config("sweep.sigmas = [0.001, 0.01, 0.1, 1]\n");
    const auto rows = run_ablation(cfg, make_synthetic(synth), AblateAxis::sigma);
    REQUIRE(rows.size() == 4);
    for (const auto& r : rows) {
        CHECK(r.status == "ok");
        CHECK(std::isfinite(r.mse));
    }
}

TEST_CASE("a failing sweep cell becomes a logged row, not an abort") {
    SynthSpec synth;
    synth.rows = 240;  // splits support lookback 32 but not 200
    const ExperimentConfig cfg = ExperimentConfig::resolve(Config::parse_string(
        "sweep.lookbacks = [32, 200]\n"
        "sweep.horizons = [8]\n"
        "tpt.k = 12\n"
        "train.epochs = 1\n"));
    const auto rows = run_ablation(cfg, make_synthetic(synth), AblateAxis::lookback);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].status == "ok");
    CHECK(rows[1].status != "ok");
}

TEST_CASE("precomputed target cache changes nothing") {
    SynthSpec synth;
    synth.rows = 400;
    const SeriesTable table = make_synthetic(synth);
    const ExperimentConfig lazy = tiny_config();
    const ExperimentConfig cached = tiny_config("train.precompute_targets = true\n");
    const CellResult a = run_cell(lazy, table);
    const CellResult b = run_cell(cached, table);
    CHECK(param_vector(a.params) == param_vector(b.params));
    CHECK(a.test_metrics.mse_per_element == b.test_metrics.mse_per_element);
    CHECK(a.report.train_loss == b.report.train_loss);
}

TEST_CASE("sym_one support runs the pipeline end to end") {
    SynthSpec synth;
    synth.rows = 400;
    synth.trend_slope = -0.01;  // mixed-sign data
    const ExperimentConfig cfg = tiny_config("data.range_mode = sym_one\n");
    const CellResult cell = run_cell(cfg, make_synthetic(synth));
    CHECK(std::isfinite(cell.test_metrics.mse_per_element));
    for (const auto& rec : cell.predictions) CHECK(std::isfinite(rec.y_pred));
}

TEST_CASE("joint head runs the pipeline end to end") {
    SynthSpec synth;
    synth.rows = 400;
    const ExperimentConfig cfg = tiny_config("model.head = joint\n");
    const CellResult cell = run_cell(cfg, make_synthetic(synth));
    CHECK(std::isfinite(cell.test_metrics.mse_per_element));
    CHECK(cell.params.head == HeadMode::joint);
    CHECK(cell.params.w_o.cols() == 2);
}

TEST_CASE("noise overrides record realized snr per feature") {
    SynthSpec synth;
    synth.rows = 500;
    const ExperimentConfig cfg = tiny_config();
    CellOverrides o;
    o.snr_db = 3.0;
    const CellResult cell = run_cell(cfg, make_synthetic(synth), o);
    REQUIRE(cell.realized_snr_db.size() == 2);
    for (double r : cell.realized_snr_db) CHECK(std::abs(r - 3.0) <= 1.5);  // only 500 points
}

TEST_CASE("score table loader detects the label column") {
    const std::string path = "/tmp/ocets_test_scores.csv";
    {
        std::ofstream out(path);
        out << "dataset,a,b\nfirst,1.0,2.0\nsecond,4.0,3.0\n";
    }
    const ScoreTable t = load_scores_csv(path);
    CHECK(t.algorithms == std::vector<std::string>{"a", "b"});
    CHECK(t.datasets == std::vector<std::string>{"first", "second"});
    CHECK(t.scores(0, 0) == 1.0);
    CHECK(t.scores(1, 1) == 3.0);

    {
        std::ofstream out(path);
        out << "a,b\n1.0,2.0\n4.0\n";
    }
    CHECK_THROWS_AS(load_scores_csv(path), ParseError);
    std::remove(path.c_str());
}

TEST_CASE("manifest and metrics writers emit valid files") {
    SynthSpec synth;
    synth.rows = 400;
    const ExperimentConfig cfg = tiny_config();
    const CellResult cell = run_cell(cfg, make_synthetic(synth));

    const std::string dir = "/tmp/ocets_test_out";
    ensure_dir(dir);
    write_metrics_json(dir + "/metrics.json", cfg, cell);
    write_manifest(dir + "/manifest.json", cfg, {dir + "/metrics.json"}, timestamp_utc(),
                   timestamp_utc());

    std::ifstream metrics(dir + "/metrics.json");
    std::string body((std::istreambuf_iterator<char>(metrics)),
                     std::istreambuf_iterator<char>());
    CHECK(body.find("\"normalization\": \"per_element\"") != std::string::npos);
    CHECK(body.find("\"mse\"") != std::string::npos);

    std::ifstream manifest(dir + "/manifest.json");
    std::string mbody((std::istreambuf_iterator<char>(manifest)),
                      std::istreambuf_iterator<char>());
    CHECK(mbody.find("\"code_version\"") != std::string::npos);
    CHECK(mbody.find("\"run_id\"") != std::string::npos);
    std::remove((dir + "/metrics.json").c_str());
    std::remove((dir + "/manifest.json").c_str());
}

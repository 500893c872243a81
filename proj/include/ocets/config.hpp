#ifndef OCETS_CONFIG_HPP
#define OCETS_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ocets/data.hpp"
#include "ocets/eval.hpp"
#include "ocets/loss.hpp"
#include "ocets/model.hpp"
#include "ocets/targetdist.hpp"
#include "ocets/train.hpp"

namespace ocets {

/// Declarative key tree: [section] headers, dotted keys, scalars, quoted
/// strings, booleans and flat [a, b, c] lists, # comments. Values are stored
/// canonically so parse -> serialize -> parse is the identity.
class Config {
public:
    struct Value {
        bool is_list = false;
        std::string scalar;
        std::vector<std::string> items;
    };

    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text);

    /// Applies a --set style override, value in the same syntax as a file.
    void set(const std::string& key, const std::string& raw);

    bool has(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::string require_string(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_double_list(const std::string& key,
                                        const std::vector<double>& fallback) const;
    std::vector<std::string> get_string_list(const std::string& key,
                                             const std::vector<std::string>& fallback) const;

    /// Canonical flat "key = value" form, keys sorted.
    std::string serialize() const;

    const std::map<std::string, Value>& entries() const { return entries_; }

private:
    std::map<std::string, Value> entries_;
};

/// Fully resolved experiment settings.
struct ExperimentConfig {
    // data
    std::string data_path;
    std::string dataset_name = "synthetic";
    std::string date_column = "date";
    std::vector<std::string> feature_columns;  // empty selects all
    RangeMode range_mode = RangeMode::zero_one;
    SplitRatios split_ratios;
    NormScope norm_scope = NormScope::window;
    double norm_epsilon = 1e-8;
    std::size_t stride = 1;

    // target distribution
    TargetDistSpec dist;
    std::size_t bins_k = 100;

    // model
    std::size_t ma_window = 25;
    HeadMode head = HeadMode::shared;
    double init_jitter = 1e-2;

    // training
    TrainConfig train;
    LossKind loss = LossKind::oce;

    // eval
    MetricNorm headline_norm = MetricNorm::per_element;

    // noise
    NoiseSpec noise;

    // sweeps
    std::vector<std::size_t> lookbacks{336};
    std::vector<std::size_t> horizons{96};
    std::vector<double> sigma_axis{0.001, 0.01, 0.1, 1.0};
    std::vector<std::size_t> bins_axis{30, 45, 75, 100};
    std::vector<std::string> family_axis{"truncated_gaussian", "student_t", "laplace"};
    std::vector<double> snr_axis{-3.0, 0.0, 3.0, 10.0, 20.0};
    std::vector<std::string> loss_axis{"ce", "oce"};

    // influence
    std::size_t influence_instances = 1000;

    // run
    std::string out_dir = "out";
    std::uint64_t seed = 42;
    bool deterministic = true;

    Config raw;  // resolved snapshot for the manifest

    static ExperimentConfig resolve(const Config& cfg);
    void validate() const;
};

/// Stable run identifier: hex FNV-1a of the canonical config text.
std::string config_hash(const Config& cfg);

extern const char* const kCodeVersion;

}  // namespace ocets

#endif

#include "ocets/config.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace ocets {

const char* const kCodeVersion = "0.1.0";

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
    bool in_quote = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_quote = !in_quote;
        if (line[i] == '#' && !in_quote) return line.substr(0, i);
    }
    return line;
}

std::string unquote(const std::string& raw) {
    const std::string s = trim(raw);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        std::string out;
        for (std::size_t i = 1; i + 1 < s.size(); ++i) {
            if (s[i] == '\\' && i + 2 < s.size() && (s[i + 1] == '"' || s[i + 1] == '\\')) {
                out += s[i + 1];
                ++i;
            } else {
                out += s[i];
            }
        }
        return out;
    }
    return s;
}

std::vector<std::string> split_list(const std::string& body) {
    std::vector<std::string> items;
    std::string cur;
    bool in_quote = false;
    for (char ch : body) {
        if (ch == '"') in_quote = !in_quote;
        if (ch == ',' && !in_quote) {
            if (!trim(cur).empty()) items.push_back(unquote(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!trim(cur).empty()) items.push_back(unquote(cur));
    return items;
}

bool looks_bare(const std::string& s) {
    if (s == "true" || s == "false") return true;
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && !s.empty();
}

std::string emit_scalar(const std::string& s) {
    if (looks_bare(s)) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"' || ch == '\\') out += '\\';
        out += ch;
    }
    out += '"';
    return out;
}

bool valid_key(const std::string& key) {
    if (key.empty()) return false;
    for (char ch : key)
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.'))
            return false;
    return true;
}

}  // namespace

Config Config::parse_string(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!valid_key(section))
                throw ConfigError("config line " + std::to_string(lineno) + ": bad section '" +
                                  section + "'");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        if (!section.empty()) key = section + "." + key;
        if (!valid_key(key))
            throw ConfigError("config line " + std::to_string(lineno) + ": bad key '" + key + "'");
        cfg.set(key, trim(line.substr(eq + 1)));
    }
    return cfg;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_string(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void Config::set(const std::string& key, const std::string& raw) {
    if (!valid_key(key)) throw ConfigError("bad config key '" + key + "'");
    const std::string v = trim(raw);
    Value val;
    if (!v.empty() && v.front() == '[') {
        if (v.back() != ']') throw ConfigError("key '" + key + "': unterminated list");
        val.is_list = true;
        val.items = split_list(v.substr(1, v.size() - 2));
    } else {
        val.scalar = unquote(v);
    }
    entries_[key] = std::move(val);
}

bool Config::has(const std::string& key) const {
    return entries_.count(key) > 0;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    if (it->second.is_list) throw ConfigError("key '" + key + "': expected scalar, got list");
    return it->second.scalar;
}

std::string Config::require_string(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end() || (!it->second.is_list && it->second.scalar.empty()))
        throw ConfigError("missing required config key '" + key + "'");
    if (it->second.is_list) throw ConfigError("key '" + key + "': expected scalar, got list");
    return it->second.scalar;
}

double Config::get_double(const std::string& key, double fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    if (it->second.is_list) throw ConfigError("key '" + key + "': expected number, got list");
    const std::string& s = it->second.scalar;
    if (s == "inf") return std::numeric_limits<double>::infinity();
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size())
        throw ConfigError("key '" + key + "': '" + s + "' is not a number");
    return v;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
    const double v = get_double(key, static_cast<double>(fallback));
    const auto i = static_cast<std::int64_t>(v);
    if (static_cast<double>(i) != v)
        throw ConfigError("key '" + key + "': expected integer");
    return i;
}

std::uint64_t Config::get_uint(const std::string& key, std::uint64_t fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    const std::int64_t v = get_int(key, 0);
    if (v < 0) throw ConfigError("key '" + key + "': expected nonnegative integer");
    return static_cast<std::uint64_t>(v);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    const std::string& s = it->second.scalar;
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError("key '" + key + "': expected true/false");
}

std::vector<double> Config::get_double_list(const std::string& key,
                                            const std::vector<double>& fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    const auto& val = it->second;
    std::vector<std::string> items =
        val.is_list ? val.items : std::vector<std::string>{val.scalar};
    std::vector<double> out;
    for (const auto& s : items) {
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (end != s.c_str() + s.size())
            throw ConfigError("key '" + key + "': '" + s + "' is not a number");
        out.push_back(v);
    }
    return out;
}

std::vector<std::string> Config::get_string_list(
    const std::string& key, const std::vector<std::string>& fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    const auto& val = it->second;
    return val.is_list ? val.items : std::vector<std::string>{val.scalar};
}

std::string Config::serialize() const {
    std::string out;
    for (const auto& [key, val] : entries_) {
        out += key;
        out += " = ";
        if (val.is_list) {
            out += "[";
            for (std::size_t i = 0; i < val.items.size(); ++i) {
                if (i) out += ", ";
                out += emit_scalar(val.items[i]);
            }
            out += "]";
        } else {
            out += emit_scalar(val.scalar);
        }
        out += "\n";
    }
    return out;
}

namespace {

std::vector<std::size_t> to_sizes(const std::vector<double>& v, const char* what) {
    std::vector<std::size_t> out;
    for (double d : v) {
        if (d < 1 || d != static_cast<double>(static_cast<std::size_t>(d)))
            throw ConfigError(std::string(what) + ": expected positive integers");
        out.push_back(static_cast<std::size_t>(d));
    }
    return out;
}

std::vector<double> from_sizes(const std::vector<std::size_t>& v) {
    std::vector<double> out;
    for (auto s : v) out.push_back(static_cast<double>(s));
    return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::resolve(const Config& cfg) {
    ExperimentConfig e;
    e.raw = cfg;

    e.data_path = cfg.get_string("data.path", "");
    if (!e.data_path.empty()) {
        std::size_t slash = e.data_path.find_last_of('/');
        std::string stem =
            slash == std::string::npos ? e.data_path : e.data_path.substr(slash + 1);
        std::size_t dot = stem.find_last_of('.');
        if (dot != std::string::npos) stem = stem.substr(0, dot);
        e.dataset_name = stem;
    }
    e.dataset_name = cfg.get_string("data.name", e.dataset_name);
    e.date_column = cfg.get_string("data.date_column", e.date_column);
    e.feature_columns = cfg.get_string_list("data.features", {});
    e.range_mode = parse_range_mode(cfg.get_string("data.range_mode", "zero_one"));
    const auto ratios = cfg.get_double_list("data.split", {0.6, 0.2, 0.2});
    if (ratios.size() != 3) throw ConfigError("data.split: expected three fractions");
    e.split_ratios = {ratios[0], ratios[1], ratios[2]};
    e.norm_scope = parse_norm_scope(cfg.get_string("data.norm_scope", "window"));
    e.norm_epsilon = cfg.get_double("data.epsilon", 1e-8);
    e.stride = static_cast<std::size_t>(cfg.get_uint("data.stride", 1));

    e.dist.family = parse_family(cfg.get_string("tpt.family", "truncated_gaussian"));
    e.dist.sigma = cfg.get_double("tpt.sigma", 0.01);
    e.dist.nu = cfg.get_double("tpt.nu", 5.0);
    e.bins_k = static_cast<std::size_t>(cfg.get_uint("tpt.k", 100));

    e.ma_window = static_cast<std::size_t>(cfg.get_uint("model.ma_window", 25));
    e.head = parse_head_mode(cfg.get_string("model.head", "shared"));
    e.init_jitter = cfg.get_double("model.init_jitter", 1e-2);

    e.train.batch_size = static_cast<std::size_t>(cfg.get_uint("train.batch_size", 32));
    e.train.epochs = static_cast<std::size_t>(cfg.get_uint("train.epochs", 15));
    e.train.lr = cfg.get_double("train.lr", 0.005);
    e.train.patience = static_cast<std::size_t>(cfg.get_uint("train.patience", 5));
    e.train.lr_decay = cfg.get_double("train.lr_decay", 0.5);
    e.train.shuffle = cfg.get_bool("train.shuffle", true);
    e.train.precompute_targets = cfg.get_bool("train.precompute_targets", false);

    e.loss = parse_loss_kind(cfg.get_string("loss.kind", "oce"));
    const std::string norm = cfg.get_string("eval.normalization", "per_element");
    if (norm == "per_element") e.headline_norm = MetricNorm::per_element;
    else if (norm == "per_horizon") e.headline_norm = MetricNorm::per_horizon;
    else throw ConfigError("eval.normalization: expected per_element or per_horizon");

    e.noise.enabled = cfg.get_bool("noise.enabled", false);
    e.noise.snr_db = cfg.get_double("noise.snr_db", 0.0);
    e.noise.seed = cfg.get_uint("noise.seed", 1234);

    e.lookbacks = to_sizes(cfg.get_double_list("sweep.lookbacks", from_sizes(e.lookbacks)),
                           "sweep.lookbacks");
    e.horizons = to_sizes(cfg.get_double_list("sweep.horizons", from_sizes(e.horizons)),
                          "sweep.horizons");
    e.sigma_axis = cfg.get_double_list("sweep.sigmas", e.sigma_axis);
    e.bins_axis = to_sizes(cfg.get_double_list("sweep.bins", from_sizes(e.bins_axis)),
                           "sweep.bins");
    e.family_axis = cfg.get_string_list("sweep.families", e.family_axis);
    e.snr_axis = cfg.get_double_list("sweep.snrs", e.snr_axis);
    e.loss_axis = cfg.get_string_list("sweep.losses", e.loss_axis);

    e.influence_instances =
        static_cast<std::size_t>(cfg.get_uint("influence.instances", 1000));

    e.out_dir = cfg.get_string("run.out", "out");
    e.seed = cfg.get_uint("run.seed", 42);
    e.deterministic = cfg.get_bool("run.deterministic", true);
    e.train.seed = e.seed;
    e.train.exec = Exec::parallel;

    e.validate();
    return e;
}

void ExperimentConfig::validate() const {
    if (lookbacks.empty() || horizons.empty())
        throw ConfigError("sweep.lookbacks and sweep.horizons must be non-empty");
    for (auto h : horizons)
        if (h < 1) throw ConfigError("sweep.horizons: must be >= 1");
    if (bins_k < 2) throw ConfigError("tpt.k: need at least 2 bins");
    if (!(dist.sigma > 0.0)) throw ConfigError("tpt.sigma: must be positive");
    if (!(dist.nu > 0.0)) throw ConfigError("tpt.nu: must be positive");
    if (ma_window % 2 == 0) throw ConfigError("model.ma_window: must be odd");
    train.validate();
    if (sigma_axis.empty() || bins_axis.empty() || family_axis.empty() || snr_axis.empty() ||
        loss_axis.empty())
        throw ConfigError("sweep axes must be non-empty");
    for (const auto& f : family_axis) parse_family(f);
    for (const auto& l : loss_axis) parse_loss_kind(l);
}

std::string config_hash(const Config& cfg) {
    const std::string text = cfg.serialize();
    std::uint64_t hash = 0xCBF29CE484222325ULL;
    for (unsigned char ch : text) {
        hash ^= ch;
        hash *= 0x100000001B3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return std::string(buf);
}

}  // namespace ocets

#include "ocets/model.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

namespace ocets {

HeadMode parse_head_mode(const std::string& name) {
    if (name == "shared") return HeadMode::shared;
    if (name == "joint") return HeadMode::joint;
    throw ConfigError("unknown head mode '" + name + "'");
}

std::string head_mode_name(HeadMode m) {
    return m == HeadMode::shared ? "shared" : "joint";
}

ModelParams init_params(std::size_t w, std::size_t h, std::size_t m, std::size_t k,
                        std::size_t ma_window, Rng& rng, double jitter, HeadMode head) {
    if (w < 1 || h < 1 || m < 1 || k < 1)
        throw InvalidParameter("init_params: shape arguments must be >= 1");
    if (ma_window % 2 == 0 || ma_window > w)
        throw InvalidParameter("init_params: ma_window must be odd and <= w");

    ModelParams p;
    p.w = w;
    p.h = h;
    p.m = m;
    p.k = k;
    p.ma_window = ma_window;
    p.head = head;
    p.w_t = Matrix(h, w);
    p.w_s = Matrix(h, w);
    p.w_o = Matrix(k, head == HeadMode::shared ? 1 : m);
    p.b_o.assign(k, 0.0);

    const double avg = 1.0 / static_cast<double>(w);
    for (auto& v : p.w_t.storage()) v = avg + (jitter > 0.0 ? rng.uniform(-jitter, jitter) : 0.0);
    for (auto& v : p.w_s.storage()) v = avg + (jitter > 0.0 ? rng.uniform(-jitter, jitter) : 0.0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(k));
    for (auto& v : p.w_o.storage()) v = rng.uniform(-bound, bound);
    return p;
}

void decompose(const Matrix& x, std::size_t ma_window, Matrix& trend, Matrix& seasonal) {
    const std::size_t w = x.rows();
    if (ma_window % 2 == 0 || ma_window < 1 || ma_window > w)
        throw InvalidParameter("decompose: ma_window must be odd and in [1, w]");
    trend = Matrix(w, x.cols());
    seasonal = Matrix(w, x.cols());
    const std::size_t half = (ma_window - 1) / 2;
    const double inv = 1.0 / static_cast<double>(ma_window);
    for (std::size_t c = 0; c < x.cols(); ++c) {
        for (std::size_t r = 0; r < w; ++r) {
            double acc = 0.0;
            for (std::size_t o = 0; o < ma_window; ++o) {
                // replicate padding at both ends
                const long long idx = static_cast<long long>(r) + static_cast<long long>(o) -
                                      static_cast<long long>(half);
                const std::size_t clamped =
                    idx < 0 ? 0
                            : (idx >= static_cast<long long>(w) ? w - 1
                                                                : static_cast<std::size_t>(idx));
                acc += x(clamped, c);
            }
            trend(r, c) = acc * inv;
            seasonal(r, c) = x(r, c) - trend(r, c);
        }
    }
}

Forecast forward(const ModelParams& params, const Matrix& x_norm) {
    if (x_norm.rows() != params.w || x_norm.cols() != params.m)
        throw InvalidDimension("forward: input shape mismatch");

    Matrix trend, seasonal;
    decompose(x_norm, params.ma_window, trend, seasonal);

    Forecast out;
    out.point = Matrix(params.h, params.m);
    for (std::size_t j = 0; j < params.h; ++j)
        for (std::size_t c = 0; c < params.m; ++c) {
            double acc = 0.0;
            for (std::size_t u = 0; u < params.w; ++u)
                acc += params.w_t(j, u) * trend(u, c) + params.w_s(j, u) * seasonal(u, c);
            out.point(j, c) = acc;
        }

    const std::size_t pc = params.prob_channels();
    out.probs.assign(params.h, std::vector<ProbVector>(pc));
    Vec logits(params.k);
    for (std::size_t j = 0; j < params.h; ++j) {
        if (params.head == HeadMode::shared) {
            for (std::size_t c = 0; c < params.m; ++c) {
                for (std::size_t kk = 0; kk < params.k; ++kk)
                    logits[kk] = params.w_o(kk, 0) * out.point(j, c) + params.b_o[kk];
                out.probs[j][c] = softmax(logits);
            }
        } else {
            for (std::size_t kk = 0; kk < params.k; ++kk) {
                double acc = params.b_o[kk];
                for (std::size_t c = 0; c < params.m; ++c)
                    acc += params.w_o(kk, c) * out.point(j, c);
                logits[kk] = acc;
            }
            out.probs[j][0] = softmax(logits);
        }
    }
    return out;
}

Vec param_vector(const ModelParams& params) {
    Vec v;
    v.reserve(params.w_t.size() + params.w_s.size() + params.w_o.size() + params.b_o.size());
    v.insert(v.end(), params.w_t.storage().begin(), params.w_t.storage().end());
    v.insert(v.end(), params.w_s.storage().begin(), params.w_s.storage().end());
    v.insert(v.end(), params.w_o.storage().begin(), params.w_o.storage().end());
    v.insert(v.end(), params.b_o.begin(), params.b_o.end());
    return v;
}

ModelParams load_param_vector(const ModelParams& shape, const Vec& v) {
    const std::size_t total =
        shape.w_t.size() + shape.w_s.size() + shape.w_o.size() + shape.b_o.size();
    if (v.size() != total)
        throw InvalidDimension("load_param_vector: expected " + std::to_string(total) +
                               " values, got " + std::to_string(v.size()));
    ModelParams out = shape;
    std::size_t pos = 0;
    for (auto& x : out.w_t.storage()) x = v[pos++];
    for (auto& x : out.w_s.storage()) x = v[pos++];
    for (auto& x : out.w_o.storage()) x = v[pos++];
    for (auto& x : out.b_o) x = v[pos++];
    return out;
}

void save_checkpoint(const ModelParams& params, const std::string& path) {
    nlohmann::json j;
    j["format"] = 1;
    j["w"] = params.w;
    j["h"] = params.h;
    j["m"] = params.m;
    j["k"] = params.k;
    j["ma_window"] = params.ma_window;
    j["head"] = head_mode_name(params.head);
    j["params"] = param_vector(params);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write checkpoint '" + path + "'");
    out << j.dump(2) << "\n";
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("checkpoint '" + path + "': " + e.what());
    }
    ModelParams shape;
    shape.w = j.at("w").get<std::size_t>();
    shape.h = j.at("h").get<std::size_t>();
    shape.m = j.at("m").get<std::size_t>();
    shape.k = j.at("k").get<std::size_t>();
    shape.ma_window = j.at("ma_window").get<std::size_t>();
    shape.head = parse_head_mode(j.at("head").get<std::string>());
    shape.w_t = Matrix(shape.h, shape.w);
    shape.w_s = Matrix(shape.h, shape.w);
    shape.w_o = Matrix(shape.k, shape.head == HeadMode::shared ? 1 : shape.m);
    shape.b_o.assign(shape.k, 0.0);
    return load_param_vector(shape, j.at("params").get<Vec>());
}

}  // namespace ocets

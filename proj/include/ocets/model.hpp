#ifndef OCETS_MODEL_HPP
#define OCETS_MODEL_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "ocets/matrix.hpp"
#include "ocets/numerics.hpp"
#include "ocets/rng.hpp"

namespace ocets {

/// Head layout. "shared" applies one scalar-to-K map to every (step, channel)
/// cell, which is the shape-consistent multivariate reading; "joint" keeps the
/// literal K x M head producing a single distribution per step.
enum class HeadMode { shared, joint };

HeadMode parse_head_mode(const std::string& name);
std::string head_mode_name(HeadMode m);

struct ModelParams {
    Matrix w_t;  // H x w trend projection
    Matrix w_s;  // H x w seasonal projection
    Matrix w_o;  // K x 1 (shared) or K x M (joint)
    Vec b_o;     // K

    std::size_t ma_window = 25;
    std::size_t w = 0;
    std::size_t h = 0;
    std::size_t m = 0;
    std::size_t k = 0;
    HeadMode head = HeadMode::shared;

    /// Channels of the probability grid: M for shared, 1 for joint.
    std::size_t prob_channels() const { return head == HeadMode::shared ? m : 1; }
};

/// Averaging-map init (1/w plus uniform jitter) for the projections, uniform
/// (-1/sqrt(K), 1/sqrt(K)) for the head, zero bias.
ModelParams init_params(std::size_t w, std::size_t h, std::size_t m, std::size_t k,
                        std::size_t ma_window, Rng& rng, double jitter = 1e-2,
                        HeadMode head = HeadMode::shared);

/// Centered moving average with replicate padding; seasonal = input - trend.
void decompose(const Matrix& x, std::size_t ma_window, Matrix& trend, Matrix& seasonal);

struct Forecast {
    Matrix point;                              // H x M, normalized space
    std::vector<std::vector<ProbVector>> probs;  // [h][prob_channels]
};

Forecast forward(const ModelParams& params, const Matrix& x_norm);

Vec param_vector(const ModelParams& params);
ModelParams load_param_vector(const ModelParams& shape, const Vec& v);

void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace ocets

#endif

#ifndef OCETS_TRAIN_HPP
#define OCETS_TRAIN_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ocets/data.hpp"
#include "ocets/loss.hpp"
#include "ocets/model.hpp"
#include "ocets/parallel.hpp"
#include "ocets/targetdist.hpp"

namespace ocets {

enum class NormScope { window, global };

NormScope parse_norm_scope(const std::string& name);
std::string norm_scope_name(NormScope s);

/// How raw windows become model inputs and encode-ready targets. Inputs are
/// normalized with their own lookback stats, targets with their own horizon
/// stats, so targets land inside the support by construction. The global
/// scope reuses one set of stats for everything (ablation only) and clamps
/// targets into the support.
struct PrepConfig {
    RangeMode mode = RangeMode::zero_one;
    double epsilon = 1e-8;
    NormScope scope = NormScope::window;
    NormStats global_stats;  // used when scope == global
    HeadMode head = HeadMode::shared;
};

struct TrainSample {
    Matrix x_norm;  // w x M
    Matrix y_norm;  // H x prob_channels, inside the support
};

TrainSample prepare_sample(const TimeWindow& window, const PrepConfig& prep);
std::vector<TrainSample> prepare_samples(const std::vector<TimeWindow>& windows,
                                         const PrepConfig& prep, Exec mode = Exec::parallel);

/// Gradient of the per-sample mean loss with respect to param_vector order.
/// The model is linear-then-softmax, so the chain is closed form: threshold
/// BCE derivative -> softmax Jacobian -> head -> projections.
Vec backward(const ModelParams& params, const Matrix& x_norm, const ProbGrid& target,
             LossKind kind = LossKind::oce, double* loss_out = nullptr);

/// Batch mean gradient over prepared samples; targets are encoded on the fly.
/// Fixed-slot reduction: bitwise identical across serial/parallel modes and
/// thread counts.
Vec backward_batch(const ModelParams& params, std::span<const TrainSample> samples,
                   const BinScheme& bins, const TargetDistSpec& dist, LossKind kind,
                   Exec mode = Exec::parallel, double* loss_out = nullptr);

/// Plain serial loop kept as the reference implementation for the kernel.
Vec backward_batch_reference(const ModelParams& params, std::span<const TrainSample> samples,
                             const BinScheme& bins, const TargetDistSpec& dist, LossKind kind,
                             double* loss_out = nullptr);

/// Mean objective over prepared samples (no gradient).
double evaluate_objective(const ModelParams& params, std::span<const TrainSample> samples,
                          const BinScheme& bins, const TargetDistSpec& dist, LossKind kind,
                          Exec mode = Exec::parallel);

struct AdamState {
    Vec m;
    Vec v;
    std::size_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

AdamState make_adam_state(std::size_t n_params);

/// Standard bias-corrected update, in place.
void adam_step(AdamState& state, Vec& params, const Vec& grad, double lr);

struct TrainConfig {
    std::size_t batch_size = 32;
    std::size_t epochs = 15;
    double lr = 0.005;
    std::size_t patience = 5;
    double lr_decay = 0.5;
    std::uint64_t seed = 42;
    bool shuffle = true;
    Exec exec = Exec::parallel;
    /// Encode every training target once up front instead of per batch;
    /// trades memory (N*H*C*K doubles) for speed. The result is bitwise
    /// identical either way.
    bool precompute_targets = false;

    void validate() const;
};

struct TrainReport {
    Vec train_loss;  // index 0 = at init, then one entry per epoch
    Vec val_loss;    // NaN entries when no validation set
    Vec lr_history;  // lr used during epoch e (parallel to epochs, offset 1)
    std::size_t best_epoch = 0;
    bool stopped_early = false;
    std::uint64_t params_checksum = 0;
    std::string lr_schedule = "halve lr after any epoch without validation improvement";
};

using EpochCallback =
    std::function<void(std::size_t epoch, const ModelParams& params, double train_loss,
                       double val_loss)>;

struct FitResult {
    ModelParams params;
    TrainReport report;
};

/// Training loop: seeded shuffling, batched analytic gradients, Adam,
/// validation-driven lr decay and early stopping with best-epoch restore.
FitResult fit(const ModelParams& init, const std::vector<TrainSample>& train_samples,
              const std::vector<TrainSample>& val_samples, const BinScheme& bins,
              const TargetDistSpec& dist, LossKind kind, const TrainConfig& cfg,
              const EpochCallback& on_epoch = {});

std::uint64_t params_checksum(const Vec& params);

}  // namespace ocets

#endif

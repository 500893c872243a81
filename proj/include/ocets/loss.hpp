#ifndef OCETS_LOSS_HPP
#define OCETS_LOSS_HPP

#include <cstddef>
#include <vector>

#include "ocets/numerics.hpp"
#include "ocets/parallel.hpp"

namespace ocets {

enum class LogBase { natural, base10 };
enum class LossKind { oce, ce };

LossKind parse_loss_kind(const std::string& name);
std::string loss_kind_name(LossKind k);

/// Floor applied to every log argument; keeps both losses finite and
/// nonnegative for valid probability inputs.
inline constexpr double kProbFloor = 1e-12;

/// Plain cross-entropy -sum p_k log q_k.
double ce(const ProbVector& p, const ProbVector& q, LogBase base = LogBase::natural);

/// Cumulative probabilities P(class <= k) for k = 1..K-1, clamped into
/// [kProbFloor, 1 - kProbFloor].
Vec cumsum_head(const ProbVector& q);

/// Ordinal cross-entropy: binary cross-entropy between the true and predicted
/// cumulative distributions summed over the K-1 thresholds. Soft true labels
/// are supported; hard labels are the indicator special case.
double oce(const ProbVector& p, const ProbVector& q, LogBase base = LogBase::natural);

/// Exact gradient of oce(p, softmax(logits)) with respect to the logits.
/// Thresholds whose cumulative hit the clamp contribute zero slope, matching
/// the clamped objective.
Vec oce_grad_logits(const ProbVector& p, const Vec& logits);
void oce_grad_logits_into(const double* p, const double* logits, std::size_t k, double* grad,
                          double* sigma_scratch);

/// Gradient of ce(p, softmax(logits)): sigma - p when p sums to one.
Vec ce_grad_logits(const ProbVector& p, const Vec& logits);
void ce_grad_logits_into(const double* p, const double* logits, std::size_t k, double* grad,
                         double* sigma_scratch);

/// One sample's targets/predictions laid out as [horizon][channel].
using ProbGrid = std::vector<std::vector<ProbVector>>;

/// Mean loss over samples, horizon steps and channels. Uses the fixed-slot
/// reduction, so serial and parallel modes agree bitwise.
double batch_objective(const std::vector<ProbGrid>& targets,
                       const std::vector<ProbGrid>& predictions, LossKind kind = LossKind::oce,
                       Exec mode = Exec::parallel);

/// Plain loop kept as the reference for the kernel above.
double batch_objective_reference(const std::vector<ProbGrid>& targets,
                                 const std::vector<ProbGrid>& predictions,
                                 LossKind kind = LossKind::oce);

}  // namespace ocets

#endif

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "advseg/core/maps.hpp"

namespace advseg {

/// Clamp for every log argument: log(clamp(x, kLogEps, 1)).
inline constexpr double kLogEps = 1e-8;

struct HyperParams {
  double lambda_adv_labeled = 0.01;
  double lambda_adv_unlabeled = 0.001;
  double lambda_semi = 0.1;
  double t_semi = 0.2;

  void validate() const;
  /// Any non-zero weight means the discriminator has to be trained.
  bool uses_discriminator() const {
    return lambda_adv_labeled > 0 || lambda_adv_unlabeled > 0 || lambda_semi > 0;
  }
  bool operator==(const HyperParams&) const = default;
};

/// Discriminator label: 0 for segmentation predictions, 1 for ground truth.
enum class DiscTarget : int { Prediction = 0, GroundTruth = 1 };

struct LossValue {
  double value = 0.0;
  std::size_t contributing_pixels = 0;
};

// Every loss below is the sum of per-pixel terms divided by the number of
// contributing pixels over the whole batch (0 when nothing contributes).
// When a gradient vector is passed, d(loss)/d(input) * scale is added to it;
// empty vectors are first sized to match the inputs.

/// Spatial binary cross entropy of the discriminator. Pixels set in
/// `ignore` are skipped; an empty ignore span means no pixel is skipped.
template <typename T>
LossValue loss_discriminator(std::span<const ConfidenceMap<T>> conf, DiscTarget target,
                             std::span<const BinaryMask> ignore,
                             std::vector<Planar<T>>* grad_conf = nullptr, T scale = T{1});

template <typename T>
LossValue loss_discriminator(const ConfidenceMap<T>& conf, DiscTarget target,
                             const BinaryMask& ignore);

/// Multi-class cross entropy; all-zero target pixels do not contribute.
template <typename T>
LossValue loss_ce(std::span<const ProbabilityMap<T>> prob, std::span<const OneHotMap<T>> target,
                  std::vector<Planar<T>>* grad_prob = nullptr, T scale = T{1});

template <typename T>
LossValue loss_ce(const ProbabilityMap<T>& prob, const OneHotMap<T>& target);

/// Gradient of loss_ce w.r.t. the pre-softmax logits, (p * sum(y) - y) / n,
/// accumulated into grad_logits. Unlike the probability-space gradient this
/// stays informative when a probability underflows below the log clamp.
template <typename T>
LossValue loss_ce_logit_grad(std::span<const ProbabilityMap<T>> prob,
                             std::span<const OneHotMap<T>> target,
                             std::vector<Planar<T>>& grad_logits, T scale = T{1});

/// Adversarial loss: mean of -log(conf) over all pixels.
template <typename T>
LossValue loss_adv(std::span<const ConfidenceMap<T>> conf,
                   std::vector<Planar<T>>* grad_conf = nullptr, T scale = T{1});

template <typename T>
LossValue loss_adv(const ConfidenceMap<T>& conf);

/// One-hot of the argmax prediction (ties to the smallest class).
template <typename T>
OneHotMap<T> build_self_taught_target(const ProbabilityMap<T>& prob);

/// Masked cross entropy against a frozen target and mask.
template <typename T>
LossValue loss_semi_masked(std::span<const ProbabilityMap<T>> prob,
                           std::span<const OneHotMap<T>> target, std::span<const BinaryMask> mask,
                           std::vector<Planar<T>>* grad_prob = nullptr, T scale = T{1});

/// Self-taught loss: mask = conf > t_semi and target = argmax(prob) are built
/// here and treated as constants, so the gradient equals the one obtained
/// with a frozen mask and target.
template <typename T>
LossValue loss_semi(std::span<const ProbabilityMap<T>> prob, std::span<const ConfidenceMap<T>> conf,
                    double t_semi, std::vector<Planar<T>>* grad_prob = nullptr, T scale = T{1});

template <typename T>
LossValue loss_semi(const ProbabilityMap<T>& prob, const ConfidenceMap<T>& conf, double t_semi);

/// Logit-space gradient of loss_semi (see loss_ce_logit_grad).
template <typename T>
LossValue loss_semi_logit_grad(std::span<const ProbabilityMap<T>> prob,
                               std::span<const ConfidenceMap<T>> conf, double t_semi,
                               std::vector<Planar<T>>& grad_logits, T scale = T{1});

/// Labeled: ce + lambda_adv_labeled * adv. Unlabeled:
/// lambda_adv_unlabeled * adv + lambda_semi * semi. Absent adversarial or
/// semi terms count as zero; a labeled batch without ce, a labeled batch with
/// semi, or an unlabeled batch with ce throws Contract.
LossValue loss_seg_total(const std::optional<LossValue>& l_ce, const std::optional<LossValue>& l_adv,
                         const std::optional<LossValue>& l_semi, const HyperParams& hp,
                         bool labeled);

}  // namespace advseg

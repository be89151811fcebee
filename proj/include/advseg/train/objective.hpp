#pragma once

#include <optional>
#include <span>
#include <vector>

#include "advseg/losses/losses.hpp"
#include "advseg/nn/discnet.hpp"
#include "advseg/nn/segnet.hpp"

namespace advseg {

/// Forward state of the segmentation objective on a labeled batch, kept so
/// the discriminator update can reuse the prediction and D(prediction).
template <typename T>
struct LabeledPass {
  std::vector<ProbabilityMap<T>> preds;
  std::vector<SegTape<T>> seg_tapes;
  std::vector<OneHotMap<T>> targets;
  std::vector<BinaryMask> ignores;
  std::vector<ConfidenceMap<T>> confs;
  std::vector<DiscTape<T>> disc_tapes;
  LossValue ce;
  std::optional<LossValue> adv;
  LossValue total;
};

template <typename T>
struct UnlabeledPass {
  std::vector<ProbabilityMap<T>> preds;
  std::vector<SegTape<T>> seg_tapes;
  std::vector<ConfidenceMap<T>> confs;
  std::vector<DiscTape<T>> disc_tapes;
  LossValue adv;
  LossValue semi;
  LossValue total;
};

/// ce + lambda_adv_labeled * adv on a labeled batch. `disc` null skips the
/// discriminator entirely. When `seg_grad` is non-null the segmentation
/// gradient is accumulated into it with the discriminator held fixed.
template <typename T>
LabeledPass<T> labeled_seg_pass(const NetParams<T>& seg, const SegNetConfig& seg_cfg,
                                const NetParams<T>* disc, const DiscNetConfig& disc_cfg,
                                std::span<const Image> images, std::span<const LabelMap> labels,
                                const HyperParams& hp, NetParams<T>* seg_grad);

/// Discriminator loss on a labeled batch: prediction term (y = 0, reusing
/// pass.confs and the prediction as a constant) plus ground-truth term
/// (y = 1). `pass.confs` must come from the same discriminator parameters.
/// With scale_alpha > 0 the ground truth is diffused by the scale scheme.
template <typename T>
LossValue disc_pass(const NetParams<T>& disc, const DiscNetConfig& disc_cfg,
                    const LabeledPass<T>& pass, double scale_alpha, NetParams<T>* disc_grad);

/// lambda_adv_unlabeled * adv + lambda_semi * semi on an unlabeled batch.
/// The confidence map is computed once and feeds both terms.
template <typename T>
UnlabeledPass<T> unlabeled_seg_pass(const NetParams<T>& seg, const SegNetConfig& seg_cfg,
                                    const NetParams<T>& disc, const DiscNetConfig& disc_cfg,
                                    std::span<const Image> images, const HyperParams& hp,
                                    NetParams<T>* seg_grad);

}  // namespace advseg

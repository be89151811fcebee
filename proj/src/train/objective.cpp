#include "advseg/train/objective.hpp"

#include "advseg/core/ops.hpp"
#include "advseg/nn/scale_scheme.hpp"

namespace advseg {

namespace {

// Discriminator input gradient for a per-pixel loss gradient on its output.
template <typename T>
std::vector<Planar<T>> through_disc(const NetParams<T>& disc, const DiscNetConfig& cfg,
                                    const std::vector<DiscTape<T>>& tapes,
                                    const std::vector<Planar<T>>& grad_conf) {
  std::vector<Planar<T>> out(tapes.size());
  for (std::size_t b = 0; b < tapes.size(); ++b)
    disc_backward(disc, cfg, tapes[b], grad_conf[b], static_cast<NetParams<T>*>(nullptr), &out[b]);
  return out;
}

template <typename T>
void forward_disc(const NetParams<T>& disc, const DiscNetConfig& cfg,
                  const std::vector<ProbabilityMap<T>>& preds, std::vector<ConfidenceMap<T>>& confs,
                  std::vector<DiscTape<T>>& tapes) {
  confs.clear();
  tapes.assign(preds.size(), {});
  for (std::size_t b = 0; b < preds.size(); ++b)
    confs.push_back(disc_confidence(disc, cfg, preds[b], &tapes[b]));
}

}  // namespace

template <typename T>
LabeledPass<T> labeled_seg_pass(const NetParams<T>& seg, const SegNetConfig& seg_cfg,
                                const NetParams<T>* disc, const DiscNetConfig& disc_cfg,
                                std::span<const Image> images, std::span<const LabelMap> labels,
                                const HyperParams& hp, NetParams<T>* seg_grad) {
  if (images.size() != labels.size()) throw Error(ErrorKind::Shape, "images/labels size mismatch");
  LabeledPass<T> pass;
  pass.seg_tapes.assign(images.size(), {});
  for (std::size_t b = 0; b < images.size(); ++b) {
    pass.preds.push_back(seg_forward(seg, seg_cfg, images[b], &pass.seg_tapes[b]));
    pass.targets.push_back(one_hot_encode<T>(labels[b], seg_cfg.class_count));
    pass.ignores.push_back(ignore_mask(labels[b]));
  }

  std::vector<Planar<T>> grad_logits;
  pass.ce = seg_grad ? loss_ce_logit_grad<T>(pass.preds, pass.targets, grad_logits)
                     : loss_ce<T>(pass.preds, pass.targets);

  std::vector<Planar<T>> grad_prob;
  if (disc) {
    forward_disc(*disc, disc_cfg, pass.preds, pass.confs, pass.disc_tapes);
    const bool adv_grad = seg_grad && hp.lambda_adv_labeled > 0;
    std::vector<Planar<T>> grad_conf;
    pass.adv = loss_adv<T>(pass.confs, adv_grad ? &grad_conf : nullptr,
                           static_cast<T>(hp.lambda_adv_labeled));
    if (adv_grad) grad_prob = through_disc(*disc, disc_cfg, pass.disc_tapes, grad_conf);
  }
  pass.total = loss_seg_total(pass.ce, pass.adv, std::nullopt, hp, true);

  if (seg_grad) {
    for (std::size_t b = 0; b < images.size(); ++b)
      seg_backward(seg, seg_cfg, pass.seg_tapes[b], grad_prob.empty() ? nullptr : &grad_prob[b],
                   &grad_logits[b], *seg_grad);
  }
  return pass;
}

template <typename T>
LossValue disc_pass(const NetParams<T>& disc, const DiscNetConfig& disc_cfg,
                    const LabeledPass<T>& pass, double scale_alpha, NetParams<T>* disc_grad) {
  if (pass.confs.size() != pass.preds.size()) {
    throw Error(ErrorKind::Contract, "disc_pass needs D(prediction) from labeled_seg_pass");
  }
  std::vector<Planar<T>> g_fake;
  const LossValue fake = loss_discriminator<T>(pass.confs, DiscTarget::Prediction, pass.ignores,
                                               disc_grad ? &g_fake : nullptr);
  if (disc_grad) {
    for (std::size_t b = 0; b < pass.confs.size(); ++b)
      disc_backward(disc, disc_cfg, pass.disc_tapes[b], g_fake[b], disc_grad,
                    static_cast<Planar<T>*>(nullptr));
  }

  std::vector<ConfidenceMap<T>> real_confs;
  std::vector<DiscTape<T>> real_tapes(pass.targets.size());
  for (std::size_t b = 0; b < pass.targets.size(); ++b) {
    if (scale_alpha > 0) {
      const ProbabilityMap<T> diffused = scale_scheme(pass.targets[b], pass.preds[b], scale_alpha);
      real_confs.push_back(disc_confidence(disc, disc_cfg, diffused, &real_tapes[b]));
    } else {
      real_confs.push_back(disc_confidence(disc, disc_cfg, pass.targets[b], &real_tapes[b]));
    }
  }
  std::vector<Planar<T>> g_real;
  const LossValue real = loss_discriminator<T>(real_confs, DiscTarget::GroundTruth, pass.ignores,
                                               disc_grad ? &g_real : nullptr);
  if (disc_grad) {
    for (std::size_t b = 0; b < real_confs.size(); ++b)
      disc_backward(disc, disc_cfg, real_tapes[b], g_real[b], disc_grad,
                    static_cast<Planar<T>*>(nullptr));
  }
  return {fake.value + real.value, fake.contributing_pixels + real.contributing_pixels};
}

template <typename T>
UnlabeledPass<T> unlabeled_seg_pass(const NetParams<T>& seg, const SegNetConfig& seg_cfg,
                                    const NetParams<T>& disc, const DiscNetConfig& disc_cfg,
                                    std::span<const Image> images, const HyperParams& hp,
                                    NetParams<T>* seg_grad) {
  UnlabeledPass<T> pass;
  pass.seg_tapes.assign(images.size(), {});
  for (std::size_t b = 0; b < images.size(); ++b)
    pass.preds.push_back(seg_forward(seg, seg_cfg, images[b], &pass.seg_tapes[b]));
  forward_disc(disc, disc_cfg, pass.preds, pass.confs, pass.disc_tapes);

  const bool adv_grad = seg_grad && hp.lambda_adv_unlabeled > 0;
  std::vector<Planar<T>> grad_conf;
  pass.adv = loss_adv<T>(pass.confs, adv_grad ? &grad_conf : nullptr,
                         static_cast<T>(hp.lambda_adv_unlabeled));
  std::vector<Planar<T>> grad_prob;
  if (adv_grad) grad_prob = through_disc(disc, disc_cfg, pass.disc_tapes, grad_conf);

  std::vector<Planar<T>> grad_logits;
  const bool semi_grad = seg_grad && hp.lambda_semi > 0;
  pass.semi = semi_grad ? loss_semi_logit_grad<T>(pass.preds, pass.confs, hp.t_semi, grad_logits,
                                                  static_cast<T>(hp.lambda_semi))
                        : loss_semi<T>(pass.preds, pass.confs, hp.t_semi);
  pass.total = loss_seg_total(std::nullopt, pass.adv, pass.semi, hp, false);

  if (seg_grad && (adv_grad || semi_grad)) {
    for (std::size_t b = 0; b < images.size(); ++b)
      seg_backward(seg, seg_cfg, pass.seg_tapes[b], grad_prob.empty() ? nullptr : &grad_prob[b],
                   grad_logits.empty() ? nullptr : &grad_logits[b], *seg_grad);
  }
  return pass;
}

#define ADVSEG_INSTANTIATE_OBJECTIVE(T)                                                          \
  template LabeledPass<T> labeled_seg_pass<T>(const NetParams<T>&, const SegNetConfig&,           \
                                              const NetParams<T>*, const DiscNetConfig&,          \
                                              std::span<const Image>, std::span<const LabelMap>,  \
                                              const HyperParams&, NetParams<T>*);                 \
  template LossValue disc_pass<T>(const NetParams<T>&, const DiscNetConfig&,                      \
                                  const LabeledPass<T>&, double, NetParams<T>*);                  \
  template UnlabeledPass<T> unlabeled_seg_pass<T>(const NetParams<T>&, const SegNetConfig&,       \
                                                  const NetParams<T>&, const DiscNetConfig&,      \
                                                  std::span<const Image>, const HyperParams&,     \
                                                  NetParams<T>*);

ADVSEG_INSTANTIATE_OBJECTIVE(float)
ADVSEG_INSTANTIATE_OBJECTIVE(double)

#undef ADVSEG_INSTANTIATE_OBJECTIVE

}  // namespace advseg

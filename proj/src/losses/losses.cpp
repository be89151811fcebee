#include "advseg/losses/losses.hpp"

#include <algorithm>
#include <cmath>

#include "advseg/core/ops.hpp"

namespace advseg {

void HyperParams::validate() const {
  if (lambda_adv_labeled < 0 || lambda_adv_unlabeled < 0 || lambda_semi < 0) {
    throw Error(ErrorKind::InvalidConfig, "loss weights must be >= 0");
  }
  if (!(t_semi >= 0.0 && t_semi <= 1.0)) {
    throw Error(ErrorKind::InvalidThreshold, "t_semi must lie in [0,1]");
  }
}

namespace {

template <typename T>
double clamped_log(T x) {
  return std::log(std::clamp(static_cast<double>(x), kLogEps, 1.0));
}

// d/dx log(clamp(x, eps, 1)); zero where the clamp is active.
template <typename T>
T clamped_log_grad(T x) {
  const double v = static_cast<double>(x);
  return (v >= kLogEps && v <= 1.0) ? T{1} / x : T{0};
}

template <typename T, typename Map>
void ensure_grad(std::vector<Planar<T>>* grad, std::span<const Map> like) {
  if (!grad) return;
  if (grad->empty()) {
    grad->reserve(like.size());
    for (const auto& m : like) grad->emplace_back(m.channels(), m.height(), m.width(), T{0});
    return;
  }
  if (grad->size() != like.size()) throw Error(ErrorKind::Shape, "gradient batch size mismatch");
  for (std::size_t i = 0; i < like.size(); ++i)
    if (!(*grad)[i].same_shape(like[i])) throw Error(ErrorKind::Shape, "gradient shape mismatch");
}

template <typename A, typename B>
void check_pairs(std::span<const A> a, std::span<const B> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::Shape, "batch size mismatch");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].height() != b[i].height() || a[i].width() != b[i].width())
      throw Error(ErrorKind::Shape, "spatial size mismatch");
}

LossValue finish(double sum, std::size_t n) {
  return n == 0 ? LossValue{0.0, 0} : LossValue{sum / static_cast<double>(n), n};
}

}  // namespace

template <typename T>
LossValue loss_discriminator(std::span<const ConfidenceMap<T>> conf, DiscTarget target,
                             std::span<const BinaryMask> ignore, std::vector<Planar<T>>* grad_conf,
                             T scale) {
  if (!ignore.empty()) check_pairs(conf, ignore);
  ensure_grad(grad_conf, conf);
  const bool real = target == DiscTarget::GroundTruth;
  auto skipped = [&](std::size_t b, int h, int w) {
    return !ignore.empty() && ignore[b].at(h, w) != 0;
  };
  std::size_t n = 0;
  double sum = 0.0;
  for (std::size_t b = 0; b < conf.size(); ++b)
    for (int h = 0; h < conf[b].height(); ++h)
      for (int w = 0; w < conf[b].width(); ++w) {
        if (skipped(b, h, w)) continue;
        const T d = conf[b].at(h, w);
        sum -= real ? clamped_log(d) : clamped_log(T{1} - d);
        ++n;
      }
  if (grad_conf && n > 0) {
    const T k = scale / static_cast<T>(n);
    for (std::size_t b = 0; b < conf.size(); ++b)
      for (int h = 0; h < conf[b].height(); ++h)
        for (int w = 0; w < conf[b].width(); ++w) {
          if (skipped(b, h, w)) continue;
          const T d = conf[b].at(h, w);
          (*grad_conf)[b].at(0, h, w) +=
              real ? -k * clamped_log_grad(d) : k * clamped_log_grad(T{1} - d);
        }
  }
  return finish(sum, n);
}

template <typename T>
LossValue loss_discriminator(const ConfidenceMap<T>& conf, DiscTarget target,
                             const BinaryMask& ignore) {
  return loss_discriminator<T>(std::span(&conf, 1), target, std::span(&ignore, 1));
}

template <typename T>
LossValue loss_ce(std::span<const ProbabilityMap<T>> prob, std::span<const OneHotMap<T>> target,
                  std::vector<Planar<T>>* grad_prob, T scale) {
  check_pairs(prob, target);
  ensure_grad(grad_prob, prob);
  std::size_t n = 0;
  double sum = 0.0;
  for (std::size_t b = 0; b < prob.size(); ++b) {
    if (prob[b].channels() != target[b].channels())
      throw Error(ErrorKind::Shape, "class count mismatch");
    const std::size_t px = prob[b].plane_size();
    for (std::size_t i = 0; i < px; ++i) {
      bool any = false;
      for (int c = 0; c < prob[b].channels(); ++c) {
        const T y = target[b].plane(c)[i];
        if (y != T{0}) {
          sum -= static_cast<double>(y) * clamped_log(prob[b].plane(c)[i]);
          any = true;
        }
      }
      n += any;
    }
  }
  if (grad_prob && n > 0) {
    const T k = scale / static_cast<T>(n);
    for (std::size_t b = 0; b < prob.size(); ++b)
      for (int c = 0; c < prob[b].channels(); ++c) {
        const T* p = prob[b].plane(c);
        const T* y = target[b].plane(c);
        T* g = (*grad_prob)[b].plane(c);
        for (std::size_t i = 0; i < prob[b].plane_size(); ++i)
          if (y[i] != T{0}) g[i] -= k * y[i] * clamped_log_grad(p[i]);
      }
  }
  return finish(sum, n);
}

template <typename T>
LossValue loss_ce(const ProbabilityMap<T>& prob, const OneHotMap<T>& target) {
  return loss_ce<T>(std::span(&prob, 1), std::span(&target, 1));
}

template <typename T>
LossValue loss_ce_logit_grad(std::span<const ProbabilityMap<T>> prob,
                             std::span<const OneHotMap<T>> target,
                             std::vector<Planar<T>>& grad_logits, T scale) {
  const LossValue lv = loss_ce<T>(prob, target);
  ensure_grad(&grad_logits, prob);
  if (lv.contributing_pixels == 0) return lv;
  const T k = scale / static_cast<T>(lv.contributing_pixels);
  for (std::size_t b = 0; b < prob.size(); ++b) {
    const int cc = prob[b].channels();
    for (std::size_t i = 0; i < prob[b].plane_size(); ++i) {
      T mass{0};
      for (int c = 0; c < cc; ++c) mass += target[b].plane(c)[i];
      if (mass == T{0}) continue;
      for (int c = 0; c < cc; ++c)
        grad_logits[b].plane(c)[i] += k * (prob[b].plane(c)[i] * mass - target[b].plane(c)[i]);
    }
  }
  return lv;
}

template <typename T>
LossValue loss_adv(std::span<const ConfidenceMap<T>> conf, std::vector<Planar<T>>* grad_conf,
                   T scale) {
  return loss_discriminator<T>(conf, DiscTarget::GroundTruth, {}, grad_conf, scale);
}

template <typename T>
LossValue loss_adv(const ConfidenceMap<T>& conf) {
  return loss_adv<T>(std::span(&conf, 1));
}

template <typename T>
OneHotMap<T> build_self_taught_target(const ProbabilityMap<T>& prob) {
  return one_hot_encode<T>(argmax_labels(prob), prob.channels());
}

template <typename T>
LossValue loss_semi_masked(std::span<const ProbabilityMap<T>> prob,
                           std::span<const OneHotMap<T>> target, std::span<const BinaryMask> mask,
                           std::vector<Planar<T>>* grad_prob, T scale) {
  check_pairs(prob, target);
  check_pairs(prob, mask);
  ensure_grad(grad_prob, prob);
  std::size_t n = 0;
  double sum = 0.0;
  for (std::size_t b = 0; b < prob.size(); ++b)
    for (int h = 0; h < prob[b].height(); ++h)
      for (int w = 0; w < prob[b].width(); ++w) {
        if (!mask[b].at(h, w)) continue;
        bool any = false;
        for (int c = 0; c < prob[b].channels(); ++c) {
          const T y = target[b].at(c, h, w);
          if (y != T{0}) {
            sum -= static_cast<double>(y) * clamped_log(prob[b].at(c, h, w));
            any = true;
          }
        }
        n += any;
      }
  if (grad_prob && n > 0) {
    const T k = scale / static_cast<T>(n);
    for (std::size_t b = 0; b < prob.size(); ++b)
      for (int h = 0; h < prob[b].height(); ++h)
        for (int w = 0; w < prob[b].width(); ++w) {
          if (!mask[b].at(h, w)) continue;
          for (int c = 0; c < prob[b].channels(); ++c) {
            const T y = target[b].at(c, h, w);
            if (y != T{0}) (*grad_prob)[b].at(c, h, w) -= k * y * clamped_log_grad(prob[b].at(c, h, w));
          }
        }
  }
  return finish(sum, n);
}

namespace {

template <typename T>
void frozen_semi_inputs(std::span<const ProbabilityMap<T>> prob,
                        std::span<const ConfidenceMap<T>> conf, double t_semi,
                        std::vector<OneHotMap<T>>& targets, std::vector<BinaryMask>& masks) {
  check_pairs(prob, conf);
  targets.clear();
  masks.clear();
  for (std::size_t b = 0; b < prob.size(); ++b) {
    targets.push_back(build_self_taught_target(prob[b]));
    masks.push_back(threshold_mask(conf[b], t_semi));
  }
}

}  // namespace

template <typename T>
LossValue loss_semi(std::span<const ProbabilityMap<T>> prob, std::span<const ConfidenceMap<T>> conf,
                    double t_semi, std::vector<Planar<T>>* grad_prob, T scale) {
  std::vector<OneHotMap<T>> targets;
  std::vector<BinaryMask> masks;
  frozen_semi_inputs(prob, conf, t_semi, targets, masks);
  return loss_semi_masked<T>(prob, targets, masks, grad_prob, scale);
}

template <typename T>
LossValue loss_semi(const ProbabilityMap<T>& prob, const ConfidenceMap<T>& conf, double t_semi) {
  return loss_semi<T>(std::span(&prob, 1), std::span(&conf, 1), t_semi);
}

template <typename T>
LossValue loss_semi_logit_grad(std::span<const ProbabilityMap<T>> prob,
                               std::span<const ConfidenceMap<T>> conf, double t_semi,
                               std::vector<Planar<T>>& grad_logits, T scale) {
  std::vector<OneHotMap<T>> targets;
  std::vector<BinaryMask> masks;
  frozen_semi_inputs(prob, conf, t_semi, targets, masks);
  const LossValue lv = loss_semi_masked<T>(prob, targets, masks);
  ensure_grad(&grad_logits, prob);
  if (lv.contributing_pixels == 0) return lv;
  const T k = scale / static_cast<T>(lv.contributing_pixels);
  for (std::size_t b = 0; b < prob.size(); ++b)
    for (int h = 0; h < prob[b].height(); ++h)
      for (int w = 0; w < prob[b].width(); ++w) {
        if (!masks[b].at(h, w)) continue;
        for (int c = 0; c < prob[b].channels(); ++c)
          grad_logits[b].at(c, h, w) += k * (prob[b].at(c, h, w) - targets[b].at(c, h, w));
      }
  return lv;
}

LossValue loss_seg_total(const std::optional<LossValue>& l_ce, const std::optional<LossValue>& l_adv,
                         const std::optional<LossValue>& l_semi, const HyperParams& hp,
                         bool labeled) {
  const double adv = l_adv ? l_adv->value : 0.0;
  if (labeled) {
    if (!l_ce) throw Error(ErrorKind::Contract, "labeled batch needs a cross-entropy term");
    if (l_semi) throw Error(ErrorKind::Contract, "labeled batch must not carry a semi term");
    return {l_ce->value + hp.lambda_adv_labeled * adv, l_ce->contributing_pixels};
  }
  if (l_ce) throw Error(ErrorKind::Contract, "unlabeled batch cannot carry a cross-entropy term");
  const double semi = l_semi ? l_semi->value : 0.0;
  const std::size_t n = l_semi ? l_semi->contributing_pixels : (l_adv ? l_adv->contributing_pixels : 0);
  return {hp.lambda_adv_unlabeled * adv + hp.lambda_semi * semi, n};
}

#define ADVSEG_INSTANTIATE_LOSSES(T)                                                             \
  template LossValue loss_discriminator<T>(std::span<const ConfidenceMap<T>>, DiscTarget,         \
                                           std::span<const BinaryMask>, std::vector<Planar<T>>*, \
                                           T);                                                   \
  template LossValue loss_discriminator<T>(const ConfidenceMap<T>&, DiscTarget,                   \
                                           const BinaryMask&);                                   \
  template LossValue loss_ce<T>(std::span<const ProbabilityMap<T>>, std::span<const OneHotMap<T>>, \
                                std::vector<Planar<T>>*, T);                                     \
  template LossValue loss_ce<T>(const ProbabilityMap<T>&, const OneHotMap<T>&);                  \
  template LossValue loss_ce_logit_grad<T>(std::span<const ProbabilityMap<T>>,                    \
                                           std::span<const OneHotMap<T>>,                        \
                                           std::vector<Planar<T>>&, T);                          \
  template LossValue loss_adv<T>(std::span<const ConfidenceMap<T>>, std::vector<Planar<T>>*, T);  \
  template LossValue loss_adv<T>(const ConfidenceMap<T>&);                                       \
  template OneHotMap<T> build_self_taught_target<T>(const ProbabilityMap<T>&);                   \
  template LossValue loss_semi_masked<T>(std::span<const ProbabilityMap<T>>,                      \
                                         std::span<const OneHotMap<T>>,                          \
                                         std::span<const BinaryMask>, std::vector<Planar<T>>*,   \
                                         T);                                                     \
  template LossValue loss_semi<T>(std::span<const ProbabilityMap<T>>,                             \
                                  std::span<const ConfidenceMap<T>>, double,                     \
                                  std::vector<Planar<T>>*, T);                                   \
  template LossValue loss_semi<T>(const ProbabilityMap<T>&, const ConfidenceMap<T>&, double);    \
  template LossValue loss_semi_logit_grad<T>(std::span<const ProbabilityMap<T>>,                  \
                                             std::span<const ConfidenceMap<T>>, double,          \
                                             std::vector<Planar<T>>&, T);

ADVSEG_INSTANTIATE_LOSSES(float)
ADVSEG_INSTANTIATE_LOSSES(double)

#undef ADVSEG_INSTANTIATE_LOSSES

}  // namespace advseg

#include "advseg/train/optim.hpp"

#include <cmath>

namespace advseg {

void sgd_step(NetParams<float>& params, const NetParams<float>& grads, SgdState& state,
              const SgdOptions& opt) {
  if (!params.same_layout(grads)) throw Error(ErrorKind::Shape, "gradient layout mismatch");
  if (!state.momentum.same_layout(params)) state.momentum = params.zeros_like();
  const float lr = static_cast<float>(opt.lr);
  const float mu = static_cast<float>(opt.momentum);
  const float wd = static_cast<float>(opt.weight_decay);
  for (std::size_t a = 0; a < params.arrays.size(); ++a) {
    auto& p = params[a].values;
    const auto& g = grads[a].values;
    auto& buf = state.momentum[a].values;
    for (std::size_t i = 0; i < p.size(); ++i) {
      float d = g[i] + wd * p[i];
      buf[i] = mu * buf[i] + d;
      d = opt.nesterov ? d + mu * buf[i] : buf[i];
      p[i] -= lr * d;
    }
  }
}

void adam_step(NetParams<float>& params, const NetParams<float>& grads, AdamState& state,
               const AdamOptions& opt) {
  if (!params.same_layout(grads)) throw Error(ErrorKind::Shape, "gradient layout mismatch");
  if (!state.m.same_layout(params)) {
    state.m = params.zeros_like();
    state.v = params.zeros_like();
    state.step = 0;
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const float b1 = static_cast<float>(opt.beta1);
  const float b2 = static_cast<float>(opt.beta2);
  const float corr1 = static_cast<float>(1.0 - std::pow(opt.beta1, t));
  const float corr2_sqrt = static_cast<float>(std::sqrt(1.0 - std::pow(opt.beta2, t)));
  const float step_size = static_cast<float>(opt.lr) / corr1;
  const float eps = static_cast<float>(opt.eps);
  for (std::size_t a = 0; a < params.arrays.size(); ++a) {
    auto& p = params[a].values;
    const auto& g = grads[a].values;
    auto& m = state.m[a].values;
    auto& v = state.v[a].values;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0f - b1) * g[i];
      v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
      p[i] -= step_size * m[i] / (std::sqrt(v[i]) / corr2_sqrt + eps);
    }
  }
}

}  // namespace advseg

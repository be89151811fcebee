#pragma once

#include <cstdint>

#include "advseg/nn/params.hpp"

namespace advseg {

/// SGD with (optionally Nesterov) momentum and L2 weight decay:
///   d = g + wd * p;  buf = mu * buf + d;  d = nesterov ? d + mu * buf : buf;
///   p -= lr * d
struct SgdState {
  NetParams<float> momentum;
};

struct SgdOptions {
  double lr = 0.0;
  double momentum = 0.9;
  double weight_decay = 0.0;
  bool nesterov = true;
};

void sgd_step(NetParams<float>& params, const NetParams<float>& grads, SgdState& state,
              const SgdOptions& opt);

/// Adam with bias correction.
struct AdamState {
  NetParams<float> m;
  NetParams<float> v;
  std::int64_t step = 0;
};

struct AdamOptions {
  double lr = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

void adam_step(NetParams<float>& params, const NetParams<float>& grads, AdamState& state,
               const AdamOptions& opt);

}  // namespace advseg

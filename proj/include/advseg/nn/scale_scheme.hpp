#pragma once

#include "advseg/core/maps.hpp"

namespace advseg {

/// Diffuses a one-hot target towards the prediction:
/// (1 - alpha) * onehot + alpha * prob. alpha = 0 returns the one-hot map.
/// Ignored (all-zero) pixels stay all-zero.
template <typename T>
ProbabilityMap<T> scale_scheme(const OneHotMap<T>& onehot, const ProbabilityMap<T>& prob,
                               double alpha);

}  // namespace advseg

#pragma once

#include <functional>
#include <vector>

#include "advseg/nn/params.hpp"

namespace advseg {

/// Returns f(theta) and, when `grad` is non-null, writes df/dtheta into it.
using FlatObjective = std::function<double(const std::vector<double>&, std::vector<double>*)>;
using ParamObjective = std::function<double(const NetParams<double>&, NetParams<double>*)>;

/// |a - b| / max(|a|, |b|, 1e-12).
double relative_error(double a, double b);

/// Max relative error between the analytic gradient and central differences
/// (f(x + h) - f(x - h)) / 2h over all coordinates. Throws NonFinite if any
/// evaluation is not finite. An empty parameter vector gives 0.
///
/// `step` is the largest h tried. When an evaluation at x +- h takes a
/// different activation branch than x somewhere (see nn::SignTrace), h is
/// divided by 4, up to 8 times, and the last difference is used.
double grad_check(const FlatObjective& f, const std::vector<double>& theta, double step);

double grad_check(const ParamObjective& f, const NetParams<double>& params, double step);

/// Same, restricted to `count` coordinates spread evenly over the vector
/// (all of them when count >= size); keeps checks on larger nets fast.
double grad_check_sampled(const ParamObjective& f, const NetParams<double>& params, double step,
                          std::size_t count);

/// Up to `per_array` coordinates spread evenly inside every parameter array,
/// so small arrays such as biases are always represented.
double grad_check_per_array(const ParamObjective& f, const NetParams<double>& params, double step,
                            std::size_t per_array);

}  // namespace advseg

#include "advseg/eval/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "advseg/nn/layers.hpp"

namespace advseg {

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

namespace {

double checked(double v) {
  if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "objective is not finite");
  return v;
}

struct Probe {
  double value;
  std::uint64_t pattern;
};

Probe probe(const FlatObjective& f, const std::vector<double>& x) {
  nn::SignTrace& trace = nn::sign_trace();
  const nn::SignTrace saved = trace;
  trace = {true, 0xcbf29ce484222325ULL};
  Probe p{};
  try {
    p.value = checked(f(x, nullptr));
  } catch (...) {
    trace = saved;
    throw;
  }
  p.pattern = trace.hash;
  trace = saved;
  return p;
}

// A step that moves some unit across an activation kink measures a blend of
// two slopes; shrink it until both sides stay on the piece containing theta.
constexpr int kMaxShrinks = 8;
constexpr double kShrink = 4.0;

double check_indices(const FlatObjective& f, const std::vector<double>& theta, double step,
                     const std::vector<std::size_t>& indices) {
  if (indices.empty()) return 0.0;
  std::vector<double> grad(theta.size(), 0.0);
  checked(f(theta, &grad));
  const std::uint64_t centre = probe(f, theta).pattern;
  std::vector<double> x = theta;
  double worst = 0.0;
  for (std::size_t i : indices) {
    double h = step;
    double numeric = 0.0;
    for (int k = 0; k <= kMaxShrinks; ++k, h /= kShrink) {
      x[i] = theta[i] + h;
      const Probe fp = probe(f, x);
      x[i] = theta[i] - h;
      const Probe fm = probe(f, x);
      x[i] = theta[i];
      numeric = (fp.value - fm.value) / (2.0 * h);
      if (fp.pattern == centre && fm.pattern == centre) break;
    }
    if (!std::isfinite(grad[i])) throw Error(ErrorKind::NonFinite, "gradient is not finite");
    worst = std::max(worst, relative_error(grad[i], numeric));
  }
  return worst;
}

FlatObjective flatten_objective(const ParamObjective& f, const NetParams<double>& params) {
  return [&f, &params](const std::vector<double>& x, std::vector<double>* grad) {
    NetParams<double> p = params;
    p.unflatten(x);
    if (!grad) return f(p, nullptr);
    NetParams<double> g = p.zeros_like();
    const double v = f(p, &g);
    *grad = g.flatten();
    return v;
  };
}

}  // namespace

double grad_check(const FlatObjective& f, const std::vector<double>& theta, double step) {
  std::vector<std::size_t> all(theta.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return check_indices(f, theta, step, all);
}

double grad_check(const ParamObjective& f, const NetParams<double>& params, double step) {
  return grad_check(flatten_objective(f, params), params.flatten(), step);
}

double grad_check_sampled(const ParamObjective& f, const NetParams<double>& params, double step,
                          std::size_t count) {
  const std::size_t n = params.total_size();
  std::vector<std::size_t> idx;
  if (count >= n) {
    for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
  } else {
    for (std::size_t k = 0; k < count; ++k) idx.push_back(k * n / count + (n / count) / 2);
  }
  return check_indices(flatten_objective(f, params), params.flatten(), step, idx);
}

double grad_check_per_array(const ParamObjective& f, const NetParams<double>& params, double step,
                            std::size_t per_array) {
  std::vector<std::size_t> idx;
  std::size_t offset = 0;
  for (const auto& a : params.arrays) {
    const std::size_t n = a.size();
    const std::size_t k = std::min(n, per_array);
    for (std::size_t j = 0; j < k; ++j) idx.push_back(offset + j * n / k + (n / k) / 2);
    offset += n;
  }
  return check_indices(flatten_objective(f, params), params.flatten(), step, idx);
}

}  // namespace advseg

#include "advseg/nn/scale_scheme.hpp"

namespace advseg {

template <typename T>
ProbabilityMap<T> scale_scheme(const OneHotMap<T>& onehot, const ProbabilityMap<T>& prob,
                               double alpha) {
  if (!onehot.same_shape(prob)) throw Error(ErrorKind::Shape, "scale scheme shape mismatch");
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "scale alpha must be in [0,1]");
  }
  ProbabilityMap<T> out(onehot.channels(), onehot.height(), onehot.width());
  if (alpha == 0.0) {
    std::copy(onehot.data(), onehot.data() + onehot.size(), out.data());
    return out;
  }
  const T a = static_cast<T>(alpha);
  const std::size_t n = onehot.plane_size();
  for (std::size_t i = 0; i < n; ++i) {
    T mass{0};
    for (int c = 0; c < onehot.channels(); ++c) mass += onehot.plane(c)[i];
    for (int c = 0; c < onehot.channels(); ++c)
      out.plane(c)[i] = mass > T{0} ? (T{1} - a) * onehot.plane(c)[i] + a * prob.plane(c)[i] : T{0};
  }
  return out;
}

template ProbabilityMap<float> scale_scheme<float>(const OneHotMap<float>&,
                                                   const ProbabilityMap<float>&, double);
template ProbabilityMap<double> scale_scheme<double>(const OneHotMap<double>&,
                                                     const ProbabilityMap<double>&, double);

}  // namespace advseg

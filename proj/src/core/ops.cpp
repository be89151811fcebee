#include "advseg/core/ops.hpp"

#include <string>

namespace advseg {

namespace {

struct Tap {
  int lo;
  int hi;
  double frac;
};

// Corner-aligned source coordinates: output endpoints land on input endpoints.
std::vector<Tap> resize_taps(int in_size, int out_size) {
  std::vector<Tap> taps(static_cast<std::size_t>(out_size));
  for (int o = 0; o < out_size; ++o) {
    const double src = (out_size > 1 && in_size > 1)
                           ? static_cast<double>(o) * (in_size - 1) / (out_size - 1)
                           : 0.0;
    int lo = static_cast<int>(src);
    if (lo > in_size - 1) lo = in_size - 1;
    const int hi = lo + 1 < in_size ? lo + 1 : lo;
    taps[static_cast<std::size_t>(o)] = {lo, hi, src - lo};
  }
  return taps;
}

}  // namespace

template <typename T>
OneHotMap<T> one_hot_encode(const LabelMap& labels, int class_count) {
  if (class_count < 1) throw Error(ErrorKind::InvalidConfig, "class count must be >= 1");
  OneHotMap<T> out(class_count, labels.height(), labels.width(), T{0});
  for (int h = 0; h < labels.height(); ++h) {
    for (int w = 0; w < labels.width(); ++w) {
      const std::uint8_t v = labels.at(h, w);
      if (v == kIgnoreLabel) continue;
      if (v >= class_count) {
        throw Error(ErrorKind::InvalidLabel, "label " + std::to_string(v) + " at (" +
                                                 std::to_string(h) + "," + std::to_string(w) +
                                                 ") >= class count " +
                                                 std::to_string(class_count));
      }
      out.at(v, h, w) = T{1};
    }
  }
  return out;
}

template <typename T>
LabelMap argmax_labels(const ProbabilityMap<T>& prob) {
  const int hh = prob.height();
  const int ww = prob.width();
  const int cc = prob.channels();
  LabelMap out(hh, ww, cc);
  const std::size_t n = prob.plane_size();
  auto labels = out.values();
  for (std::size_t i = 0; i < n; ++i) {
    int best = 0;
    T best_v = prob.plane(0)[i];
    for (int c = 1; c < cc; ++c) {
      const T v = prob.plane(c)[i];
      if (v > best_v) {
        best_v = v;
        best = c;
      }
    }
    labels[i] = static_cast<std::uint8_t>(best);
  }
  return out;
}

template <typename T>
BinaryMask threshold_mask(const ConfidenceMap<T>& conf, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorKind::InvalidThreshold, "threshold " + std::to_string(threshold) +
                                                 " outside [0,1]");
  }
  BinaryMask mask(conf.height(), conf.width());
  for (int h = 0; h < conf.height(); ++h)
    for (int w = 0; w < conf.width(); ++w)
      mask.at(h, w) = static_cast<double>(conf.at(h, w)) > threshold ? 1 : 0;
  return mask;
}

template <typename T>
Planar<T> bilinear_resize(const Planar<T>& in, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw Error(ErrorKind::Shape, "resize target must be >= 1x1");
  if (in.height() < 1 || in.width() < 1) throw Error(ErrorKind::Shape, "resize of empty map");
  if (in.height() == out_h && in.width() == out_w) return in;
  const auto ty = resize_taps(in.height(), out_h);
  const auto tx = resize_taps(in.width(), out_w);
  Planar<T> out(in.channels(), out_h, out_w);
  const int iw = in.width();
  for (int c = 0; c < in.channels(); ++c) {
    const T* src = in.plane(c);
    T* dst = out.plane(c);
    for (int y = 0; y < out_h; ++y) {
      const Tap& a = ty[static_cast<std::size_t>(y)];
      const T fy = static_cast<T>(a.frac);
      const T* r0 = src + static_cast<std::size_t>(a.lo) * iw;
      const T* r1 = src + static_cast<std::size_t>(a.hi) * iw;
      for (int x = 0; x < out_w; ++x) {
        const Tap& b = tx[static_cast<std::size_t>(x)];
        const T fx = static_cast<T>(b.frac);
        // Lerp form keeps constants exact: a + f * (a - a) == a.
        const T top = r0[b.lo] + fx * (r0[b.hi] - r0[b.lo]);
        const T bot = r1[b.lo] + fx * (r1[b.hi] - r1[b.lo]);
        dst[static_cast<std::size_t>(y) * out_w + x] = top + fy * (bot - top);
      }
    }
  }
  return out;
}

template <typename T>
Planar<T> bilinear_resize_backward(const Planar<T>& grad_out, int in_h, int in_w) {
  const int out_h = grad_out.height();
  const int out_w = grad_out.width();
  if (in_h == out_h && in_w == out_w) return grad_out;
  const auto ty = resize_taps(in_h, out_h);
  const auto tx = resize_taps(in_w, out_w);
  Planar<T> grad_in(grad_out.channels(), in_h, in_w, T{0});
  for (int c = 0; c < grad_out.channels(); ++c) {
    const T* g = grad_out.plane(c);
    T* dst = grad_in.plane(c);
    for (int y = 0; y < out_h; ++y) {
      const Tap& a = ty[static_cast<std::size_t>(y)];
      const T fy = static_cast<T>(a.frac);
      T* r0 = dst + static_cast<std::size_t>(a.lo) * in_w;
      T* r1 = dst + static_cast<std::size_t>(a.hi) * in_w;
      for (int x = 0; x < out_w; ++x) {
        const Tap& b = tx[static_cast<std::size_t>(x)];
        const T fx = static_cast<T>(b.frac);
        const T v = g[static_cast<std::size_t>(y) * out_w + x];
        const T top = v * (T{1} - fy);
        const T bot = v * fy;
        r0[b.lo] += top * (T{1} - fx);
        r0[b.hi] += top * fx;
        r1[b.lo] += bot * (T{1} - fx);
        r1[b.hi] += bot * fx;
      }
    }
  }
  return grad_in;
}

template <typename T>
ProbabilityMap<T> bilinear_resize(const ProbabilityMap<T>& in, int out_h, int out_w) {
  ProbabilityMap<T> out(bilinear_resize(static_cast<const Planar<T>&>(in), out_h, out_w));
  if (in.height() == out_h && in.width() == out_w) return out;
  const std::size_t n = out.plane_size();
  for (std::size_t i = 0; i < n; ++i) {
    T sum{0};
    for (int c = 0; c < out.channels(); ++c) sum += out.plane(c)[i];
    if (sum > T{0} && sum != T{1}) {
      for (int c = 0; c < out.channels(); ++c) out.plane(c)[i] /= sum;
    }
  }
  return out;
}

template <typename T>
ConfidenceMap<T> bilinear_resize(const ConfidenceMap<T>& in, int out_h, int out_w) {
  return ConfidenceMap<T>(bilinear_resize(static_cast<const Planar<T>&>(in), out_h, out_w));
}

#define ADVSEG_INSTANTIATE_OPS(T)                                                       \
  template OneHotMap<T> one_hot_encode<T>(const LabelMap&, int);                        \
  template LabelMap argmax_labels<T>(const ProbabilityMap<T>&);                         \
  template BinaryMask threshold_mask<T>(const ConfidenceMap<T>&, double);               \
  template Planar<T> bilinear_resize<T>(const Planar<T>&, int, int);                    \
  template Planar<T> bilinear_resize_backward<T>(const Planar<T>&, int, int);           \
  template ProbabilityMap<T> bilinear_resize<T>(const ProbabilityMap<T>&, int, int);    \
  template ConfidenceMap<T> bilinear_resize<T>(const ConfidenceMap<T>&, int, int);

ADVSEG_INSTANTIATE_OPS(float)
ADVSEG_INSTANTIATE_OPS(double)

#undef ADVSEG_INSTANTIATE_OPS

}  // namespace advseg

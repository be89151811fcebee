#include "advseg/nn/layers.hpp"

#include <Eigen/Core>
#include <cmath>

namespace advseg::nn {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
void im2col(const ConvSpec& s, const Planar<T>& in, int oh, int ow, T* col) {
  const int ih = in.height();
  const int iw = in.width();
  const std::size_t p = static_cast<std::size_t>(oh) * ow;
  for (int c = 0; c < s.in_channels; ++c) {
    const T* src = in.plane(c);
    for (int kh = 0; kh < s.kernel; ++kh) {
      for (int kw = 0; kw < s.kernel; ++kw) {
        T* row = col + (static_cast<std::size_t>(c * s.kernel + kh) * s.kernel + kw) * p;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * s.stride - s.padding + kh * s.dilation;
          T* dst = row + static_cast<std::size_t>(oy) * ow;
          if (iy < 0 || iy >= ih) {
            std::fill(dst, dst + ow, T{0});
            continue;
          }
          const T* srow = src + static_cast<std::size_t>(iy) * iw;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * s.stride - s.padding + kw * s.dilation;
            dst[ox] = (ix >= 0 && ix < iw) ? srow[ix] : T{0};
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const ConvSpec& s, const T* col, int oh, int ow, Planar<T>& out) {
  const int ih = out.height();
  const int iw = out.width();
  const std::size_t p = static_cast<std::size_t>(oh) * ow;
  out.fill(T{0});
  for (int c = 0; c < s.in_channels; ++c) {
    T* dst = out.plane(c);
    for (int kh = 0; kh < s.kernel; ++kh) {
      for (int kw = 0; kw < s.kernel; ++kw) {
        const T* row = col + (static_cast<std::size_t>(c * s.kernel + kh) * s.kernel + kw) * p;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * s.stride - s.padding + kh * s.dilation;
          if (iy < 0 || iy >= ih) continue;
          T* drow = dst + static_cast<std::size_t>(iy) * iw;
          const T* srow = row + static_cast<std::size_t>(oy) * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * s.stride - s.padding + kw * s.dilation;
            if (ix >= 0 && ix < iw) drow[ix] += srow[ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Planar<T> conv2d_forward(const ConvSpec& spec, const T* weight, const T* bias,
                         const Planar<T>& input, std::vector<T>* col) {
  if (input.channels() != spec.in_channels) {
    throw Error(ErrorKind::ConfigMismatch, "conv input has " + std::to_string(input.channels()) +
                                               " channels, expected " +
                                               std::to_string(spec.in_channels));
  }
  const int oh = spec.out_size(input.height());
  const int ow = spec.out_size(input.width());
  if (oh < 1 || ow < 1) throw Error(ErrorKind::InputTooSmall, "conv output would be empty");
  const auto k = static_cast<Eigen::Index>(spec.fan_in());
  const auto p = static_cast<Eigen::Index>(oh) * ow;

  std::vector<T> local;
  std::vector<T>& buf = col ? *col : local;
  buf.resize(static_cast<std::size_t>(k * p));
  im2col(spec, input, oh, ow, buf.data());

  Planar<T> out(spec.out_channels, oh, ow);
  Eigen::Map<const RowMat<T>> w(weight, spec.out_channels, k);
  Eigen::Map<const RowMat<T>> c(buf.data(), k, p);
  Eigen::Map<RowMat<T>> o(out.data(), spec.out_channels, p);
  o.noalias() = w * c;
  if (bias) {
    for (int oc = 0; oc < spec.out_channels; ++oc) o.row(oc).array() += bias[oc];
  }
  return out;
}

template <typename T>
void conv2d_backward(const ConvSpec& spec, const T* weight, int in_h, int in_w,
                     const std::vector<T>& col, const Planar<T>& grad_out, T* grad_weight,
                     T* grad_bias, Planar<T>* grad_input) {
  const int oh = grad_out.height();
  const int ow = grad_out.width();
  const auto k = static_cast<Eigen::Index>(spec.fan_in());
  const auto p = static_cast<Eigen::Index>(oh) * ow;
  Eigen::Map<const RowMat<T>> g(grad_out.data(), spec.out_channels, p);

  if (grad_weight) {
    Eigen::Map<const RowMat<T>> c(col.data(), k, p);
    Eigen::Map<RowMat<T>> gw(grad_weight, spec.out_channels, k);
    gw.noalias() += g * c.transpose();
  }
  if (grad_bias) {
    // Plain loop: Eigen's reductions peel by address, which makes the
    // rounding depend on where the buffer happens to be allocated.
    for (int oc = 0; oc < spec.out_channels; ++oc) {
      const T* row = grad_out.plane(oc);
      T s{0};
      for (Eigen::Index i = 0; i < p; ++i) s += row[i];
      grad_bias[oc] += s;
    }
  }
  if (grad_input) {
    Eigen::Map<const RowMat<T>> w(weight, spec.out_channels, k);
    RowMat<T> gcol(k, p);
    gcol.noalias() = w.transpose() * g;
    *grad_input = Planar<T>(spec.in_channels, in_h, in_w);
    col2im(spec, gcol.data(), oh, ow, *grad_input);
  }
}

SignTrace& sign_trace() {
  thread_local SignTrace trace;
  return trace;
}

template <typename T>
void leaky_relu_inplace(Planar<T>& x, T slope) {
  SignTrace& trace = sign_trace();
  if (trace.enabled) {
    std::uint64_t h = trace.hash;
    for (const T& v : x.values()) h = (h ^ static_cast<std::uint64_t>(v > T{0})) * 0x100000001b3ULL;
    trace.hash = h;
  }
  for (T& v : x.values())
    if (v < T{0}) v *= slope;
}

template <typename T>
void leaky_relu_backward_inplace(const Planar<T>& act, Planar<T>& grad, T slope) {
  const T* a = act.data();
  T* g = grad.data();
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!(a[i] > T{0})) g[i] *= slope;
}

template <typename T>
T sigmoid(T z) {
  if (z >= T{0}) return T{1} / (T{1} + std::exp(-z));
  const T e = std::exp(z);
  return e / (T{1} + e);
}

template <typename T>
Planar<T> softmax_channels(const Planar<T>& logits) {
  Planar<T> out(logits.channels(), logits.height(), logits.width());
  const std::size_t n = logits.plane_size();
  const int cc = logits.channels();
  for (std::size_t i = 0; i < n; ++i) {
    T m = logits.plane(0)[i];
    for (int c = 1; c < cc; ++c) m = std::max(m, logits.plane(c)[i]);
    T sum{0};
    for (int c = 0; c < cc; ++c) {
      const T e = std::exp(logits.plane(c)[i] - m);
      out.plane(c)[i] = e;
      sum += e;
    }
    for (int c = 0; c < cc; ++c) out.plane(c)[i] /= sum;
  }
  return out;
}

template <typename T>
Planar<T> softmax_backward(const Planar<T>& prob, const Planar<T>& grad_prob) {
  Planar<T> out(prob.channels(), prob.height(), prob.width());
  const std::size_t n = prob.plane_size();
  const int cc = prob.channels();
  for (std::size_t i = 0; i < n; ++i) {
    T dot{0};
    for (int c = 0; c < cc; ++c) dot += grad_prob.plane(c)[i] * prob.plane(c)[i];
    for (int c = 0; c < cc; ++c)
      out.plane(c)[i] = prob.plane(c)[i] * (grad_prob.plane(c)[i] - dot);
  }
  return out;
}

#define ADVSEG_INSTANTIATE_LAYERS(T)                                                         \
  template Planar<T> conv2d_forward<T>(const ConvSpec&, const T*, const T*, const Planar<T>&, \
                                       std::vector<T>*);                                      \
  template void conv2d_backward<T>(const ConvSpec&, const T*, int, int, const std::vector<T>&, \
                                   const Planar<T>&, T*, T*, Planar<T>*);                     \
  template void leaky_relu_inplace<T>(Planar<T>&, T);                                         \
  template void leaky_relu_backward_inplace<T>(const Planar<T>&, Planar<T>&, T);              \
  template T sigmoid<T>(T);                                                                   \
  template Planar<T> softmax_channels<T>(const Planar<T>&);                                   \
  template Planar<T> softmax_backward<T>(const Planar<T>&, const Planar<T>&);

ADVSEG_INSTANTIATE_LAYERS(float)
ADVSEG_INSTANTIATE_LAYERS(double)

#undef ADVSEG_INSTANTIATE_LAYERS

}  // namespace advseg::nn

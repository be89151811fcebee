#pragma once

#include <cstdint>

#include <vector>

#include "advseg/core/maps.hpp"

namespace advseg::nn {

struct ConvSpec {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  int padding = 0;
  int dilation = 1;

  int out_size(int in) const { return (in + 2 * padding - dilation * (kernel - 1) - 1) / stride + 1; }
  int fan_in() const { return in_channels * kernel * kernel; }
};

/// im2col + GEMM convolution. `weight` is (out, in, k, k) row-major, `bias`
/// has `out` entries. When `col` is non-null the unfolded input is stored
/// there for the backward pass.
template <typename T>
Planar<T> conv2d_forward(const ConvSpec& spec, const T* weight, const T* bias,
                         const Planar<T>& input, std::vector<T>* col);

/// Accumulates into grad_weight / grad_bias when non-null and writes the input
/// gradient into grad_input when non-null.
template <typename T>
void conv2d_backward(const ConvSpec& spec, const T* weight, int in_h, int in_w,
                     const std::vector<T>& col, const Planar<T>& grad_out, T* grad_weight,
                     T* grad_bias, Planar<T>* grad_input);

template <typename T>
void leaky_relu_inplace(Planar<T>& x, T slope);

/// While `enabled`, every activation call folds the branch taken by each unit
/// into `hash`. Two evaluations with equal hashes ran on the same linear piece
/// of every activation; gradient checks use this to spot steps across a kink.
/// One trace per thread.
struct SignTrace {
  bool enabled = false;
  std::uint64_t hash = 0;
};
SignTrace& sign_trace();

/// grad *= (act > 0 ? 1 : slope); `act` is the activation output.
template <typename T>
void leaky_relu_backward_inplace(const Planar<T>& act, Planar<T>& grad, T slope);

template <typename T>
T sigmoid(T z);

/// Channel-wise softmax at every pixel.
template <typename T>
Planar<T> softmax_channels(const Planar<T>& logits);

/// Gradient w.r.t. logits given the softmax output and the gradient w.r.t.
/// the probabilities.
template <typename T>
Planar<T> softmax_backward(const Planar<T>& prob, const Planar<T>& grad_prob);

}  // namespace advseg::nn

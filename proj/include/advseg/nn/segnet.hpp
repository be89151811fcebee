#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advseg/core/maps.hpp"
#include "advseg/nn/layers.hpp"
#include "advseg/nn/params.hpp"

namespace advseg {

/// Desk-scale dilated segmentation network: a stride-2 stem, four 3x3
/// convolution blocks and a pyramid head of parallel dilated 3x3
/// classifiers whose logits are summed. The backbone reaches output stride 8
/// and keeps that resolution in the dilated blocks; logits are upsampled to
/// the input size before the softmax.
struct SegNetConfig {
  static constexpr int kOutputStride = 8;

  int class_count = 4;
  int base_channels = 32;
  int stem_stride = 2;
  std::vector<int> block_strides{2, 2, 1, 1};
  std::vector<int> block_dilations{1, 1, 2, 4};
  std::vector<int> pyramid_dilations{1, 2, 4};

  void validate() const;
  std::vector<nn::ConvSpec> backbone_layers() const;
  std::vector<nn::ConvSpec> head_layers() const;

  std::string to_text() const;
  static SegNetConfig from_text(const std::string& text);
  bool operator==(const SegNetConfig&) const = default;
};

template <typename T>
struct SegTape {
  int in_h = 0;
  int in_w = 0;
  std::vector<std::vector<T>> backbone_cols;
  std::vector<Planar<T>> backbone_acts;
  std::vector<std::vector<T>> head_cols;
  Planar<T> logits;  // low resolution
  ProbabilityMap<T> prob;
};

template <typename T = float>
NetParams<T> init_params(const SegNetConfig& cfg, std::uint64_t seed);

/// Throws InputTooSmall when H or W is below the output stride and
/// ConfigMismatch when the parameter layout does not match the config.
template <typename T>
ProbabilityMap<T> seg_forward(const NetParams<T>& params, const SegNetConfig& cfg,
                              const Image& image, SegTape<T>* tape = nullptr);

/// Accumulates parameter gradients. `grad_prob` is the loss gradient w.r.t.
/// the output probabilities; `grad_logits` (optional) is an extra gradient
/// w.r.t. the full-resolution pre-softmax logits, which the trainer uses for
/// the fused softmax cross-entropy path.
template <typename T>
void seg_backward(const NetParams<T>& params, const SegNetConfig& cfg, const SegTape<T>& tape,
                  const Planar<T>* grad_prob, const Planar<T>* grad_logits, NetParams<T>& grads);

}  // namespace advseg

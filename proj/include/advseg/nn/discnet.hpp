#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advseg/core/maps.hpp"
#include "advseg/nn/layers.hpp"
#include "advseg/nn/params.hpp"

namespace advseg {

/// Discriminator recipe: five 4x4 stride-2 convolutions (padding 1) with
/// Leaky-ReLU after the first four, no normalization. The fully
/// convolutional variant applies a sigmoid to the last map and upsamples it
/// to the input size; the global variant replaces the last convolution with
/// a dense layer over a fixed input size.
struct DiscNetConfig {
  static constexpr int kMinInput = 32;

  int class_count = 4;
  std::vector<int> channels{64, 128, 256, 512, 1};
  int kernel = 4;
  int stride = 2;
  int padding = 1;
  double leaky_slope = 0.2;
  bool fully_convolutional = true;
  /// Input size baked into the dense layer of the global variant.
  int input_height = 0;
  int input_width = 0;

  void validate() const;
  std::vector<nn::ConvSpec> conv_layers() const;
  /// Dense input width of the global variant.
  int dense_inputs() const;

  std::string to_text() const;
  static DiscNetConfig from_text(const std::string& text);
  bool operator==(const DiscNetConfig&) const = default;
};

template <typename T>
struct DiscTape {
  int in_h = 0;
  int in_w = 0;
  std::vector<std::vector<T>> cols;
  std::vector<Planar<T>> acts;
  Planar<T> sig;  // fully convolutional: sigmoid of the last map
  T global_prob{};
};

template <typename T = float>
NetParams<T> init_params(const DiscNetConfig& cfg, std::uint64_t seed);

/// Fully convolutional discriminator. `input` is a probability or one-hot map
/// with class_count channels, at least 32x32.
template <typename T>
ConfidenceMap<T> disc_forward(const NetParams<T>& params, const DiscNetConfig& cfg,
                              const Planar<T>& input, DiscTape<T>* tape = nullptr);

/// Global (image-level) discriminator used by the ablation.
template <typename T>
T disc_forward_global(const NetParams<T>& params, const DiscNetConfig& cfg,
                      const Planar<T>& input, DiscTape<T>* tape = nullptr);

/// Dispatches on cfg.fully_convolutional; the global variant's scalar is
/// broadcast over the input grid.
template <typename T>
ConfidenceMap<T> disc_confidence(const NetParams<T>& params, const DiscNetConfig& cfg,
                                 const Planar<T>& input, DiscTape<T>* tape = nullptr);

/// Backward pass for disc_confidence. `grads` and `grad_input` may be null.
template <typename T>
void disc_backward(const NetParams<T>& params, const DiscNetConfig& cfg, const DiscTape<T>& tape,
                   const Planar<T>& grad_conf, NetParams<T>* grads, Planar<T>* grad_input);

}  // namespace advseg

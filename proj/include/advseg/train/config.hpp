#pragma once

#include <cstdint>
#include <string>

#include "advseg/data/augment.hpp"
#include "advseg/losses/losses.hpp"
#include "advseg/nn/discnet.hpp"
#include "advseg/nn/segnet.hpp"

namespace advseg {

/// Everything a training run depends on. Serialized as `key = value` text
/// (see to_text); unknown keys are rejected on load.
struct TrainConfig {
  std::int64_t max_iterations = 20000;
  int batch_size = 10;
  double seg_lr0 = 2.5e-4;
  double disc_lr0 = 1e-4;
  double momentum = 0.9;
  bool nesterov = true;
  double weight_decay = 1e-4;
  double poly_power = 0.9;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::int64_t warm_up_iterations = 5000;
  HyperParams hp;
  /// Scale scheme for the discriminator's ground-truth input; 0 disables it.
  double scale_alpha = 0.0;
  std::uint64_t seed = 0;
  std::int64_t checkpoint_every = 0;  // 0: only the final checkpoint
  bool deterministic = true;
  bool augment = true;
  AugmentConfig augmentation;
  SegNetConfig seg;
  DiscNetConfig disc;

  /// 20k iterations, batch 10, 321x321 crops with random scaling.
  static TrainConfig pascal_style();
  /// 40k iterations, batch 2, full 512x1024 frames without scaling.
  static TrainConfig cityscapes_style();
  /// CPU-sized schedule: 2000 iterations, warm-up 500, batch 8, 64x64 crops.
  static TrainConfig desk();

  void validate() const;
  std::string to_text() const;
  static TrainConfig from_text(const std::string& text);
  bool operator==(const TrainConfig&) const = default;
};

TrainConfig load_train_config(const std::string& path);

}  // namespace advseg

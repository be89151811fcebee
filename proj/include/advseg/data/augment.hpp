#pragma once

#include <cstdint>

#include "advseg/data/dataset.hpp"

namespace advseg {

struct AugmentConfig {
  int crop_h = 321;
  int crop_w = 321;
  double scale_min = 0.5;
  double scale_max = 1.5;
  bool enable_scale = true;

  void validate() const;
  bool operator==(const AugmentConfig&) const = default;
};

/// Random scale (bilinear for the image, nearest for labels) followed by a
/// random crop. Regions outside the scaled image are zero in the image and
/// kIgnoreLabel in the label.
Sample augment(const Sample& sample, const AugmentConfig& cfg, std::uint64_t seed);

}  // namespace advseg

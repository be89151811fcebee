#include "advseg/data/augment.hpp"

#include <algorithm>
#include <cmath>

#include "advseg/core/ops.hpp"
#include "advseg/core/rng.hpp"

namespace advseg {

void AugmentConfig::validate() const {
  if (crop_h < 1 || crop_w < 1) throw Error(ErrorKind::InvalidConfig, "crop dims must be >= 1");
  if (!(scale_min > 0.0 && scale_min <= scale_max)) {
    throw Error(ErrorKind::InvalidConfig, "need 0 < scale_min <= scale_max");
  }
}

namespace {

int nearest_source(int o, int in_size, int out_size) {
  if (out_size <= 1 || in_size <= 1) return 0;
  const double src = static_cast<double>(o) * (in_size - 1) / (out_size - 1);
  return std::min(in_size - 1, static_cast<int>(std::lround(src)));
}

LabelMap resize_nearest(const LabelMap& in, int out_h, int out_w) {
  LabelMap out(out_h, out_w, in.class_count());
  for (int y = 0; y < out_h; ++y) {
    const int sy = nearest_source(y, in.height(), out_h);
    for (int x = 0; x < out_w; ++x) out.at(y, x) = in.at(sy, nearest_source(x, in.width(), out_w));
  }
  return out;
}

}  // namespace

Sample augment(const Sample& sample, const AugmentConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  Image image = sample.image;
  std::optional<LabelMap> label = sample.label;

  if (cfg.enable_scale) {
    const double s = rng.uniform(cfg.scale_min, cfg.scale_max);
    const int h = std::max(1, static_cast<int>(std::lround(image.height() * s)));
    const int w = std::max(1, static_cast<int>(std::lround(image.width() * s)));
    if (h != image.height() || w != image.width()) {
      image = Image(bilinear_resize(static_cast<const Planar<float>&>(image), h, w));
      if (label) label = resize_nearest(*label, h, w);
    }
  }

  // Pad (zeros / ignore) up to the crop, then take a random window.
  const int ph = std::max(image.height(), cfg.crop_h);
  const int pw = std::max(image.width(), cfg.crop_w);
  const int oy = static_cast<int>(rng.uniform_int(0, ph - cfg.crop_h));
  const int ox = static_cast<int>(rng.uniform_int(0, pw - cfg.crop_w));

  Sample out;
  out.id = sample.id;
  out.image = Image(cfg.crop_h, cfg.crop_w, 0.0f);
  if (label) out.label = LabelMap(cfg.crop_h, cfg.crop_w, label->class_count(), kIgnoreLabel);
  for (int y = 0; y < cfg.crop_h; ++y) {
    const int sy = y + oy;
    if (sy >= image.height()) break;
    for (int x = 0; x < cfg.crop_w; ++x) {
      const int sx = x + ox;
      if (sx >= image.width()) break;
      for (int c = 0; c < 3; ++c) out.image.at(c, y, x) = image.at(c, sy, sx);
      if (label) out.label->at(y, x) = label->at(sy, sx);
    }
  }
  return out;
}

}  // namespace advseg

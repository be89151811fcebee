#pragma once

// Small random generators shared by the property tests.

#include <cstdint>

#include "advseg/core/maps.hpp"
#include "advseg/core/rng.hpp"

namespace advseg::test {

inline LabelMap random_labels(Rng& rng, int h, int w, int c, double ignore_p = 0.0) {
  LabelMap m(h, w, c);
  for (auto& v : m.values()) {
    v = rng.uniform() < ignore_p ? kIgnoreLabel : static_cast<std::uint8_t>(rng.uniform_int(0, c - 1));
  }
  return m;
}

template <typename T>
ProbabilityMap<T> random_prob(Rng& rng, int c, int h, int w, double sharpness = 1.0) {
  ProbabilityMap<T> p(c, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double sum = 0;
      for (int k = 0; k < c; ++k) {
        const double v = std::exp(sharpness * rng.normal());
        p.at(k, y, x) = static_cast<T>(v);
        sum += v;
      }
      for (int k = 0; k < c; ++k) p.at(k, y, x) = static_cast<T>(p.at(k, y, x) / sum);
    }
  }
  return p;
}

template <typename T>
ConfidenceMap<T> random_conf(Rng& rng, int h, int w) {
  ConfidenceMap<T> m(h, w);
  for (auto& v : m.values()) v = static_cast<T>(rng.uniform(0.001, 0.999));
  return m;
}

inline Image random_image(Rng& rng, int h, int w) {
  Image img(h, w);
  for (auto& v : img.values()) v = static_cast<float>(rng.uniform());
  return img;
}

}  // namespace advseg::test

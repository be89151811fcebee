#include "advseg/core/maps.hpp"

#include <cmath>
#include <string>

namespace advseg {

Image::Image(Planar<float> p) : Planar<float>(std::move(p)) {
  if (channels() != 3) throw Error(ErrorKind::Shape, "image must have 3 channels");
}

void Image::validate() const {
  if (height() < 1 || width() < 1) throw Error(ErrorKind::InvalidInput, "empty image");
  for (float v : values()) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw Error(ErrorKind::InvalidInput, "image value outside [0,1]");
    }
  }
}

LabelMap::LabelMap(int height, int width, int class_count, std::uint8_t fill)
    : height_(height),
      width_(width),
      class_count_(class_count),
      labels_(static_cast<std::size_t>(height) * width, fill) {}

LabelMap::LabelMap(int height, int width, int class_count, std::vector<std::uint8_t> labels)
    : height_(height), width_(width), class_count_(class_count), labels_(std::move(labels)) {
  if (labels_.size() != static_cast<std::size_t>(height) * width) {
    throw Error(ErrorKind::Shape, "label buffer does not match dimensions");
  }
}

void LabelMap::validate() const {
  for (std::uint8_t v : labels_) {
    if (v != kIgnoreLabel && v >= class_count_) {
      throw Error(ErrorKind::InvalidLabel,
                  "label " + std::to_string(v) + " >= class count " +
                      std::to_string(class_count_));
    }
  }
}

template <typename T>
bool ProbabilityMap<T>::is_normalized(double tol) const {
  const std::size_t n = this->plane_size();
  const int c_count = this->channels();
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int c = 0; c < c_count; ++c) {
      const double v = this->plane(c)[i];
      if (!(v >= 0.0 && v <= 1.0)) return false;
      sum += v;
    }
    if (std::abs(sum - 1.0) > tol) return false;
  }
  return true;
}

template <typename T>
ConfidenceMap<T>::ConfidenceMap(Planar<T> p) : Planar<T>(std::move(p)) {
  if (this->channels() != 1) throw Error(ErrorKind::Shape, "confidence map must be 1-channel");
}

std::size_t BinaryMask::count() const noexcept {
  std::size_t n = 0;
  for (auto v : mask_) n += v;
  return n;
}

BinaryMask ignore_mask(const LabelMap& labels) {
  BinaryMask m(labels.height(), labels.width());
  for (int h = 0; h < labels.height(); ++h)
    for (int w = 0; w < labels.width(); ++w) m.at(h, w) = labels.at(h, w) == kIgnoreLabel;
  return m;
}

template class ProbabilityMap<float>;
template class ProbabilityMap<double>;
template class ConfidenceMap<float>;
template class ConfidenceMap<double>;

}  // namespace advseg

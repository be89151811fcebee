#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "advseg/core/error.hpp"

namespace advseg {

inline constexpr std::uint8_t kIgnoreLabel = 255;

/// Dense channel-major (C x H x W) array. All spatial maps in the library are
/// stored this way; `at(c, h, w)` is the only indexing convention.
template <typename T>
class Planar {
 public:
  using value_type = T;

  Planar() = default;
  Planar(int channels, int height, int width, T fill = T{})
      : channels_(channels),
        height_(height),
        width_(width),
        data_(static_cast<std::size_t>(channels) * height * width, fill) {
    if (channels < 0 || height < 0 || width < 0) {
      throw Error(ErrorKind::Shape, "negative planar dimension");
    }
  }

  int channels() const noexcept { return channels_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept {
    return static_cast<std::size_t>(height_) * width_;
  }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& at(int c, int h, int w) {
    return data_[(static_cast<std::size_t>(c) * height_ + h) * width_ + w];
  }
  const T& at(int c, int h, int w) const {
    return data_[(static_cast<std::size_t>(c) * height_ + h) * width_ + w];
  }

  T* plane(int c) { return data_.data() + static_cast<std::size_t>(c) * plane_size(); }
  const T* plane(int c) const {
    return data_.data() + static_cast<std::size_t>(c) * plane_size();
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  bool same_shape(const Planar& o) const noexcept {
    return channels_ == o.channels_ && height_ == o.height_ && width_ == o.width_;
  }
  bool same_spatial(int h, int w) const noexcept { return height_ == h && width_ == w; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  template <typename U>
  Planar<U> cast() const {
    Planar<U> out(channels_, height_, width_);
    for (std::size_t i = 0; i < data_.size(); ++i) out.data()[i] = static_cast<U>(data_[i]);
    return out;
  }

  bool operator==(const Planar&) const = default;

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<T> data_;
};

/// RGB image with channel values in [0, 1].
class Image : public Planar<float> {
 public:
  Image() = default;
  Image(int height, int width, float fill = 0.0f) : Planar<float>(3, height, width, fill) {}
  explicit Image(Planar<float> p);

  /// Throws InvalidInput if a value leaves [0, 1] or a dimension is zero.
  void validate() const;
};

/// Discrete per-pixel class indices in {0..C-1} or kIgnoreLabel.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(int height, int width, int class_count, std::uint8_t fill = 0);
  LabelMap(int height, int width, int class_count, std::vector<std::uint8_t> labels);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int class_count() const noexcept { return class_count_; }
  std::size_t size() const noexcept { return labels_.size(); }

  std::uint8_t& at(int h, int w) { return labels_[static_cast<std::size_t>(h) * width_ + w]; }
  std::uint8_t at(int h, int w) const {
    return labels_[static_cast<std::size_t>(h) * width_ + w];
  }
  std::span<std::uint8_t> values() noexcept { return labels_; }
  std::span<const std::uint8_t> values() const noexcept { return labels_; }

  /// Throws InvalidLabel on any entry >= C that is not kIgnoreLabel.
  void validate() const;

  bool operator==(const LabelMap&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int class_count_ = 0;
  std::vector<std::uint8_t> labels_;
};

/// Per-pixel class distribution, the segmentation network output.
template <typename T>
class ProbabilityMap : public Planar<T> {
 public:
  using Planar<T>::Planar;
  ProbabilityMap() = default;
  explicit ProbabilityMap(Planar<T> p) : Planar<T>(std::move(p)) {}

  int class_count() const noexcept { return this->channels(); }

  /// True when every entry lies in [0,1] and each pixel sums to 1 within tol.
  bool is_normalized(double tol = 1e-5) const;
};

/// C-channel encoding of a label map; ignored pixels are all-zero.
template <typename T>
class OneHotMap : public Planar<T> {
 public:
  using Planar<T>::Planar;
  OneHotMap() = default;
  explicit OneHotMap(Planar<T> p) : Planar<T>(std::move(p)) {}

  int class_count() const noexcept { return this->channels(); }
};

/// Single-channel per-pixel real/fake probability from the discriminator.
template <typename T>
class ConfidenceMap : public Planar<T> {
 public:
  ConfidenceMap() = default;
  ConfidenceMap(int height, int width, T fill = T{}) : Planar<T>(1, height, width, fill) {}
  explicit ConfidenceMap(Planar<T> p);

  T& at(int h, int w) { return Planar<T>::at(0, h, w); }
  const T& at(int h, int w) const { return Planar<T>::at(0, h, w); }
};

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int height, int width, std::uint8_t fill = 0)
      : height_(height), width_(width), mask_(static_cast<std::size_t>(height) * width, fill) {}

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return mask_.size(); }
  std::size_t count() const noexcept;

  std::uint8_t& at(int h, int w) { return mask_[static_cast<std::size_t>(h) * width_ + w]; }
  std::uint8_t at(int h, int w) const { return mask_[static_cast<std::size_t>(h) * width_ + w]; }
  std::span<const std::uint8_t> values() const noexcept { return mask_; }

  bool operator==(const BinaryMask&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> mask_;
};

/// Pixels whose ground truth is kIgnoreLabel are set.
BinaryMask ignore_mask(const LabelMap& labels);

}  // namespace advseg

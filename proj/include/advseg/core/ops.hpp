#pragma once

#include "advseg/core/maps.hpp"

namespace advseg {

/// Channel c at (h, w) is 1 iff label(h, w) == c; ignored pixels stay zero.
/// Throws InvalidLabel for values >= class_count other than kIgnoreLabel.
template <typename T = float>
OneHotMap<T> one_hot_encode(const LabelMap& labels, int class_count);

/// Per-pixel argmax; ties go to the smallest class index.
template <typename T>
LabelMap argmax_labels(const ProbabilityMap<T>& prob);

/// mask(h, w) = conf(h, w) > threshold. Throws InvalidThreshold outside [0, 1].
template <typename T>
BinaryMask threshold_mask(const ConfidenceMap<T>& conf, double threshold);

/// Corner-aligned bilinear interpolation of every channel to out_h x out_w.
template <typename T>
Planar<T> bilinear_resize(const Planar<T>& in, int out_h, int out_w);

/// Adjoint of bilinear_resize: maps a gradient on the resized grid back onto
/// the in_h x in_w grid.
template <typename T>
Planar<T> bilinear_resize_backward(const Planar<T>& grad_out, int in_h, int in_w);

/// Resize that renormalizes each pixel's distribution after interpolation.
template <typename T>
ProbabilityMap<T> bilinear_resize(const ProbabilityMap<T>& in, int out_h, int out_w);

template <typename T>
ConfidenceMap<T> bilinear_resize(const ConfidenceMap<T>& in, int out_h, int out_w);

}  // namespace advseg

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "advseg/core/maps.hpp"
#include "advseg/data/dataset.hpp"
#include "advseg/data/png_io.hpp"
#include "advseg/nn/discnet.hpp"
#include "advseg/nn/segnet.hpp"

namespace advseg {

/// counts(g, p): pixels with ground truth g predicted as p. Ignored pixels
/// are not counted.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int class_count);

  int class_count() const noexcept { return class_count_; }
  std::uint64_t& at(int g, int p) { return counts_[static_cast<std::size_t>(g) * class_count_ + p]; }
  std::uint64_t at(int g, int p) const {
    return counts_[static_cast<std::size_t>(g) * class_count_ + p];
  }
  std::uint64_t total() const;
  ConfusionMatrix& operator+=(const ConfusionMatrix& o);
  bool operator==(const ConfusionMatrix&) const = default;

 private:
  int class_count_ = 0;
  std::vector<std::uint64_t> counts_;
};

/// Throws Shape on mismatched sizes and InvalidLabel when a prediction is
/// not in [0, C) or a ground-truth value is neither a class nor ignore.
ConfusionMatrix confusion(const LabelMap& pred, const LabelMap& gt, int class_count);

struct IouReport {
  /// Empty for classes with zero union; those are left out of the mean.
  std::vector<std::optional<double>> per_class;
  double mean = 0.0;
};

/// Throws UndefinedMetric when every class has zero union.
IouReport mean_iou(const ConfusionMatrix& m);

struct SelectedPixelStats {
  double fraction = 0.0;
  std::optional<double> accuracy;  // empty when nothing is selected
  std::uint64_t selected = 0;
  std::uint64_t correct = 0;
  std::uint64_t valid = 0;
};

/// Pixels with conf > t among non-ignored ground truth, and the accuracy of
/// `pred` on them.
template <typename T>
SelectedPixelStats selected_pixel_stats(const ConfidenceMap<T>& conf, const LabelMap& pred,
                                        const LabelMap& gt, double t);

struct SelectedPixelRow {
  double t_semi = 0.0;
  double fraction = 0.0;
  std::optional<double> accuracy;
};

using SelectedPixelReport = std::vector<SelectedPixelRow>;

/// `t_semi,selected_pct,accuracy` with percentages; empty accuracy when
/// nothing was selected.
std::string selected_pixel_csv(const SelectedPixelReport& report);

/// `class,iou` rows followed by `mean,<value>`.
std::string metrics_csv(const IouReport& report);

/// JSON object with mean_iu, per-class IoU and pixel count.
std::string metrics_summary_json(const IouReport& report, const ConfusionMatrix& m);

/// round-half-up of 255 * p, clamped to [0, 255].
std::uint8_t confidence_to_gray(double p);

template <typename T>
void export_confidence_png(const ConfidenceMap<T>& conf, const std::filesystem::path& path);

/// Standard 256-entry VOC colour map: index bits spread over RGB from the
/// most significant bit down. kIgnoreLabel maps to (224, 224, 192).
std::vector<Rgb> voc_palette();

void export_prediction_png(const LabelMap& labels, const std::vector<Rgb>& palette,
                           const std::filesystem::path& path);

/// Runs S over every labeled sample and accumulates the confusion matrix.
/// `visit` (optional) sees each sample index with its prediction.
ConfusionMatrix evaluate_segmentation(
    const NetParams<float>& seg, const SegNetConfig& cfg, const Dataset& data,
    const std::function<void(std::size_t, const ProbabilityMap<float>&)>& visit = {});

/// Aggregate selected-pixel statistics of D(S(x)) over the labeled samples,
/// one row per threshold.
SelectedPixelReport selected_pixel_report(const NetParams<float>& seg, const SegNetConfig& seg_cfg,
                                          const NetParams<float>& disc,
                                          const DiscNetConfig& disc_cfg, const Dataset& data,
                                          const std::vector<double>& thresholds);

}  // namespace advseg

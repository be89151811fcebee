#include "advseg/eval/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include <nlohmann/json.hpp>

#include "advseg/core/ops.hpp"

namespace advseg {

ConfusionMatrix::ConfusionMatrix(int class_count)
    : class_count_(class_count),
      counts_(static_cast<std::size_t>(class_count) * class_count, 0) {
  if (class_count < 1) throw Error(ErrorKind::InvalidConfig, "class count must be positive");
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
  if (o.class_count_ != class_count_) throw Error(ErrorKind::Shape, "confusion size mismatch");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += o.counts_[i];
  return *this;
}

ConfusionMatrix confusion(const LabelMap& pred, const LabelMap& gt, int class_count) {
  if (pred.height() != gt.height() || pred.width() != gt.width()) {
    throw Error(ErrorKind::Shape, "prediction and ground truth differ in size");
  }
  ConfusionMatrix m(class_count);
  const auto p = pred.values();
  const auto g = gt.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] == kIgnoreLabel) continue;
    if (g[i] >= class_count || p[i] >= class_count) {
      throw Error(ErrorKind::InvalidLabel, "label outside [0, class_count)");
    }
    ++m.at(g[i], p[i]);
  }
  return m;
}

IouReport mean_iou(const ConfusionMatrix& m) {
  const int c = m.class_count();
  IouReport r;
  r.per_class.resize(static_cast<std::size_t>(c));
  double sum = 0.0;
  int present = 0;
  for (int k = 0; k < c; ++k) {
    std::uint64_t row = 0, col = 0;
    for (int j = 0; j < c; ++j) {
      row += m.at(k, j);
      col += m.at(j, k);
    }
    const std::uint64_t inter = m.at(k, k);
    const std::uint64_t uni = row + col - inter;
    if (uni == 0) continue;
    const double iou = static_cast<double>(inter) / static_cast<double>(uni);
    r.per_class[static_cast<std::size_t>(k)] = iou;
    sum += iou;
    ++present;
  }
  if (present == 0) throw Error(ErrorKind::UndefinedMetric, "no class has a non-empty union");
  r.mean = sum / present;
  return r;
}

template <typename T>
SelectedPixelStats selected_pixel_stats(const ConfidenceMap<T>& conf, const LabelMap& pred,
                                        const LabelMap& gt, double t) {
  if (pred.height() != gt.height() || pred.width() != gt.width() ||
      conf.height() != gt.height() || conf.width() != gt.width()) {
    throw Error(ErrorKind::Shape, "selected_pixel_stats inputs differ in size");
  }
  const BinaryMask mask = threshold_mask(conf, t);
  SelectedPixelStats s;
  const auto g = gt.values();
  const auto p = pred.values();
  const auto sel = mask.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] == kIgnoreLabel) continue;
    ++s.valid;
    if (!sel[i]) continue;
    ++s.selected;
    if (p[i] == g[i]) ++s.correct;
  }
  s.fraction = s.valid ? static_cast<double>(s.selected) / static_cast<double>(s.valid) : 0.0;
  if (s.selected) s.accuracy = static_cast<double>(s.correct) / static_cast<double>(s.selected);
  return s;
}

template SelectedPixelStats selected_pixel_stats<float>(const ConfidenceMap<float>&,
                                                        const LabelMap&, const LabelMap&, double);
template SelectedPixelStats selected_pixel_stats<double>(const ConfidenceMap<double>&,
                                                         const LabelMap&, const LabelMap&, double);

namespace {
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}
}  // namespace

std::string selected_pixel_csv(const SelectedPixelReport& report) {
  std::string s = "t_semi,selected_pct,accuracy\n";
  for (const auto& row : report) {
    s += fmt(row.t_semi) + ',' + fmt(100.0 * row.fraction) + ',';
    if (row.accuracy) s += fmt(100.0 * *row.accuracy);
    s += '\n';
  }
  return s;
}

std::string metrics_csv(const IouReport& report) {
  std::string s = "class,iou\n";
  for (std::size_t k = 0; k < report.per_class.size(); ++k) {
    s += std::to_string(k) + ',';
    if (report.per_class[k]) s += fmt(*report.per_class[k]);
    s += '\n';
  }
  s += "mean," + fmt(report.mean) + '\n';
  return s;
}

std::string metrics_summary_json(const IouReport& report, const ConfusionMatrix& m) {
  nlohmann::json j;
  j["mean_iu"] = report.mean;
  j["class_count"] = m.class_count();
  j["pixels"] = m.total();
  auto& per = j["per_class_iou"] = nlohmann::json::array();
  for (const auto& v : report.per_class) per.push_back(v ? nlohmann::json(*v) : nlohmann::json());
  return j.dump(2) + '\n';
}

std::uint8_t confidence_to_gray(double p) {
  const double v = std::floor(255.0 * p + 0.5);
  return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

template <typename T>
void export_confidence_png(const ConfidenceMap<T>& conf, const std::filesystem::path& path) {
  GrayImage g{conf.height(), conf.width(), {}};
  g.pixels.reserve(conf.size());
  for (T v : conf.values()) g.pixels.push_back(confidence_to_gray(static_cast<double>(v)));
  write_png_gray(path, g);
}

template void export_confidence_png<float>(const ConfidenceMap<float>&, const std::filesystem::path&);
template void export_confidence_png<double>(const ConfidenceMap<double>&,
                                            const std::filesystem::path&);

std::vector<Rgb> voc_palette() {
  std::vector<Rgb> pal(256);
  for (int i = 0; i < 256; ++i) {
    int r = 0, g = 0, b = 0, c = i;
    for (int j = 0; j < 8; ++j) {
      r |= ((c >> 0) & 1) << (7 - j);
      g |= ((c >> 1) & 1) << (7 - j);
      b |= ((c >> 2) & 1) << (7 - j);
      c >>= 3;
    }
    pal[static_cast<std::size_t>(i)] = {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                                        static_cast<std::uint8_t>(b)};
  }
  return pal;
}

void export_prediction_png(const LabelMap& labels, const std::vector<Rgb>& palette,
                           const std::filesystem::path& path) {
  GrayImage g{labels.height(), labels.width(),
              std::vector<std::uint8_t>(labels.values().begin(), labels.values().end())};
  for (auto v : g.pixels) {
    if (v >= palette.size()) throw Error(ErrorKind::InvalidLabel, "label outside the palette");
  }
  write_png_indexed(path, g, palette);
}

ConfusionMatrix evaluate_segmentation(
    const NetParams<float>& seg, const SegNetConfig& cfg, const Dataset& data,
    const std::function<void(std::size_t, const ProbabilityMap<float>&)>& visit) {
  ConfusionMatrix total(cfg.class_count);
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const Sample& s = data.samples[i];
    const ProbabilityMap<float> prob = seg_forward<float>(seg, cfg, s.image, nullptr);
    if (visit) visit(i, prob);
    if (s.label) total += confusion(argmax_labels(prob), *s.label, cfg.class_count);
  }
  return total;
}

SelectedPixelReport selected_pixel_report(const NetParams<float>& seg, const SegNetConfig& seg_cfg,
                                          const NetParams<float>& disc,
                                          const DiscNetConfig& disc_cfg, const Dataset& data,
                                          const std::vector<double>& thresholds) {
  std::vector<SelectedPixelStats> acc(thresholds.size());
  for (const Sample& s : data.samples) {
    if (!s.label) continue;
    const ProbabilityMap<float> prob = seg_forward<float>(seg, seg_cfg, s.image, nullptr);
    const ConfidenceMap<float> conf = disc_confidence<float>(disc, disc_cfg, prob, nullptr);
    const LabelMap pred = argmax_labels(prob);
    for (std::size_t k = 0; k < thresholds.size(); ++k) {
      const auto st = selected_pixel_stats(conf, pred, *s.label, thresholds[k]);
      acc[k].valid += st.valid;
      acc[k].selected += st.selected;
      acc[k].correct += st.correct;
    }
  }
  SelectedPixelReport report;
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    SelectedPixelRow row;
    row.t_semi = thresholds[k];
    if (acc[k].valid) row.fraction = static_cast<double>(acc[k].selected) / acc[k].valid;
    if (acc[k].selected) row.accuracy = static_cast<double>(acc[k].correct) / acc[k].selected;
    report.push_back(row);
  }
  return report;
}

}  // namespace advseg

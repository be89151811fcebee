#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "advseg/data/png_io.hpp"
#include "advseg/eval/grad_check.hpp"
#include "advseg/eval/metrics.hpp"
#include "advseg/nn/layers.hpp"
#include "error_util.hpp"
#include "support.hpp"

namespace advseg {
namespace {

using test::kind_of;
namespace fs = std::filesystem;

// Per-class IoU straight from the pixel lists, without a confusion matrix.
double brute_mean_iou(const LabelMap& pred, const LabelMap& gt, int c) {
  double sum = 0;
  int n = 0;
  for (int k = 0; k < c; ++k) {
    long inter = 0, uni = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (gt.values()[i] == kIgnoreLabel) continue;
      const bool p = pred.values()[i] == k, g = gt.values()[i] == k;
      inter += p && g;
      uni += p || g;
    }
    if (uni > 0) {
      sum += static_cast<double>(inter) / static_cast<double>(uni);
      ++n;
    }
  }
  return sum / n;
}

TEST(Confusion, SmallExample) {
  const LabelMap gt(1, 4, 2, {0, 0, 1, 1});
  const LabelMap pred(1, 4, 2, {0, 1, 1, 1});
  const auto m = confusion(pred, gt, 2);
  EXPECT_EQ(m.at(0, 0), 1u);
  EXPECT_EQ(m.at(0, 1), 1u);
  EXPECT_EQ(m.at(1, 1), 2u);
  EXPECT_EQ(m.total(), 4u);
  const auto r = mean_iou(m);
  EXPECT_DOUBLE_EQ(*r.per_class[0], 0.5);
  EXPECT_DOUBLE_EQ(*r.per_class[1], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.mean, (0.5 + 2.0 / 3.0) / 2);
}

TEST(Confusion, TallyExamples) {
  const LabelMap zeros(2, 2, 2, 0);
  const auto m = confusion(zeros, zeros, 2);
  EXPECT_EQ(m.at(0, 0), 4u);
  EXPECT_EQ(m.total(), 4u);
  EXPECT_EQ(confusion(zeros, LabelMap(2, 2, 2, kIgnoreLabel), 2).total(), 0u);
  const auto t = confusion(LabelMap(1, 2, 2, {1, 1}), LabelMap(1, 2, 2, {0, 1}), 2);
  EXPECT_EQ(t.at(0, 1), 1u);
  EXPECT_EQ(t.at(1, 1), 1u);
  EXPECT_EQ(t.at(0, 0) + t.at(1, 0), 0u);
}

TEST(Confusion, HalfRightExample) {
  const auto r = mean_iou(confusion(LabelMap(2, 2, 2, 0), LabelMap(2, 2, 2, {0, 0, 1, 1}), 2));
  EXPECT_DOUBLE_EQ(*r.per_class[0], 0.5);
  EXPECT_DOUBLE_EQ(*r.per_class[1], 0.0);
  EXPECT_DOUBLE_EQ(r.mean, 0.25);
}

TEST(Confusion, PerfectPredictionAndAbsentClass) {
  const LabelMap gt(2, 2, 3, {0, 1, 1, kIgnoreLabel});
  // The class-2 prediction sits on an ignored pixel, so class 2 has no union.
  const LabelMap pred(2, 2, 3, {0, 1, 1, 2});
  const auto r = mean_iou(confusion(pred, gt, 3));
  EXPECT_DOUBLE_EQ(r.mean, 1.0);
  EXPECT_FALSE(r.per_class[2].has_value());
}

TEST(Confusion, Errors) {
  const LabelMap a(2, 2, 3), b(2, 3, 3);
  EXPECT_EQ(kind_of([&] { confusion(a, b, 3); }), ErrorKind::Shape);
  const LabelMap bad(2, 2, 3, {0, 1, 2, 3});
  EXPECT_EQ(kind_of([&] { confusion(bad, a, 3); }), ErrorKind::InvalidLabel);
  EXPECT_EQ(kind_of([&] { confusion(a, bad, 3); }), ErrorKind::InvalidLabel);
  const LabelMap ignored(2, 2, 3, kIgnoreLabel);
  EXPECT_EQ(kind_of([&] { mean_iou(confusion(a, ignored, 3)); }), ErrorKind::UndefinedMetric);
}

TEST(Confusion, BruteForceAgreement) {
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto gt = test::random_labels(rng, 8, 8, 4, 0.1);
    const auto pred = test::random_labels(rng, 8, 8, 4);
    EXPECT_NEAR(mean_iou(confusion(pred, gt, 4)).mean, brute_mean_iou(pred, gt, 4), 1e-12);
  }
}

TEST(Confusion, ClassPermutationLeavesMeanUnchanged) {
  Rng rng(12);
  const int perm[4] = {2, 0, 3, 1};
  for (int trial = 0; trial < 100; ++trial) {
    auto gt = test::random_labels(rng, 6, 6, 4, 0.1);
    auto pred = test::random_labels(rng, 6, 6, 4);
    const double before = mean_iou(confusion(pred, gt, 4)).mean;
    for (auto& v : gt.values())
      if (v != kIgnoreLabel) v = static_cast<std::uint8_t>(perm[v]);
    for (auto& v : pred.values()) v = static_cast<std::uint8_t>(perm[v]);
    EXPECT_NEAR(mean_iou(confusion(pred, gt, 4)).mean, before, 1e-12);
  }
}

TEST(Confusion, Accumulates) {
  Rng rng(13);
  const auto g1 = test::random_labels(rng, 5, 5, 3), p1 = test::random_labels(rng, 5, 5, 3);
  const auto g2 = test::random_labels(rng, 5, 5, 3), p2 = test::random_labels(rng, 5, 5, 3);
  auto m = confusion(p1, g1, 3);
  m += confusion(p2, g2, 3);
  EXPECT_EQ(m.total(), 50u);
}

TEST(SelectedPixels, Examples) {
  ConfidenceMap<float> conf(1, 2);
  conf.at(0, 0) = 0.9f;
  conf.at(0, 1) = 0.1f;
  const LabelMap gt(1, 2, 2, {1, 0});
  const LabelMap pred(1, 2, 2, {1, 1});
  const auto all = selected_pixel_stats(conf, pred, gt, 0.0);
  EXPECT_DOUBLE_EQ(all.fraction, 1.0);
  EXPECT_DOUBLE_EQ(*all.accuracy, 0.5);
  const auto half = selected_pixel_stats(conf, pred, gt, 0.5);
  EXPECT_DOUBLE_EQ(half.fraction, 0.5);
  EXPECT_DOUBLE_EQ(*half.accuracy, 1.0);
  const auto none = selected_pixel_stats(conf, pred, gt, 1.0);
  EXPECT_DOUBLE_EQ(none.fraction, 0.0);
  EXPECT_FALSE(none.accuracy.has_value());
}

TEST(SelectedPixels, HandEnumeratedExample) {
  ConfidenceMap<double> conf(2, 2);
  conf.at(0, 0) = 0.3;
  conf.at(0, 1) = 0.1;
  conf.at(1, 0) = 0.25;
  conf.at(1, 1) = 0.05;
  const LabelMap gt(2, 2, 2, {1, 1, 1, 1});
  const LabelMap pred(2, 2, 2, {1, 0, 0, 0});
  const auto s = selected_pixel_stats(conf, pred, gt, 0.2);
  EXPECT_DOUBLE_EQ(s.fraction, 0.5);
  EXPECT_DOUBLE_EQ(*s.accuracy, 0.5);
}

TEST(SelectedPixels, FractionNonIncreasingInThreshold) {
  Rng rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    const auto conf = test::random_conf<float>(rng, 9, 9);
    const auto gt = test::random_labels(rng, 9, 9, 3, 0.1);
    const auto pred = test::random_labels(rng, 9, 9, 3);
    double prev = 2.0;
    for (double t = 0.0; t <= 1.0; t += 0.05) {
      const auto s = selected_pixel_stats(conf, pred, gt, t);
      EXPECT_LE(s.fraction, prev);
      prev = s.fraction;
    }
  }
}

TEST(SelectedPixels, CsvUsesPercentages) {
  const SelectedPixelReport rep{{0.1, 0.5, 0.75}, {0.3, 0.0, std::nullopt}};
  const auto csv = selected_pixel_csv(rep);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t_semi,selected_pct,accuracy");
  EXPECT_NE(csv.find("0.1,50,75"), std::string::npos);
  EXPECT_NE(csv.find("0.3,0,\n"), std::string::npos);
}

TEST(Export, GrayLevels) {
  EXPECT_EQ(confidence_to_gray(0.0), 0);
  EXPECT_EQ(confidence_to_gray(0.5), 128);
  EXPECT_EQ(confidence_to_gray(1.0), 255);
  EXPECT_EQ(confidence_to_gray(-0.2), 0);
  EXPECT_EQ(confidence_to_gray(1.5), 255);
}

TEST(Export, ConfidenceRoundTrip) {
  Rng rng(15);
  const auto conf = test::random_conf<float>(rng, 7, 5);
  const fs::path p = fs::temp_directory_path() / "advseg_conf_rt.png";
  export_confidence_png(conf, p);
  const auto g = read_png_gray(p);
  ASSERT_EQ(g.height, 7);
  ASSERT_EQ(g.width, 5);
  for (std::size_t i = 0; i < g.pixels.size(); ++i)
    EXPECT_LE(std::abs(g.pixels[i] / 255.0 - conf.values()[i]), 1.0 / 255.0);
  fs::remove(p);
}

TEST(Export, Palette) {
  const auto pal = voc_palette();
  ASSERT_EQ(pal.size(), 256u);
  EXPECT_EQ(pal[0], (Rgb{0, 0, 0}));
  EXPECT_EQ(pal[1], (Rgb{128, 0, 0}));
  EXPECT_EQ(pal[2], (Rgb{0, 128, 0}));
  EXPECT_EQ(pal[15], (Rgb{192, 128, 128}));
  EXPECT_EQ(pal[kIgnoreLabel], (Rgb{224, 224, 192}));

  const fs::path p = fs::temp_directory_path() / "advseg_pred.png";
  export_prediction_png(LabelMap(2, 2, 3, {0, 1, 2, kIgnoreLabel}), pal, p);
  const Image img = read_png_rgb(p);
  EXPECT_FLOAT_EQ(img.at(0, 0, 1), 128.0f / 255.0f);
  EXPECT_FLOAT_EQ(img.at(1, 1, 0), 128.0f / 255.0f);
  EXPECT_FLOAT_EQ(img.at(2, 1, 1), 192.0f / 255.0f);
  fs::remove(p);
}

TEST(Export, MetricsCsv) {
  IouReport r{{0.5, std::nullopt, 1.0}, 0.75};
  EXPECT_EQ(metrics_csv(r), "class,iou\n0,0.5\n1,\n2,1\nmean,0.75\n");
}

TEST(GradCheck, QuadraticIsExact) {
  const FlatObjective f = [](const std::vector<double>& x, std::vector<double>* g) {
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += 0.5 * (i + 1) * x[i] * x[i];
    if (g) {
      g->resize(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) (*g)[i] = (i + 1) * x[i];
    }
    return s;
  };
  EXPECT_LT(grad_check(f, {0.3, -1.2, 2.0, 0.7}, 1e-5), 1e-8);
  const FlatObjective norm2 = [](const std::vector<double>& x, std::vector<double>* g) {
    double s = 0;
    for (double v : x) s += v * v;
    if (g) {
      g->resize(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) (*g)[i] = 2 * x[i];
    }
    return s;
  };
  EXPECT_LT(grad_check(norm2, {1.5, -0.25, 3.0}, 1e-4), 1e-8);
  EXPECT_EQ(grad_check(f, {}, 1e-5), 0.0);
}

TEST(GradCheck, DetectsWrongGradient) {
  const FlatObjective f = [](const std::vector<double>& x, std::vector<double>* g) {
    if (g) *g = {3 * x[0]};
    return x[0] * x[0];
  };
  EXPECT_GT(grad_check(f, {1.0}, 1e-5), 0.1);
}

// f(x) = sum of leaky_relu(x_i) with slope 0.2; gradient 1 above zero, 0.2 below.
double leaky_sum(const std::vector<double>& x, std::vector<double>* g) {
  Planar<double> p(1, 1, static_cast<int>(x.size()));
  std::copy(x.begin(), x.end(), p.values().begin());
  nn::leaky_relu_inplace(p, 0.2);
  if (g) {
    g->resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) (*g)[i] = x[i] > 0 ? 1.0 : 0.2;
  }
  return std::accumulate(p.values().begin(), p.values().end(), 0.0);
}

TEST(GradCheck, StepShrinksAcrossActivationKink) {
  // A fixed step of 1e-3 straddles the kink at 0 for x = 2e-4; central
  // differences would give (1.2e-3 - 0.2 * 8e-4) / 2e-3 = 0.52 instead of 1.
  EXPECT_LT(grad_check(leaky_sum, {2e-4, -3e-4, 0.5}, 1e-3), 1e-12);
  EXPECT_FALSE(nn::sign_trace().enabled);
}

TEST(GradCheck, SignTraceSeesBranchChanges) {
  nn::SignTrace& t = nn::sign_trace();
  auto hash_of = [&](std::vector<double> x) {
    t = {true, 7};
    leaky_sum(x, nullptr);
    const auto h = t.hash;
    t = {};
    return h;
  };
  EXPECT_EQ(hash_of({0.1, -0.2}), hash_of({0.3, -0.01}));
  EXPECT_NE(hash_of({0.1, -0.2}), hash_of({-0.1, -0.2}));
  t = {false, 7};
  leaky_sum({1.0}, nullptr);
  EXPECT_EQ(t.hash, 7u);
  t = {};
}

TEST(GradCheck, PerArrayReachesEverySmallArray) {
  NetParams<double> p;
  p.add("w", {1000});
  p.add("b", {1});
  for (auto& a : p.arrays)
    for (std::size_t i = 0; i < a.values.size(); ++i) a.values[i] = 0.001 * static_cast<double>(i) + 0.5;
  // Wrong gradient only on the single-element array.
  const ParamObjective f = [](const NetParams<double>& q, NetParams<double>* g) {
    double s = 0;
    for (const auto& a : q.arrays)
      for (double v : a.values) s += v * v;
    if (g)
      for (std::size_t k = 0; k < q.arrays.size(); ++k)
        for (std::size_t i = 0; i < q.arrays[k].values.size(); ++i)
          g->arrays[k].values[i] = (k == 1 ? 3.0 : 2.0) * q.arrays[k].values[i];
    return s;
  };
  EXPECT_GT(grad_check_per_array(f, p, 1e-4, 4), 0.1);
  EXPECT_LT(grad_check_sampled(f, p, 1e-4, 4), 1e-8);
}

TEST(GradCheck, ZeroParameterModelIsVacuous) {
  const ParamObjective f = [](const NetParams<double>&, NetParams<double>*) { return 1.5; };
  EXPECT_EQ(grad_check(f, NetParams<double>{}, 1e-5), 0.0);
  EXPECT_EQ(grad_check_sampled(f, NetParams<double>{}, 1e-5, 10), 0.0);
  EXPECT_EQ(grad_check_per_array(f, NetParams<double>{}, 1e-5, 10), 0.0);
}

TEST(GradCheck, NonFiniteThrows) {
  const FlatObjective f = [](const std::vector<double>& x, std::vector<double>* g) {
    if (g) *g = {0.0};
    return std::log(x[0]);
  };
  EXPECT_EQ(kind_of([&] { grad_check(f, {-1.0}, 1e-5); }), ErrorKind::NonFinite);
}

}  // namespace
}  // namespace advseg

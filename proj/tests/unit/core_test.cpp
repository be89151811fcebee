#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <functional>

#include "advseg/core/binio.hpp"
#include "advseg/core/kvtext.hpp"
#include "advseg/core/ops.hpp"
#include "error_util.hpp"
#include "support.hpp"

namespace advseg {
namespace {

using test::kind_of;

TEST(OneHot, EncodesWithIgnore) {
  LabelMap l(2, 2, 3, std::vector<std::uint8_t>{0, 1, 2, 255});
  const auto oh = one_hot_encode<double>(l, 3);
  const double expect[4][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 0, 0}};
  for (int i = 0; i < 4; ++i)
    for (int c = 0; c < 3; ++c) EXPECT_EQ(oh.at(c, i / 2, i % 2), expect[i][c]);
}

TEST(OneHot, SingleClass) {
  const auto oh = one_hot_encode<float>(LabelMap(1, 1, 1, 0), 1);
  EXPECT_EQ(oh.at(0, 0, 0), 1.0f);
}

TEST(OneHot, OutOfRangeLabel) {
  LabelMap l(1, 1, 4, 3);
  EXPECT_EQ(kind_of([&] { one_hot_encode<float>(l, 3); }), ErrorKind::InvalidLabel);
}

TEST(Argmax, UniqueMaxAndTies) {
  ProbabilityMap<double> p(3, 1, 1);
  p.at(0, 0, 0) = 0.2;
  p.at(1, 0, 0) = 0.5;
  p.at(2, 0, 0) = 0.3;
  EXPECT_EQ(argmax_labels(p).at(0, 0), 1);

  ProbabilityMap<double> t(2, 1, 1, 0.5);
  EXPECT_EQ(argmax_labels(t).at(0, 0), 0);
}

TEST(Argmax, ElementwiseMap) {
  ProbabilityMap<float> p(3, 2, 2, 0.1f);
  p.at(0, 0, 0) = 0.8f;
  p.at(1, 0, 1) = 0.8f;
  p.at(1, 1, 0) = 0.8f;
  p.at(2, 1, 1) = 0.8f;
  const LabelMap l = argmax_labels(p);
  EXPECT_EQ(l.at(0, 0), 0);
  EXPECT_EQ(l.at(0, 1), 1);
  EXPECT_EQ(l.at(1, 0), 1);
  EXPECT_EQ(l.at(1, 1), 2);
}

TEST(Argmax, OneHotRoundTripProperty) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int c = rng.uniform_int(1, 6);
    const LabelMap l = test::random_labels(rng, rng.uniform_int(1, 9), rng.uniform_int(1, 9), c, 0.2);
    const auto oh = one_hot_encode<float>(l, c);
    const LabelMap back = argmax_labels(ProbabilityMap<float>(Planar<float>(oh)));
    for (std::size_t i = 0; i < l.size(); ++i) {
      if (l.values()[i] != kIgnoreLabel) ASSERT_EQ(back.values()[i], l.values()[i]);
    }
  }
}

TEST(Threshold, StrictComparison) {
  ConfidenceMap<double> c(2, 2);
  c.at(0, 0) = 0.3;
  c.at(0, 1) = 0.1;
  c.at(1, 0) = 0.25;
  c.at(1, 1) = 0.05;
  const BinaryMask m = threshold_mask(c, 0.2);
  EXPECT_EQ(m.at(0, 0), 1);
  EXPECT_EQ(m.at(0, 1), 0);
  EXPECT_EQ(m.at(1, 0), 1);
  EXPECT_EQ(m.at(1, 1), 0);

  ConfidenceMap<double> eq(1, 1, 0.2);
  EXPECT_EQ(threshold_mask(eq, 0.2).count(), 0u);
}

TEST(Threshold, EndpointsAndErrors) {
  Rng rng(3);
  const auto c = test::random_conf<float>(rng, 5, 7);
  EXPECT_EQ(threshold_mask(c, 0.0).count(), c.size());
  EXPECT_EQ(threshold_mask(c, 1.0).count(), 0u);
  EXPECT_EQ(kind_of([&] { threshold_mask(c, -0.1); }), ErrorKind::InvalidThreshold);
  EXPECT_EQ(kind_of([&] { threshold_mask(c, 1.5); }), ErrorKind::InvalidThreshold);
}

TEST(Threshold, AntitoneProperty) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = test::random_conf<double>(rng, 6, 6);
    double t1 = rng.uniform(), t2 = rng.uniform();
    if (t1 > t2) std::swap(t1, t2);
    const BinaryMask a = threshold_mask(c, t1), b = threshold_mask(c, t2);
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_LE(b.values()[i], a.values()[i]);
  }
}

TEST(Resize, ConstantExtension) {
  ProbabilityMap<double> p(2, 1, 1);
  p.at(0, 0, 0) = 0.3;
  p.at(1, 0, 0) = 0.7;
  const auto r = bilinear_resize(p, 4, 4);
  ASSERT_EQ(r.height(), 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      EXPECT_EQ(r.at(0, y, x), 0.3);
      EXPECT_EQ(r.at(1, y, x), 0.7);
    }
}

TEST(Resize, IdentityIsExact) {
  Rng rng(8);
  const auto p = test::random_prob<float>(rng, 3, 7, 5);
  EXPECT_EQ(bilinear_resize(p, 7, 5), p);
  const auto c = test::random_conf<float>(rng, 6, 9);
  EXPECT_EQ(bilinear_resize(c, 6, 9), c);
}

TEST(Resize, CornerAlignedMidpoint) {
  ConfidenceMap<double> c(2, 1);
  c.at(0, 0) = 0.2;
  c.at(1, 0) = 0.6;
  const auto r = bilinear_resize(c, 3, 1);
  EXPECT_DOUBLE_EQ(r.at(0, 0), 0.2);
  EXPECT_DOUBLE_EQ(r.at(1, 0), (0.2 + 0.6) / 2);
  EXPECT_DOUBLE_EQ(r.at(2, 0), 0.6);
}

TEST(Resize, ConstantsAndNormalizationProperty) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const int h = rng.uniform_int(1, 6), w = rng.uniform_int(1, 6);
    const int oh = rng.uniform_int(1, 20), ow = rng.uniform_int(1, 20);
    const double v = rng.uniform();
    const auto r = bilinear_resize(ConfidenceMap<double>(h, w, v), oh, ow);
    for (double x : r.values()) ASSERT_EQ(x, v);

    const auto p = test::random_prob<float>(rng, 4, h, w);
    const auto q = bilinear_resize(p, oh, ow);
    ASSERT_TRUE(q.is_normalized(1e-5));
    // Values stay inside the input's range.
    for (int k = 0; k < 4; ++k) {
      float lo = 1, hi = 0;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          lo = std::min(lo, p.at(k, y, x));
          hi = std::max(hi, p.at(k, y, x));
        }
      for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
          ASSERT_GE(q.at(k, y, x), lo - 1e-6f);
          ASSERT_LE(q.at(k, y, x), hi + 1e-6f);
        }
    }
  }
}

TEST(Resize, BackwardIsAdjoint) {
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const int h = rng.uniform_int(1, 5), w = rng.uniform_int(1, 5);
    const int oh = rng.uniform_int(1, 12), ow = rng.uniform_int(1, 12);
    Planar<double> x(2, h, w), g(2, oh, ow);
    for (auto& v : x.values()) v = rng.normal();
    for (auto& v : g.values()) v = rng.normal();
    const auto y = bilinear_resize(x, oh, ow);
    const auto gx = bilinear_resize_backward(g, h, w);
    double lhs = 0, rhs = 0;
    for (std::size_t i = 0; i < y.size(); ++i) lhs += y.values()[i] * g.values()[i];
    for (std::size_t i = 0; i < x.size(); ++i) rhs += x.values()[i] * gx.values()[i];
    EXPECT_NEAR(lhs, rhs, 1e-10);
  }
}

TEST(LabelMap, ValidateRejectsOutOfRange) {
  LabelMap l(1, 2, 3, std::vector<std::uint8_t>{0, 7});
  EXPECT_EQ(kind_of([&] { l.validate(); }), ErrorKind::InvalidLabel);
  LabelMap ok(1, 2, 3, std::vector<std::uint8_t>{2, kIgnoreLabel});
  EXPECT_NO_THROW(ok.validate());
}

TEST(KvText, RoundTripAndUnknownKeys) {
  KvWriter w;
  w.write("a", 3);
  w.write("b", 0.1);
  w.write("c", true);
  w.write("d", std::vector<int>{1, 2, 4});
  KvReader r("# comment\n" + w.str());
  int a = 0;
  double b = 0;
  bool c = false;
  std::vector<int> d;
  r.read("a", a);
  r.read("b", b);
  r.read("c", c);
  r.read("d", d);
  EXPECT_NO_THROW(r.finish());
  EXPECT_EQ(a, 3);
  EXPECT_EQ(b, 0.1);
  EXPECT_TRUE(c);
  EXPECT_EQ(d, (std::vector<int>{1, 2, 4}));

  KvReader extra("a = 1\nzzz = 2\n");
  extra.read("a", a);
  EXPECT_EQ(kind_of([&] { extra.finish(); }), ErrorKind::InvalidConfig);
}

TEST(KvText, FormatDoubleRoundTrips) {
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform_int(-12, 12));
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(BinIo, ChecksumDetectsCorruption) {
  const auto dir = std::filesystem::temp_directory_path() / "advseg_binio_test";
  std::filesystem::create_directories(dir);
  BinWriter w;
  w.put(std::uint32_t{42});
  w.put_string("hello");
  w.put_vector(std::vector<float>{1.5f, -2.0f});
  w.save(dir / "a.bin");

  BinReader r = BinReader::load(dir / "a.bin");
  EXPECT_EQ(r.get<std::uint32_t>(), 42u);
  EXPECT_EQ(r.get_string(), "hello");
  EXPECT_EQ(r.get_vector<float>(), (std::vector<float>{1.5f, -2.0f}));
  EXPECT_TRUE(r.at_end());

  {
    std::fstream f(dir / "a.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(5);
    f.put('\x7f');
  }
  EXPECT_EQ(kind_of([&] { BinReader::load(dir / "a.bin"); }), ErrorKind::Checkpoint);
  std::filesystem::remove_all(dir);
}

TEST(Rng, DeterministicAndInRange) {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.bits(), b.bits());
  Rng c(1);
  for (int i = 0; i < 1000; ++i) {
    const int v = c.uniform_int(-3, 4);
    ASSERT_GE(v, -3);
    ASSERT_LE(v, 4);
    const double u = c.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

}  // namespace
}  // namespace advseg

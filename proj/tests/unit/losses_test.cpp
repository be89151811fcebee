#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "advseg/core/ops.hpp"
#include "advseg/eval/grad_check.hpp"
#include "advseg/losses/losses.hpp"
#include "advseg/nn/layers.hpp"
#include "error_util.hpp"
#include "support.hpp"

namespace advseg {
namespace {

using test::kind_of;

// Reference values computed independently with long double logs.
const double kLn2 = static_cast<double>(std::log(2.0L));
const double kLn4 = static_cast<double>(std::log(4.0L));

TEST(LossDiscriminator, Examples) {
  const BinaryMask none(2, 2, 0);
  EXPECT_NEAR(loss_discriminator(ConfidenceMap<double>(2, 2, 1.0), DiscTarget::GroundTruth, none).value,
              0.0, 1e-12);
  EXPECT_NEAR(loss_discriminator(ConfidenceMap<double>(2, 2, 0.5), DiscTarget::GroundTruth, none).value,
              kLn2, 1e-12);
  EXPECT_NEAR(loss_discriminator(ConfidenceMap<double>(1, 1, 0.1), DiscTarget::Prediction,
                                 BinaryMask(1, 1, 0))
                  .value,
              static_cast<double>(-std::log(0.9L)), 1e-12);
  // Both targets agree at 0.5.
  EXPECT_NEAR(loss_discriminator(ConfidenceMap<double>(2, 2, 0.5), DiscTarget::Prediction, none).value,
              kLn2, 1e-12);
}

TEST(LossDiscriminator, IgnoredPixelsAreExcluded) {
  ConfidenceMap<double> c(1, 2);
  c.at(0, 0) = 0.5;
  c.at(0, 1) = 0.01;
  BinaryMask ignore(1, 2, 0);
  ignore.at(0, 1) = 1;
  const auto l = loss_discriminator(c, DiscTarget::GroundTruth, ignore);
  EXPECT_EQ(l.contributing_pixels, 1u);
  EXPECT_NEAR(l.value, kLn2, 1e-12);
}

TEST(LossCe, Examples) {
  LabelMap l(2, 2, 3, std::vector<std::uint8_t>{0, 1, 2, 1});
  const auto oh = one_hot_encode<double>(l, 3);
  EXPECT_NEAR(loss_ce(ProbabilityMap<double>(Planar<double>(oh)), oh).value, 0.0, 1e-12);

  ProbabilityMap<double> p(4, 1, 1, 0.25);
  OneHotMap<double> t(4, 1, 1);
  t.at(2, 0, 0) = 1;
  EXPECT_NEAR(loss_ce(p, t).value, kLn4, 1e-12);

  const auto ignored = loss_ce(ProbabilityMap<double>(3, 2, 2, 1.0 / 3), OneHotMap<double>(3, 2, 2));
  EXPECT_EQ(ignored.value, 0.0);
  EXPECT_EQ(ignored.contributing_pixels, 0u);

  EXPECT_EQ(kind_of([] { loss_ce(ProbabilityMap<double>(3, 2, 2), OneHotMap<double>(3, 2, 3)); }),
            ErrorKind::Shape);
}

TEST(LossCe, ClampKeepsValueFinite) {
  ProbabilityMap<float> p(2, 1, 1);
  p.at(0, 0, 0) = 0.0f;
  p.at(1, 0, 0) = 1.0f;
  OneHotMap<float> t(2, 1, 1);
  t.at(0, 0, 0) = 1;
  EXPECT_NEAR(loss_ce(p, t).value, -std::log(kLogEps), 1e-4);
}

TEST(LossAdv, Examples) {
  EXPECT_NEAR(loss_adv(ConfidenceMap<double>(3, 3, 1.0)).value, 0.0, 1e-12);
  EXPECT_NEAR(loss_adv(ConfidenceMap<double>(5, 2, 0.5)).value, kLn2, 1e-12);
  ConfidenceMap<double> c(1, 2);
  c.at(0, 0) = 0.25;
  c.at(0, 1) = 1.0;
  EXPECT_NEAR(loss_adv(c).value, 0.69315, 1e-5);
  EXPECT_NEAR(loss_adv(c).value, kLn4 / 2, 1e-12);
}

TEST(SelfTaught, TargetAndComposition) {
  ProbabilityMap<double> p(2, 1, 2);
  p.at(0, 0, 0) = 0.9;
  p.at(1, 0, 0) = 0.1;
  p.at(0, 0, 1) = 0.5;
  p.at(1, 0, 1) = 0.5;
  const auto t = build_self_taught_target(p);
  EXPECT_EQ(t.at(0, 0, 0), 1.0);
  EXPECT_EQ(t.at(1, 0, 0), 0.0);
  EXPECT_EQ(t.at(0, 0, 1), 1.0);
  EXPECT_EQ(t.at(1, 0, 1), 0.0);

  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto q = test::random_prob<double>(rng, 3, 4, 4);
    double expect = 0;
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x)
        expect -= std::log(std::max({q.at(0, y, x), q.at(1, y, x), q.at(2, y, x)}));
    EXPECT_NEAR(loss_ce(q, build_self_taught_target(q)).value, expect / 16, 1e-12);
  }
}

TEST(LossSemi, Examples) {
  ProbabilityMap<double> p(2, 2, 2);
  const double top[2][2] = {{0.8, 0.6}, {0.5, 0.7}};
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) {
      p.at(0, y, x) = top[y][x];
      p.at(1, y, x) = 1 - top[y][x];
    }
  ConfidenceMap<double> c(2, 2);
  c.at(0, 0) = 0.3;
  c.at(0, 1) = 0.1;
  c.at(1, 0) = 0.25;
  c.at(1, 1) = 0.05;
  const auto l = loss_semi(p, c, 0.2);
  EXPECT_EQ(l.contributing_pixels, 2u);
  const double oracle = static_cast<double>((-std::log(0.8L) - std::log(0.5L)) / 2);
  EXPECT_NEAR(l.value, oracle, 1e-12);
  EXPECT_NEAR(l.value, 0.45815, 1e-5);

  const auto empty = loss_semi(p, c, 1.0);
  EXPECT_EQ(empty.value, 0.0);
  EXPECT_EQ(empty.contributing_pixels, 0u);

  LabelMap lab(2, 2, 2, std::vector<std::uint8_t>{0, 1, 1, 0});
  const auto oh = one_hot_encode<double>(lab, 2);
  EXPECT_NEAR(loss_semi(ProbabilityMap<double>(Planar<double>(oh)), c, 0.2).value, 0.0, 1e-12);
}

TEST(LossSemi, ContributingPixelsMonotoneInThreshold) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = test::random_prob<double>(rng, 3, 6, 6);
    const auto c = test::random_conf<double>(rng, 6, 6);
    std::size_t prev = SIZE_MAX;
    for (double t : {0.0, 0.1, 0.2, 0.3, 0.5, 0.9, 1.0}) {
      const auto n = loss_semi(p, c, t).contributing_pixels;
      EXPECT_LE(n, prev);
      prev = n;
    }
  }
}

TEST(LossSegTotal, Composites) {
  const HyperParams hp;
  EXPECT_NEAR(loss_seg_total(LossValue{1.0, 1}, LossValue{0.5, 1}, std::nullopt, hp, true).value,
              1.005, 1e-12);
  EXPECT_NEAR(loss_seg_total(std::nullopt, LossValue{0.5, 1}, LossValue{2.0, 1}, hp, false).value,
              0.2005, 1e-12);
  const HyperParams zero{0, 0, 0, 0.2};
  EXPECT_EQ(loss_seg_total(LossValue{1.25, 1}, LossValue{0.5, 1}, std::nullopt, zero, true).value,
            1.25);
}

TEST(LossSegTotal, LinearInLambda) {
  HyperParams hp;
  const LossValue adv{0.7, 4}, semi{1.3, 4};
  const double base = loss_seg_total(std::nullopt, adv, semi, hp, false).value;
  hp.lambda_semi *= 2;
  const double doubled = loss_seg_total(std::nullopt, adv, semi, hp, false).value;
  EXPECT_NEAR(doubled - base, 0.1 * 1.3, 1e-15);
}

TEST(LossSegTotal, InvalidCombinations) {
  const HyperParams hp;
  EXPECT_EQ(kind_of([&] { loss_seg_total(std::nullopt, LossValue{}, std::nullopt, hp, true); }),
            ErrorKind::Contract);
  EXPECT_EQ(kind_of([&] { loss_seg_total(LossValue{}, std::nullopt, LossValue{}, hp, true); }),
            ErrorKind::Contract);
  EXPECT_EQ(kind_of([&] { loss_seg_total(LossValue{}, std::nullopt, std::nullopt, hp, false); }),
            ErrorKind::Contract);
}

TEST(HyperParams, Validation) {
  EXPECT_NO_THROW(HyperParams{}.validate());
  EXPECT_EQ(kind_of([] { HyperParams{-0.1, 0, 0, 0.2}.validate(); }), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([] { HyperParams{0, 0, 0, 1.2}.validate(); }), ErrorKind::InvalidThreshold);
}

// --- gradients with respect to the loss inputs --------------------------------

template <typename Map>
std::vector<double> flat(const Map& m) {
  return {m.values().begin(), m.values().end()};
}

template <typename Map>
Map unflat(Map m, const std::vector<double>& v) {
  std::copy(v.begin(), v.end(), m.data());
  return m;
}

std::vector<double> flat_grad(const std::vector<Planar<double>>& g) {
  return {g[0].values().begin(), g[0].values().end()};
}

TEST(LossGradients, ConfidenceLosses) {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto c = test::random_conf<double>(rng, 8, 8);
    BinaryMask ignore(8, 8);
    for (int i = 0; i < 8; ++i) ignore.at(i, rng.uniform_int(0, 7)) = 1;
    for (auto target : {DiscTarget::Prediction, DiscTarget::GroundTruth}) {
      const FlatObjective f = [&](const std::vector<double>& x, std::vector<double>* g) {
        const ConfidenceMap<double> ci = unflat(c, x);
        std::vector<Planar<double>> gr;
        const std::vector<ConfidenceMap<double>> cs{ci};
        const std::vector<BinaryMask> ig{ignore};
        const double v = loss_discriminator<double>(cs, target, ig, g ? &gr : nullptr).value;
        if (g) *g = flat_grad(gr);
        return v;
      };
      EXPECT_LT(grad_check(f, flat(c), 1e-7), 1e-6);
    }
    const FlatObjective fa = [&](const std::vector<double>& x, std::vector<double>* g) {
      std::vector<Planar<double>> gr;
      const std::vector<ConfidenceMap<double>> cs{unflat(c, x)};
      const double v = loss_adv<double>(cs, g ? &gr : nullptr).value;
      if (g) *g = flat_grad(gr);
      return v;
    };
    EXPECT_LT(grad_check(fa, flat(c), 1e-7), 1e-6);
  }
}

TEST(LossGradients, ProbabilityLossesAndLogitPaths) {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    Planar<double> logits(3, 8, 8);
    for (auto& v : logits.values()) v = 2 * rng.normal();
    const LabelMap l = test::random_labels(rng, 8, 8, 3, 0.1);
    const auto target = one_hot_encode<double>(l, 3);
    const auto conf = test::random_conf<double>(rng, 8, 8);
    const auto prob_of = [](const Planar<double>& z) {
      return ProbabilityMap<double>(nn::softmax_channels(z));
    };

    // ce: finite differences of ce(softmax(z)) against the fused logit gradient.
    const FlatObjective fce = [&](const std::vector<double>& x, std::vector<double>* g) {
      const std::vector<ProbabilityMap<double>> ps{prob_of(unflat(logits, x))};
      const std::vector<OneHotMap<double>> ts{target};
      if (!g) return loss_ce<double>(ps, ts).value;
      std::vector<Planar<double>> gr;
      const double v = loss_ce_logit_grad<double>(ps, ts, gr).value;
      *g = flat_grad(gr);
      return v;
    };
    EXPECT_LT(grad_check(fce, flat(logits), 1e-4), 1e-5);

    // semi: same, with the mask and target held fixed by the loss itself.
    const FlatObjective fsemi = [&](const std::vector<double>& x, std::vector<double>* g) {
      const std::vector<ProbabilityMap<double>> ps{prob_of(unflat(logits, x))};
      const std::vector<ConfidenceMap<double>> cs{conf};
      if (!g) return loss_semi<double>(ps, cs, 0.3).value;
      std::vector<Planar<double>> gr;
      const double v = loss_semi_logit_grad<double>(ps, cs, 0.3, gr).value;
      *g = flat_grad(gr);
      return v;
    };
    EXPECT_LT(grad_check(fsemi, flat(logits), 1e-4), 1e-5);

    // Probability-space gradients chained through softmax agree with the fused ones.
    const std::vector<ProbabilityMap<double>> ps{prob_of(logits)};
    const std::vector<OneHotMap<double>> ts{target};
    std::vector<Planar<double>> gp, gz;
    loss_ce<double>(ps, ts, &gp);
    loss_ce_logit_grad<double>(ps, ts, gz);
    const auto chained = nn::softmax_backward(ps[0], gp[0]);
    for (std::size_t i = 0; i < chained.size(); ++i)
      EXPECT_NEAR(chained.values()[i], gz[0].values()[i], 1e-12);
  }
}

TEST(LossGradients, ScaleIsApplied) {
  Rng rng(5);
  const std::vector<ConfidenceMap<double>> cs{test::random_conf<double>(rng, 4, 4)};
  std::vector<Planar<double>> g1, g3;
  loss_adv<double>(cs, &g1);
  loss_adv<double>(cs, &g3, 3.0);
  for (std::size_t i = 0; i < g1[0].size(); ++i)
    EXPECT_DOUBLE_EQ(3 * g1[0].values()[i], g3[0].values()[i]);
  // Accumulates rather than overwrites.
  loss_adv<double>(cs, &g1);
  for (std::size_t i = 0; i < g1[0].size(); ++i)
    EXPECT_DOUBLE_EQ(g1[0].values()[i], 2 * g3[0].values()[i] / 3);
}

TEST(StopGradient, FrozenAndRecomputedTargetsGiveIdenticalGradients) {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<ProbabilityMap<double>> ps{test::random_prob<double>(rng, 3, 8, 8, 2.0)};
    const std::vector<ConfidenceMap<double>> cs{test::random_conf<double>(rng, 8, 8)};
    const double t = rng.uniform(0.0, 0.6);
    const std::vector<OneHotMap<double>> frozen_target{build_self_taught_target(ps[0])};
    const std::vector<BinaryMask> frozen_mask{threshold_mask(cs[0], t)};

    std::vector<Planar<double>> recomputed, frozen;
    const auto a = loss_semi<double>(ps, cs, t, &recomputed);
    const auto b = loss_semi_masked<double>(ps, frozen_target, frozen_mask, &frozen);
    EXPECT_EQ(a.value, b.value);
    ASSERT_EQ(recomputed[0].size(), frozen[0].size());
    EXPECT_EQ(0, std::memcmp(recomputed[0].data(), frozen[0].data(),
                             recomputed[0].size() * sizeof(double)));
  }
}

}  // namespace
}  // namespace advseg

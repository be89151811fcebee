#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "advseg/data/augment.hpp"
#include "advseg/data/batches.hpp"
#include "advseg/data/dataset.hpp"
#include "advseg/data/png_io.hpp"
#include "advseg/data/split.hpp"
#include "error_util.hpp"
#include "support.hpp"

namespace advseg {
namespace {

using test::kind_of;
namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Dataset tiny_dataset(int n) {
  Dataset d;
  d.class_count = 3;
  Rng rng(1);
  for (int i = 0; i < n; ++i) {
    d.samples.push_back({"s" + std::to_string(i), test::random_image(rng, 4, 4),
                         test::random_labels(rng, 4, 4, 3)});
  }
  return d;
}

TEST(Shapes, EmptyAndDeterministic) {
  EXPECT_TRUE(generate_shapes_dataset(0, 16, 16, 3, 1).empty());
  const Dataset a = generate_shapes_dataset(4, 32, 32, 4, 7);
  const Dataset b = generate_shapes_dataset(4, 32, 32, 4, 7);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(a.samples[i].image, b.samples[i].image);
    EXPECT_EQ(a.samples[i].label, b.samples[i].label);
  }
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  EXPECT_NE(a.fingerprint(), generate_shapes_dataset(4, 32, 32, 4, 8).fingerprint());
}

TEST(Shapes, RejectsSingleClass) {
  EXPECT_EQ(kind_of([] { generate_shapes_dataset(2, 16, 16, 1, 0); }), ErrorKind::InvalidConfig);
}

TEST(Shapes, LabelsInRangeAndBackgroundFloor) {
  const Dataset d = generate_shapes_dataset(100, 64, 64, 4, 3);
  for (const auto& s : d.samples) {
    ASSERT_TRUE(s.label);
    std::size_t bg = 0;
    std::set<int> shapes;
    for (auto v : s.label->values()) {
      ASSERT_LT(v, 4);
      if (v == 0) ++bg;
      else shapes.insert(v);
    }
    EXPECT_GE(static_cast<double>(bg) / s.label->size(), 0.30) << s.id;
    EXPECT_GE(shapes.size(), 1u) << s.id;
    for (float v : s.image.values()) {
      ASSERT_GE(v, 0.0f);
      ASSERT_LE(v, 1.0f);
    }
  }
}

TEST(Shapes, FolderRoundTripIsExact) {
  TempDir tmp("advseg_shapes_rt");
  const Dataset d = generate_shapes_dataset(5, 24, 20, 3, 9);
  save_folder_dataset(d, tmp.path);
  const Dataset back = load_folder_dataset(tmp.path);
  ASSERT_EQ(back.size(), d.size());
  EXPECT_EQ(back.class_count, 3);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(back.samples[i].id, d.samples[i].id);
    EXPECT_EQ(back.samples[i].image, d.samples[i].image);
    EXPECT_EQ(back.samples[i].label, d.samples[i].label);
  }
}

TEST(Folder, PairsAndUnlabeled) {
  TempDir tmp("advseg_folder");
  Dataset d = tiny_dataset(3);
  save_folder_dataset(d, tmp.path);
  EXPECT_EQ(load_folder_dataset(tmp.path).size(), 3u);

  fs::remove(tmp.path / "labels" / "s1.png");
  fs::remove(tmp.path / "images" / "s2.png");
  fs::remove(tmp.path / "labels" / "s2.png");
  const Dataset partial = load_folder_dataset(tmp.path);
  ASSERT_EQ(partial.size(), 2u);
  EXPECT_EQ(partial.samples[0].id, "s0");
  EXPECT_TRUE(partial.samples[0].label.has_value());
  EXPECT_FALSE(partial.samples[1].label.has_value());
}

TEST(Folder, SizeMismatchNamesStem) {
  TempDir tmp("advseg_folder_bad");
  save_folder_dataset(tiny_dataset(2), tmp.path);
  write_png_gray(tmp.path / "labels" / "s1.png", GrayImage{3, 5, std::vector<std::uint8_t>(15, 0)});
  try {
    load_folder_dataset(tmp.path);
    FAIL() << "expected an ingestion error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Ingestion);
    EXPECT_NE(std::string(e.what()).find("s1"), std::string::npos);
  }
}

TEST(Folder, UnreadableImage) {
  TempDir tmp("advseg_folder_junk");
  save_folder_dataset(tiny_dataset(1), tmp.path);
  std::ofstream(tmp.path / "images" / "s0.png") << "not a png";
  EXPECT_EQ(kind_of([&] { load_folder_dataset(tmp.path); }), ErrorKind::Ingestion);
}

TEST(Png, RgbRoundTripWithinQuantization) {
  TempDir tmp("advseg_png");
  Rng rng(2);
  const Image img = test::random_image(rng, 5, 6);
  write_png_rgb(tmp.path / "x.png", img);
  const Image back = read_png_rgb(tmp.path / "x.png");
  ASSERT_TRUE(back.same_shape(img));
  for (std::size_t i = 0; i < img.size(); ++i)
    EXPECT_LE(std::abs(back.values()[i] - img.values()[i]), 0.5f / 255 + 1e-6f);
}

TEST(Split, CountsFollowFloorWithMinimumOne) {
  const Dataset d16 = tiny_dataset(16);
  const auto s = split_labeled(d16, Fraction::parse("1/8"), 0);
  EXPECT_EQ(s.labeled_ids.size(), 2u);
  EXPECT_EQ(s.unlabeled_ids.size(), 14u);

  const Dataset d10 = tiny_dataset(10);
  const auto t = split_labeled(d10, Fraction::parse("0.125"), 0);
  EXPECT_EQ(t.labeled_ids.size(), 1u);
  EXPECT_EQ(t.unlabeled_ids.size(), 9u);

  const auto all = split_labeled(d10, Fraction::parse("1"), 0);
  EXPECT_EQ(all.labeled_ids.size(), 10u);
  EXPECT_TRUE(all.unlabeled_ids.empty());
}

TEST(Split, PartitionProperty) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = rng.uniform_int(1, 40);
    const Dataset d = tiny_dataset(n);
    const Fraction f{rng.uniform_int(1, 8), 8};
    const std::uint64_t seed = rng.bits();
    const auto s = split_labeled(d, f, seed);
    const auto again = split_labeled(d, f, seed);
    EXPECT_EQ(s.labeled_ids, again.labeled_ids);
    std::set<std::string> seen(s.labeled_ids.begin(), s.labeled_ids.end());
    for (const auto& id : s.unlabeled_ids) EXPECT_TRUE(seen.insert(id).second);
    EXPECT_EQ(seen.size(), static_cast<std::size_t>(n));
    const auto expect = std::max<std::int64_t>(1, f.num * n / f.den);
    EXPECT_EQ(static_cast<std::int64_t>(s.labeled_ids.size()), expect);
  }
}

TEST(Split, Errors) {
  EXPECT_EQ(kind_of([] { split_labeled(Dataset{}, Fraction{1, 2}, 0); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([] { Fraction::parse("0"); }), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([] { Fraction::parse("3/2"); }), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([] { Fraction::parse("abc"); }), ErrorKind::InvalidConfig);
}

TEST(Augment, IdentityWhenCropMatchesAndScaleOff) {
  const Dataset d = generate_shapes_dataset(1, 32, 32, 3, 1);
  const AugmentConfig cfg{32, 32, 1.0, 1.0, false};
  const Sample out = augment(d.samples[0], cfg, 99);
  EXPECT_EQ(out.image, d.samples[0].image);
  EXPECT_EQ(out.label, d.samples[0].label);
}

TEST(Augment, PadsWithIgnore) {
  Rng rng(1);
  Sample s{"a", test::random_image(rng, 10, 10), test::random_labels(rng, 10, 10, 3)};
  const Sample out = augment(s, AugmentConfig{20, 20, 1.0, 1.0, false}, 5);
  ASSERT_EQ(out.image.height(), 20);
  ASSERT_EQ(out.label->height(), 20);
  std::size_t ignored = 0;
  for (auto v : out.label->values()) ignored += v == kIgnoreLabel;
  EXPECT_EQ(ignored, 400u - 100u);
}

TEST(Augment, DeterministicAndLabelValuesPreserved) {
  const Dataset d = generate_shapes_dataset(20, 40, 40, 4, 2);
  const AugmentConfig cfg{32, 32, 0.5, 1.5, true};
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Sample a = augment(d.samples[i], cfg, i);
    const Sample b = augment(d.samples[i], cfg, i);
    EXPECT_EQ(a.image, b.image);
    EXPECT_EQ(a.label, b.label);
    std::set<int> src(d.samples[i].label->values().begin(), d.samples[i].label->values().end());
    src.insert(kIgnoreLabel);
    for (auto v : a.label->values()) ASSERT_TRUE(src.count(v));
  }
}

TEST(Batches, AlternatesAndDeterministic) {
  const Dataset d = tiny_dataset(10);
  const auto split = split_labeled(d, Fraction{1, 2}, 3);
  BatchStream a(split, 2, 7), b(split, 2, 7);
  for (int i = 0; i < 20; ++i) {
    const Batch x = a.next(), y = b.next();
    EXPECT_EQ(x.tag, i % 2 == 0 ? BatchTag::Labeled : BatchTag::Unlabeled);
    EXPECT_EQ(x.ids, y.ids);
    EXPECT_EQ(x.ids.size(), 2u);
    const auto& pool = x.tag == BatchTag::Labeled ? split.labeled_ids : split.unlabeled_ids;
    for (const auto& id : x.ids) EXPECT_NE(std::find(pool.begin(), pool.end(), id), pool.end());
  }
}

TEST(Batches, LabeledOnlyWithoutUnlabeledPool) {
  const auto split = split_labeled(tiny_dataset(5), Fraction{1, 1}, 0);
  BatchStream s(split, 3, 1);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(s.next().tag, BatchTag::Labeled);
}

TEST(Batches, EpochCoversPool) {
  const auto split = split_labeled(tiny_dataset(12), Fraction{1, 1}, 0);
  BatchStream s(split, 4, 1);
  std::multiset<std::string> seen;
  for (int i = 0; i < 3; ++i)
    for (const auto& id : s.next().ids) seen.insert(id);
  EXPECT_EQ(std::set<std::string>(seen.begin(), seen.end()).size(), 12u);
}

TEST(Batches, Errors) {
  DatasetSplit empty;
  EXPECT_EQ(kind_of([&] { BatchStream(empty, 2, 0); }), ErrorKind::InvalidInput);
  const auto split = split_labeled(tiny_dataset(3), Fraction{1, 1}, 0);
  EXPECT_EQ(kind_of([&] { BatchStream(split, 0, 0); }), ErrorKind::InvalidConfig);
}

}  // namespace
}  // namespace advseg

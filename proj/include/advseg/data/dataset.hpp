#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "advseg/core/maps.hpp"

namespace advseg {

struct Sample {
  std::string id;
  Image image;
  std::optional<LabelMap> label;
};

struct Dataset {
  int class_count = 0;
  std::vector<Sample> samples;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }

  /// Index lookup by sample id; throws InvalidInput for unknown ids.
  std::size_t index_of(const std::string& id) const;
  std::unordered_map<std::string, std::size_t> id_index() const;

  /// FNV-1a over ids, pixels and labels; changes whenever any byte does.
  std::uint64_t fingerprint() const;
};

/// Options for the synthetic shapes generator. Defaults are the ones used by
/// generate_shapes_dataset.
struct ShapesOptions {
  int min_shapes = 1;
  int max_shapes = 3;
  /// Shape radius range as a fraction of min(H, W).
  double min_radius = 0.16;
  double max_radius = 0.32;
  /// Shapes may cover at most this fraction of the image.
  double max_shape_area = 0.70;
  /// Standard deviation of per-shape colour jitter around the class colour.
  double color_jitter = 0.12;
  double pixel_noise = 0.05;
};

/// Deterministic synthetic segmentation data: class 0 is a textured
/// background, classes 1..C-1 are filled disks, squares and triangles
/// (cycled by class). Values are quantized to k/255 so that PNG round trips
/// are exact. Throws InvalidConfig when C < 2.
Dataset generate_shapes_dataset(int n, int height, int width, int class_count,
                                std::uint64_t seed, const ShapesOptions& options = {});

/// Loads `images/*.png` and optional `labels/*.png` (matched by stem). The
/// class count is read from `classes.txt` when present, otherwise it is one
/// more than the largest non-ignore label.
Dataset load_folder_dataset(const std::filesystem::path& root);

/// Writes the folder layout read by load_folder_dataset, including classes.txt.
void save_folder_dataset(const Dataset& dataset, const std::filesystem::path& root);

}  // namespace advseg

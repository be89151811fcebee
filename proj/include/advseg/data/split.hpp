#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advseg/data/dataset.hpp"

namespace advseg {

/// Exact rational in (0, 1].
struct Fraction {
  std::int64_t num = 1;
  std::int64_t den = 1;

  /// Parses "1/8", "0.125" or "1". Throws InvalidConfig outside (0, 1].
  static Fraction parse(const std::string& text);
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string to_string() const;
  bool operator==(const Fraction&) const = default;
};

struct DatasetSplit {
  std::vector<std::string> labeled_ids;
  std::vector<std::string> unlabeled_ids;
  Fraction fraction;
  std::uint64_t seed = 0;
};

/// Labeled count is max(1, floor(fraction * N)), drawn uniformly without
/// replacement among samples that carry a label. Ids keep dataset order.
DatasetSplit split_labeled(const Dataset& dataset, Fraction fraction, std::uint64_t seed);

}  // namespace advseg

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advseg/core/rng.hpp"
#include "advseg/data/split.hpp"

namespace advseg {

enum class BatchTag { Labeled, Unlabeled };

const char* to_string(BatchTag tag);

struct Batch {
  BatchTag tag = BatchTag::Labeled;
  std::vector<std::string> ids;
};

/// Unbounded deterministic stream of homogeneous batches. Each pool walks
/// through a fresh seeded permutation per epoch. While both pools are
/// non-empty the tags alternate L, U, L, U, ...
class BatchStream {
 public:
  BatchStream(const DatasetSplit& split, int batch_size, std::uint64_t seed);

  /// With `allow_unlabeled` false the stream hands out a labeled batch and
  /// leaves the alternation state untouched (used during warm-up).
  Batch next(bool allow_unlabeled = true);

  bool has_unlabeled() const noexcept { return !unlabeled_.ids.empty(); }

 private:
  struct Pool {
    std::vector<std::string> ids;
    std::vector<std::size_t> order;
    std::size_t cursor = 0;
    Rng rng;
    explicit Pool(std::vector<std::string> v, std::uint64_t seed);
    std::vector<std::string> take(int n);
  };

  int batch_size_;
  Pool labeled_;
  Pool unlabeled_;
  bool next_is_unlabeled_ = false;
};

}  // namespace advseg

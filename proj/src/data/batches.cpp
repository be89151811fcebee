#include "advseg/data/batches.hpp"

#include <numeric>

namespace advseg {

const char* to_string(BatchTag tag) { return tag == BatchTag::Labeled ? "L" : "U"; }

BatchStream::Pool::Pool(std::vector<std::string> v, std::uint64_t seed)
    : ids(std::move(v)), order(ids.size()), rng(seed) {
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
}

std::vector<std::string> BatchStream::Pool::take(int n) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (cursor == order.size()) {
      rng.shuffle(order);
      cursor = 0;
    }
    out.push_back(ids[order[cursor++]]);
  }
  return out;
}

BatchStream::BatchStream(const DatasetSplit& split, int batch_size, std::uint64_t seed)
    : batch_size_(batch_size),
      labeled_(split.labeled_ids, mix_seed(seed, 1)),
      unlabeled_(split.unlabeled_ids, mix_seed(seed, 2)) {
  if (batch_size < 1) throw Error(ErrorKind::InvalidConfig, "batch size must be >= 1");
  if (labeled_.ids.empty() && unlabeled_.ids.empty()) {
    throw Error(ErrorKind::InvalidInput, "both sample pools are empty");
  }
}

Batch BatchStream::next(bool allow_unlabeled) {
  const bool have_l = !labeled_.ids.empty();
  const bool have_u = !unlabeled_.ids.empty();
  BatchTag tag;
  if (!have_u || (!allow_unlabeled && have_l)) {
    tag = BatchTag::Labeled;
  } else if (!have_l) {
    tag = BatchTag::Unlabeled;
  } else {
    tag = next_is_unlabeled_ ? BatchTag::Unlabeled : BatchTag::Labeled;
    next_is_unlabeled_ = !next_is_unlabeled_;
  }
  if (tag == BatchTag::Labeled && !have_l) {
    throw Error(ErrorKind::InvalidInput, "labeled batch requested from an empty pool");
  }
  Pool& pool = tag == BatchTag::Labeled ? labeled_ : unlabeled_;
  return Batch{tag, pool.take(batch_size_)};
}

}  // namespace advseg

#include "advseg/data/split.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>

#include "advseg/core/rng.hpp"

namespace advseg {

namespace {

std::int64_t parse_int(const std::string& s) {
  std::int64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorKind::InvalidConfig, "malformed integer '" + s + "' in fraction");
  }
  return v;
}

}  // namespace

Fraction Fraction::parse(const std::string& text) {
  Fraction f;
  if (const auto slash = text.find('/'); slash != std::string::npos) {
    f.num = parse_int(text.substr(0, slash));
    f.den = parse_int(text.substr(slash + 1));
  } else if (const auto dot = text.find('.'); dot != std::string::npos) {
    // Decimal: 0.125 -> 125/1000.
    std::string digits = text.substr(0, dot) + text.substr(dot + 1);
    const auto decimals = text.size() - dot - 1;
    if (decimals > 15) throw Error(ErrorKind::InvalidConfig, "fraction has too many digits");
    f.num = parse_int(digits.empty() ? "0" : digits);
    f.den = 1;
    for (std::size_t i = 0; i < decimals; ++i) f.den *= 10;
  } else {
    f.num = parse_int(text);
    f.den = 1;
  }
  if (f.den <= 0 || f.num <= 0 || f.num > f.den) {
    throw Error(ErrorKind::InvalidConfig, "fraction '" + text + "' outside (0,1]");
  }
  const auto g = std::gcd(f.num, f.den);
  f.num /= g;
  f.den /= g;
  return f;
}

std::string Fraction::to_string() const {
  return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
}

DatasetSplit split_labeled(const Dataset& dataset, Fraction fraction, std::uint64_t seed) {
  if (dataset.empty()) throw Error(ErrorKind::InvalidInput, "cannot split an empty dataset");
  if (fraction.num <= 0 || fraction.den <= 0 || fraction.num > fraction.den) {
    throw Error(ErrorKind::InvalidConfig, "fraction outside (0,1]");
  }
  const auto n = static_cast<std::int64_t>(dataset.size());
  const std::int64_t wanted = std::max<std::int64_t>(1, fraction.num * n / fraction.den);

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    if (dataset.samples[i].label) candidates.push_back(i);
  Rng rng(mix_seed(seed, 0x5b1175ULL));
  rng.shuffle(candidates);
  const auto take = std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(wanted));

  std::vector<std::uint8_t> chosen(dataset.size(), 0);
  for (std::size_t i = 0; i < take; ++i) chosen[candidates[i]] = 1;

  DatasetSplit split;
  split.fraction = fraction;
  split.seed = seed;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    (chosen[i] ? split.labeled_ids : split.unlabeled_ids).push_back(dataset.samples[i].id);
  return split;
}

}  // namespace advseg

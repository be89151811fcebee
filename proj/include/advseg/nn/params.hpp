#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "advseg/core/error.hpp"

namespace advseg {

template <typename T>
struct ParamArray {
  std::string name;
  std::vector<int> shape;
  std::vector<T> values;

  std::size_t size() const noexcept { return values.size(); }
  bool operator==(const ParamArray&) const = default;
};

/// Named parameter arrays of one network, in a fixed order determined by its
/// config. Gradients use the same type.
template <typename T>
struct NetParams {
  std::vector<ParamArray<T>> arrays;
  std::uint64_t seed = 0;

  void add(std::string name, std::vector<int> shape) {
    const auto n = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                   [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
    arrays.push_back({std::move(name), std::move(shape), std::vector<T>(n, T{0})});
  }

  ParamArray<T>& operator[](std::size_t i) { return arrays[i]; }
  const ParamArray<T>& operator[](std::size_t i) const { return arrays[i]; }

  const ParamArray<T>& find(const std::string& name) const {
    for (const auto& a : arrays)
      if (a.name == name) return a;
    throw Error(ErrorKind::InvalidInput, "no parameter named " + name);
  }

  std::size_t total_size() const noexcept {
    std::size_t n = 0;
    for (const auto& a : arrays) n += a.size();
    return n;
  }

  NetParams zeros_like() const {
    NetParams out;
    out.seed = seed;
    for (const auto& a : arrays) out.arrays.push_back({a.name, a.shape, std::vector<T>(a.size(), T{0})});
    return out;
  }

  void set_zero() {
    for (auto& a : arrays) std::fill(a.values.begin(), a.values.end(), T{0});
  }

  template <typename U>
  NetParams<U> cast() const {
    NetParams<U> out;
    out.seed = seed;
    for (const auto& a : arrays) {
      ParamArray<U> b{a.name, a.shape, std::vector<U>(a.values.begin(), a.values.end())};
      out.arrays.push_back(std::move(b));
    }
    return out;
  }

  /// Concatenation of all arrays in order.
  std::vector<T> flatten() const {
    std::vector<T> out;
    out.reserve(total_size());
    for (const auto& a : arrays) out.insert(out.end(), a.values.begin(), a.values.end());
    return out;
  }

  void unflatten(const std::vector<T>& flat) {
    if (flat.size() != total_size()) throw Error(ErrorKind::Shape, "flat parameter size mismatch");
    std::size_t k = 0;
    for (auto& a : arrays)
      for (auto& v : a.values) v = flat[k++];
  }

  bool same_layout(const NetParams& o) const {
    if (arrays.size() != o.arrays.size()) return false;
    for (std::size_t i = 0; i < arrays.size(); ++i)
      if (arrays[i].name != o.arrays[i].name || arrays[i].shape != o.arrays[i].shape) return false;
    return true;
  }

  bool all_finite() const;

  bool operator==(const NetParams&) const = default;
};

template <typename T>
bool NetParams<T>::all_finite() const {
  for (const auto& a : arrays)
    for (T v : a.values)
      if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace advseg

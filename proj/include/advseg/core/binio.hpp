#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "advseg/core/error.hpp"

namespace advseg {

/// Little-endian byte buffer writer. `save` appends an FNV-1a checksum that
/// BinReader::load verifies.
class BinWriter {
 public:
  template <typename T>
    requires std::is_arithmetic_v<T>
  void put(T v) {
    const auto* p = reinterpret_cast<const unsigned char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    put_bytes(s.data(), s.size());
  }
  template <typename T>
  void put_vector(const std::vector<T>& v) {
    put(static_cast<std::uint64_t>(v.size()));
    put_bytes(v.data(), v.size() * sizeof(T));
  }

  /// Writes to a temporary sibling and renames it into place.
  void save(const std::filesystem::path& path) const;

  const std::vector<unsigned char>& bytes() const { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class BinReader {
 public:
  explicit BinReader(std::vector<unsigned char> bytes) : buf_(std::move(bytes)) {}

  /// Reads a file produced by BinWriter::save; throws Checkpoint when the
  /// file is missing, truncated, or fails its checksum.
  static BinReader load(const std::filesystem::path& path);

  template <typename T>
    requires std::is_arithmetic_v<T>
  T get() {
    T v;
    get_bytes(&v, sizeof(T));
    return v;
  }
  void get_bytes(void* out, std::size_t n) {
    if (n > buf_.size() - pos_) throw Error(ErrorKind::Checkpoint, "truncated checkpoint");
    std::memcpy(out, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    if (n > buf_.size() - pos_) throw Error(ErrorKind::Checkpoint, "truncated checkpoint");
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  template <typename T>
  std::vector<T> get_vector() {
    const auto n = get<std::uint64_t>();
    if (n > (buf_.size() - pos_) / sizeof(T)) throw Error(ErrorKind::Checkpoint, "truncated checkpoint");
    std::vector<T> v(n);
    get_bytes(v.data(), n * sizeof(T));
    return v;
  }
  bool at_end() const { return pos_ == buf_.size(); }

 private:
  std::vector<unsigned char> buf_;
  std::size_t pos_ = 0;
};

std::uint64_t fnv1a(const unsigned char* data, std::size_t n);

/// Writes `path.tmp` and renames it over `path`; throws Io on failure.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace advseg

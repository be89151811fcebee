#include "advseg/core/binio.hpp"

#include <fstream>
#include <iterator>

namespace advseg {

std::uint64_t fnv1a(const unsigned char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

void BinWriter::save(const std::filesystem::path& path) const {
  const std::uint64_t sum = fnv1a(buf_.data(), buf_.size());
  std::string bytes(reinterpret_cast<const char*>(buf_.data()), buf_.size());
  bytes.append(reinterpret_cast<const char*>(&sum), sizeof(sum));
  write_file_atomic(path, bytes);
}

BinReader BinReader::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Checkpoint, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < sizeof(std::uint64_t)) {
    throw Error(ErrorKind::Checkpoint, path.string() + " is too short");
  }
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + bytes.size() - sizeof(stored), sizeof(stored));
  bytes.resize(bytes.size() - sizeof(stored));
  if (fnv1a(bytes.data(), bytes.size()) != stored) {
    throw Error(ErrorKind::Checkpoint, path.string() + " is corrupt (checksum mismatch)");
  }
  return BinReader(std::move(bytes));
}

}  // namespace advseg

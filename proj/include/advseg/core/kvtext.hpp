#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace advseg {

/// `key = value` text with `#` comments. Every key must be consumed;
/// `finish()` throws InvalidConfig naming any key nobody asked for.
class KvReader {
 public:
  explicit KvReader(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  void read(const std::string& key, int& out);
  void read(const std::string& key, std::int64_t& out);
  void read(const std::string& key, std::uint64_t& out);
  void read(const std::string& key, double& out);
  void read(const std::string& key, bool& out);
  void read(const std::string& key, std::string& out);
  void read(const std::string& key, std::vector<int>& out);

  void finish() const;

 private:
  const std::string* take(const std::string& key);

  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
  std::set<std::string> used_;
};

class KvWriter {
 public:
  void write(const std::string& key, int v);
  void write(const std::string& key, std::int64_t v);
  void write(const std::string& key, std::uint64_t v);
  void write(const std::string& key, double v);
  void write(const std::string& key, bool v);
  void write(const std::string& key, const std::string& v);
  void write(const std::string& key, const char* v) { write(key, std::string(v)); }
  void write(const std::string& key, const std::vector<int>& v);

  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace advseg

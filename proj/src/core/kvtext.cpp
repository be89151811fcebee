#include "advseg/core/kvtext.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>

#include "advseg/core/error.hpp"

namespace advseg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& v, const char* what) {
  throw Error(ErrorKind::InvalidConfig, "key '" + key + "': '" + v + "' is not " + what);
}

template <typename I>
I parse_integral(const std::string& key, const std::string& v) {
  I out{};
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) bad_value(key, v, "an integer");
  return out;
}

}  // namespace

KvReader::KvReader(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::InvalidConfig,
                  "line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw Error(ErrorKind::InvalidConfig, "line " + std::to_string(lineno) + ": empty key");
    }
    if (values_.count(key)) {
      throw Error(ErrorKind::InvalidConfig, "duplicate key '" + key + "'");
    }
    values_[key] = trim(line.substr(eq + 1));
    lines_[key] = lineno;
  }
}

const std::string* KvReader::take(const std::string& key) {
  auto it = values_.find(key);
  if (it == values_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

void KvReader::read(const std::string& key, int& out) {
  if (auto* v = take(key)) out = parse_integral<int>(key, *v);
}
void KvReader::read(const std::string& key, std::int64_t& out) {
  if (auto* v = take(key)) out = parse_integral<std::int64_t>(key, *v);
}
void KvReader::read(const std::string& key, std::uint64_t& out) {
  if (auto* v = take(key)) out = parse_integral<std::uint64_t>(key, *v);
}

void KvReader::read(const std::string& key, double& out) {
  auto* v = take(key);
  if (!v) return;
  if (v->empty()) bad_value(key, *v, "a number");
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(v->c_str(), &end);
  if (end != v->c_str() + v->size() || errno == ERANGE) bad_value(key, *v, "a number");
  out = d;
}

void KvReader::read(const std::string& key, bool& out) {
  auto* v = take(key);
  if (!v) return;
  if (*v == "true" || *v == "1") {
    out = true;
  } else if (*v == "false" || *v == "0") {
    out = false;
  } else {
    bad_value(key, *v, "a boolean");
  }
}

void KvReader::read(const std::string& key, std::string& out) {
  if (auto* v = take(key)) out = *v;
}

void KvReader::read(const std::string& key, std::vector<int>& out) {
  auto* v = take(key);
  if (!v) return;
  out.clear();
  std::string item;
  std::istringstream in(*v);
  while (std::getline(in, item, ',')) out.push_back(parse_integral<int>(key, trim(item)));
}

void KvReader::finish() const {
  for (const auto& [key, value] : values_) {
    if (!used_.count(key)) {
      throw Error(ErrorKind::InvalidConfig, "unknown key '" + key + "' on line " +
                                                std::to_string(lines_.at(key)));
    }
  }
}

std::string format_double(double v) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

void KvWriter::write(const std::string& key, int v) { out_ << key << " = " << v << "\n"; }
void KvWriter::write(const std::string& key, std::int64_t v) { out_ << key << " = " << v << "\n"; }
void KvWriter::write(const std::string& key, std::uint64_t v) { out_ << key << " = " << v << "\n"; }
void KvWriter::write(const std::string& key, double v) {
  out_ << key << " = " << format_double(v) << "\n";
}
void KvWriter::write(const std::string& key, bool v) {
  out_ << key << " = " << (v ? "true" : "false") << "\n";
}
void KvWriter::write(const std::string& key, const std::string& v) {
  out_ << key << " = " << v << "\n";
}
void KvWriter::write(const std::string& key, const std::vector<int>& v) {
  out_ << key << " = ";
  for (std::size_t i = 0; i < v.size(); ++i) out_ << (i ? "," : "") << v[i];
  out_ << "\n";
}

}  // namespace advseg

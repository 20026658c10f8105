#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "poal/order.hpp"

/// Minimal comma-separated parsing shared by the dataset readers.
namespace poal::csv {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::filesystem::path& file, std::size_t line, const std::string& what)
      : std::runtime_error(file.string() + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Splits on commas; a blank line yields no fields.
inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  line = trim(line);
  if (line.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool is_integer(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

inline NodeId parse_node(std::string_view s, const std::filesystem::path& file, std::size_t line) {
  NodeId v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError(file, line, "invalid node id '" + std::string(s) + "'");
  return v;
}

inline double parse_real(std::string_view s, const std::filesystem::path& file, std::size_t line) {
  // strtod accepts "nan"/"inf"; reject them explicitly.
  const std::string buf(s);
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (buf.empty() || end != buf.c_str() + buf.size())
    throw ParseError(file, line, "invalid number '" + buf + "'");
  if (!std::isfinite(v)) throw ParseError(file, line, "non-finite value '" + buf + "'");
  return v;
}

}  // namespace poal::csv

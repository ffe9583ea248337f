#pragma once

// Line-oriented text helpers shared by the snapshot, bundle and config
// readers. Doubles are written in shortest round-trip form.

#include <charconv>
#include <cmath>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "cvgp/common.hpp"

namespace cvgp::textio {

inline std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string fmt(std::int64_t v) { return std::to_string(v); }

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline double parse_double(std::string_view tok, const std::string& ctx) {
  double v = 0.0;
  // from_chars rejects a leading '+'
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    // inf/nan spellings parse fine; anything else is malformed
    throw FormatError(ctx + ": cannot parse number '" + std::string(tok) + "'");
  }
  return v;
}

inline double parse_finite(std::string_view tok, const std::string& ctx) {
  double v = parse_double(tok, ctx);
  if (!std::isfinite(v)) throw FormatError(ctx + ": non-finite entry '" + std::string(tok) + "'");
  return v;
}

inline std::int64_t parse_int(std::string_view tok, const std::string& ctx) {
  std::int64_t v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw FormatError(ctx + ": cannot parse integer '" + std::string(tok) + "'");
  }
  return v;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace cvgp::textio

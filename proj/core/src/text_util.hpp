#pragma once

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fsmfusion/error.hpp"

namespace fsmfusion::detail {

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

inline std::string_view strip_comment(std::string_view line, char marker = '#') {
  auto pos = line.find(marker);
  return pos == std::string_view::npos ? line : line.substr(0, pos);
}

/// Calls `fn(line_number, tokens)` for every non-empty, comment-stripped line.
template <class Fn>
void for_each_line(std::string_view text, Fn&& fn, char comment = '#') {
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++lineno;
    auto toks = split_ws(strip_comment(line, comment));
    if (!toks.empty()) fn(lineno, toks);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
}

template <class T>
std::optional<T> parse_uint(std::string_view tok) {
  T v{};
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || p != tok.data() + tok.size()) return std::nullopt;
  return v;
}

inline std::optional<long long> parse_int(std::string_view tok) {
  long long v{};
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || p != tok.data() + tok.size()) return std::nullopt;
  return v;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace fsmfusion::detail

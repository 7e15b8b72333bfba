#pragma once

#include "tiltsmooth/errors.hpp"

#include <boost/tokenizer.hpp>

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace tiltsmooth::csv {

/// Header plus rows of string cells. `line[i]` is the 1-based file line of
/// row i (header is line 1).
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line;

  /// Column index by name, or throws LookupError listing the header.
  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name)
        return i;
    std::string have;
    for (const auto& h : header)
      have += (have.empty() ? "" : ", ") + h;
    throw LookupError("missing column '" + std::string(name) + "' (have: " + have + ")");
  }
};

inline std::vector<std::string> split_line(const std::string& line) {
  using Sep = boost::escaped_list_separator<char>;
  boost::tokenizer<Sep> tok(line, Sep('\\', ',', '"'));
  std::vector<std::string> cells;
  for (const auto& c : tok)
    cells.push_back(c);
  return cells;
}

inline Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path.string());
  Table t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (lineno == 1 && line.starts_with("\xEF\xBB\xBF"))
      line.erase(0, 3);
    if (line.empty())
      continue;
    std::vector<std::string> cells;
    try {
      cells = split_line(line);
    } catch (const boost::escaped_list_error& e) {
      throw ParseError(std::string("malformed CSV: ") + e.what(), lineno);
    }
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw ParseError("expected " + std::to_string(t.header.size()) + " fields, got " +
                           std::to_string(cells.size()),
                       lineno);
    t.rows.push_back(std::move(cells));
    t.line.push_back(lineno);
  }
  if (t.header.empty())
    throw ParseError("empty CSV file " + path.string());
  return t;
}

/// Strict full-string numeric parse.
inline double to_double(std::string_view s, std::size_t line) {
  while (!s.empty() && s.front() == ' ')
    s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ')
    s.remove_suffix(1);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
    throw ParseError("not a number: '" + std::string(s) + "'", line);
  return v;
}

inline long long to_integer(std::string_view s, std::size_t line) {
  while (!s.empty() && s.front() == ' ')
    s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ')
    s.remove_suffix(1);
  long long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ParseError("not an integer: '" + std::string(s) + "'", line);
  return v;
}

/// Full-precision decimal text for a double.
inline std::string exact(double v) {
  char buf[40];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

} // namespace tiltsmooth::csv

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <pcdc/error.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace pcdc::io {

/// Splits one CSV line on commas. Quoting is not supported; none of the
/// formats written here need it.
inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline double parse_double(std::string_view s, std::string_view what) {
  s = trim(s);
  double v = 0.0;
  const auto *end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end)
    throw ParseError("cannot parse " + std::string(what) + " from '" +
                     std::string(s) + "'");
  return v;
}

/// Shortest text that reads back to the identical double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::ifstream open_in(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  if (!in)
    throw IoError("cannot open for reading: " + p.string());
  return in;
}

inline std::ofstream open_out(const std::filesystem::path &p) {
  if (p.has_parent_path())
    std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot open for writing: " + p.string());
  return out;
}

inline void write_file(const std::filesystem::path &p, const std::string &text) {
  auto out = open_out(p);
  out << text;
  if (!out)
    throw IoError("write failed: " + p.string());
}

inline std::string read_file(const std::filesystem::path &p) {
  auto in = open_in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Reads a CSV file, checks the header line and returns the data rows.
inline std::vector<std::vector<std::string>>
read_csv(const std::filesystem::path &p, std::string_view expected_header) {
  auto in = open_in(p);
  std::string line;
  if (!std::getline(in, line))
    throw ParseError(p.string() + ": empty file");
  if (trim(line) != expected_header)
    throw ParseError(p.string() + ": expected header '" +
                     std::string(expected_header) + "', got '" +
                     std::string(trim(line)) + "'");
  std::vector<std::vector<std::string>> rows;
  std::size_t lineno = 1;
  const std::size_t ncols = split_fields(expected_header).size();
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty())
      continue;
    auto f = split_fields(trim(line));
    if (f.size() != ncols)
      throw ParseError(p.string() + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(ncols) + " fields, got " +
                       std::to_string(f.size()));
    std::vector<std::string> row;
    row.reserve(f.size());
    for (auto s : f)
      row.emplace_back(trim(s));
    rows.push_back(std::move(row));
  }
  return rows;
}

} // namespace pcdc::io

#pragma once

// Plain-text file formats. Numbers are written with 17 significant digits via
// std::to_chars and parsed with std::from_chars, so output is locale-independent
// and doubles round-trip exactly.
//
//   measurements (.rel):  "n m", then m lines "i j r11 r12 r13 r21 r22 r23 r31 r32 r33"
//   rotations (.gt/.est): "n",   then n lines "i r11 ... r33"
//   outliers:             one "i j" per line
//
// Indices are 1-based in files and 0-based in memory.

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include "rotsync/error.hpp"
#include "rotsync/so3.hpp"
#include "rotsync/sync.hpp"

namespace rotsync::io {

using so3::Rotation;

inline constexpr double kLoadTolerance = 1e-6;

inline std::string format_double(double v, int digits = 17) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, digits);
  return std::string(buf, res.ptr);
}

inline std::string format_fixed(double v, int decimals) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, decimals);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) ++pos;
    const std::size_t start = pos;
    while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t' && line[pos] != '\r') ++pos;
    if (pos > start) out.push_back(line.substr(start, pos - start));
  }
  return out;
}

template <class T>
T parse_number(std::string_view tok, int line_no) {
  T value{};
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line_no) + ": bad number '" + std::string(tok) + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": non-finite value");
    }
  }
  return value;
}

/// Lines with at least one token, with their 1-based line numbers.
inline std::vector<std::pair<int, std::vector<std::string_view>>> tokenize(const std::string& text) {
  std::vector<std::pair<int, std::vector<std::string_view>>> lines;
  std::string_view rest(text);
  int line_no = 0;
  while (!rest.empty()) {
    ++line_no;
    const std::size_t nl = rest.find('\n');
    const std::string_view line = rest.substr(0, nl);
    auto toks = split(line);
    if (!toks.empty()) lines.emplace_back(line_no, std::move(toks));
    if (nl == std::string_view::npos) break;
    rest.remove_prefix(nl + 1);
  }
  return lines;
}

inline Rotation parse_rotation(const std::vector<std::string_view>& toks, std::size_t first, int line_no,
                               int& projected) {
  Rotation R;
  for (int k = 0; k < 9; ++k) R(k / 3, k % 3) = parse_number<double>(toks[first + k], line_no);
  if (!so3::is_rotation(R, kLoadTolerance)) {
    try {
      R = so3::project_to_so3(R);
    } catch (const Error&) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": rotation block is singular");
    }
    ++projected;
  }
  return R;
}

inline void append_rotation(std::string& out, const Rotation& R) {
  for (int k = 0; k < 9; ++k) {
    out += ' ';
    out += format_double(R(k / 3, k % 3));
  }
}

inline std::string slurp(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoError, "read failed");
  return ss.str();
}

}  // namespace detail

struct LoadedMeasurements {
  sync::RelativeMeasurementSet set;
  int projected = 0;  // blocks that failed the 1e-6 check and were projected onto SO(3)
};

struct LoadedRotations {
  std::vector<Rotation> rotations;
  int projected = 0;
};

inline std::string format_measurements(const sync::RelativeMeasurementSet& m) {
  std::string out = std::to_string(m.n) + ' ' + std::to_string(m.edges.size()) + '\n';
  for (const auto& e : m.edges) {
    out += std::to_string(e.i + 1) + ' ' + std::to_string(e.j + 1);
    detail::append_rotation(out, e.R);
    out += '\n';
  }
  return out;
}

/// Parses a measurement file. Structural checks only (indices, counts, numbers);
/// graph invariants are checked by sync::validate.
inline LoadedMeasurements parse_measurements(const std::string& text) {
  const auto lines = detail::tokenize(text);
  if (lines.empty()) throw Error(ErrorCode::ParseError, "empty measurement file");
  const auto& [hline, header] = lines.front();
  if (header.size() != 2) throw Error(ErrorCode::ParseError, "header must be 'n m'");
  const long n = detail::parse_number<long>(header[0], hline);
  const long m = detail::parse_number<long>(header[1], hline);
  if (n < 1 || n > 1'000'000) throw Error(ErrorCode::ParseError, "n out of range");
  if (m < 0 || static_cast<std::size_t>(m) != lines.size() - 1) {
    throw Error(ErrorCode::ParseError, "edge count " + std::to_string(m) + " does not match " +
                                           std::to_string(lines.size() - 1) + " records");
  }
  LoadedMeasurements out;
  out.set.n = static_cast<int>(n);
  out.set.edges.reserve(static_cast<std::size_t>(m));
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto& [line_no, toks] = lines[k];
    if (toks.size() != 11) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected 11 fields");
    }
    const long i = detail::parse_number<long>(toks[0], line_no);
    const long j = detail::parse_number<long>(toks[1], line_no);
    if (i < 1 || j < 1 || i > n || j > n || i >= j) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": need 1 <= i < j <= n");
    }
    sync::Edge e;
    e.i = static_cast<int>(i - 1);
    e.j = static_cast<int>(j - 1);
    e.R = detail::parse_rotation(toks, 2, line_no, out.projected);
    out.set.edges.push_back(e);
  }
  return out;
}

inline std::string format_rotations(const std::vector<Rotation>& rotations) {
  std::string out = std::to_string(rotations.size()) + '\n';
  for (std::size_t i = 0; i < rotations.size(); ++i) {
    out += std::to_string(i + 1);
    detail::append_rotation(out, rotations[i]);
    out += '\n';
  }
  return out;
}

inline LoadedRotations parse_rotations(const std::string& text) {
  const auto lines = detail::tokenize(text);
  if (lines.empty()) throw Error(ErrorCode::ParseError, "empty rotation file");
  const auto& [hline, header] = lines.front();
  if (header.size() != 1) throw Error(ErrorCode::ParseError, "header must be 'n'");
  const long n = detail::parse_number<long>(header[0], hline);
  if (n < 1 || n > 1'000'000) throw Error(ErrorCode::ParseError, "n out of range");
  if (static_cast<std::size_t>(n) != lines.size() - 1) {
    throw Error(ErrorCode::ParseError, "expected " + std::to_string(n) + " records");
  }
  LoadedRotations out;
  out.rotations.assign(static_cast<std::size_t>(n), Rotation::Identity());
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto& [line_no, toks] = lines[k];
    if (toks.size() != 10) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected 10 fields");
    }
    const long i = detail::parse_number<long>(toks[0], line_no);
    if (i < 1 || i > n || seen[i - 1]) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad or repeated index");
    }
    seen[i - 1] = true;
    out.rotations[i - 1] = detail::parse_rotation(toks, 1, line_no, out.projected);
  }
  return out;
}

inline std::string format_edge_list(const std::vector<sync::EdgeKey>& edges) {
  std::string out;
  for (const auto& [i, j] : edges) out += std::to_string(i + 1) + ' ' + std::to_string(j + 1) + '\n';
  return out;
}

inline std::vector<sync::EdgeKey> parse_edge_list(const std::string& text) {
  std::vector<sync::EdgeKey> out;
  for (const auto& [line_no, toks] : detail::tokenize(text)) {
    if (toks.size() != 2) throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected 'i j'");
    const int i = detail::parse_number<int>(toks[0], line_no);
    const int j = detail::parse_number<int>(toks[1], line_no);
    if (i < 1 || j < 1) throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad index");
    out.emplace_back(i - 1, j - 1);
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  return detail::slurp(in);
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << content;
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write to '" + path + "' failed");
}

inline void append_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for append");
  out << content;
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write to '" + path + "' failed");
}

inline LoadedMeasurements load_measurements(const std::string& path) {
  return parse_measurements(read_file(path));
}
inline void save_measurements(const std::string& path, const sync::RelativeMeasurementSet& m) {
  write_file(path, format_measurements(m));
}
inline LoadedRotations load_rotations(const std::string& path) { return parse_rotations(read_file(path)); }
inline void save_rotations(const std::string& path, const std::vector<Rotation>& r) {
  write_file(path, format_rotations(r));
}

}  // namespace rotsync::io

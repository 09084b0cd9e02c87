// csv.hpp - deterministic CSV tables with a '#' metadata header.

#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "eitbs/core.hpp"

namespace eitbs {

/// %.10g, with zero, nan and inf spelled the same on every platform.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // no "-0"
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct Table {
  std::string name;  // file stem
  std::vector<std::string> meta;  // scenario-specific header lines, after the config block
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) {
    if (row.size() != columns.size()) throw DomainError("Table " + name + ": row width does not match columns");
    rows.push_back(std::move(row));
  }
};

inline std::string cell(double v) { return format_number(v); }
inline std::string cell(std::size_t v) { return std::to_string(v); }
inline std::string cell(int v) { return std::to_string(v); }
inline std::string cell(bool v) { return v ? "1" : "0"; }
inline std::string cell(const char* v) { return v; }
inline std::string cell(const std::string& v) { return v; }

template <typename... Ts>
std::vector<std::string> row(const Ts&... vs) {
  return {cell(vs)...};
}

inline void write_table(std::ostream& out, const std::vector<std::string>& header, const Table& t) {
  for (const auto& h : header) out << "# " << h << '\n';
  for (const auto& m : t.meta) out << "# " << m << '\n';
  for (std::size_t k = 0; k < t.columns.size(); ++k) out << (k ? "," : "") << t.columns[k];
  out << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t k = 0; k < r.size(); ++k) out << (k ? "," : "") << r[k];
    out << '\n';
  }
}

inline std::filesystem::path write_table(const std::filesystem::path& dir, const std::vector<std::string>& header,
                                         const Table& t) {
  const auto path = dir / (t.name + ".csv");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_table(out, header, t);
  if (!out) throw Error("write failed: " + path.string());
  return path;
}

}  // namespace eitbs

#pragma once
// Deterministic text I/O: CSV tables with locale-independent 17-significant-
// digit floats, sparse-matrix coordinate export, and CSV-backed potential
// loading with named presets. Everything here produces byte-stable output for
// a given input, independent of locale, platform FP printing quirks, or
// worker count, so artifacts can be diffed in regression tests.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "alloylab/core.hpp"
#include "alloylab/grid.hpp"
#include "alloylab/potential.hpp"

#include <Eigen/SparseCore>

namespace alloylab {

// ---------------------------------------------------------------------------
// Number formatting / parsing (locale-independent, round-trip safe).

// 17 significant digits round-trip every finite double exactly.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  ensure(res.ec == std::errc(), "format_double: to_chars failed");
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, const std::string& context) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  // Tolerate leading whitespace and a leading '+' (from_chars accepts neither).
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  if (first != last && *first == '+') ++first;
  auto res = std::from_chars(first, last, v);
  while (res.ptr != last && (*res.ptr == ' ' || *res.ptr == '\t' || *res.ptr == '\r')) ++res.ptr;
  if (res.ec != std::errc() || res.ptr != last)
    throw ConfigError(context + ": cannot parse '" + std::string(text) + "' as a real number");
  return v;
}

inline long long parse_int(std::string_view text, const std::string& context) {
  long long v = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  if (first != last && *first == '+') ++first;
  auto res = std::from_chars(first, last, v);
  while (res.ptr != last && (*res.ptr == ' ' || *res.ptr == '\t' || *res.ptr == '\r')) ++res.ptr;
  if (res.ec != std::errc() || res.ptr != last)
    throw ConfigError(context + ": cannot parse '" + std::string(text) + "' as an integer");
  return v;
}

// ---------------------------------------------------------------------------
// CSV writing. Header row, ',' separator, '.' decimal point, '\n' line ends.

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
    require(!header.empty(), "CsvWriter: header must name at least one column");
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) body_ += ',';
      body_ += header[i];
    }
    body_ += '\n';
  }

  template <class... Cells>
  void row(const Cells&... cells) {
    require(sizeof...(cells) == columns_, "CsvWriter: row width does not match header");
    std::size_t i = 0;
    ((append_cell(cells, i++)), ...);
    body_ += '\n';
    ++rows_;
  }

  const std::string& body() const { return body_; }
  std::size_t rows() const { return rows_; }

 private:
  void append_cell(double v, std::size_t i) { sep(i); body_ += format_double(v); }
  void append_cell(float v, std::size_t i) { sep(i); body_ += format_double(v); }
  void append_cell(bool v, std::size_t i) { sep(i); body_ += (v ? '1' : '0'); }
  void append_cell(const std::string& v, std::size_t i) { sep(i); body_ += v; }
  void append_cell(const char* v, std::size_t i) { sep(i); body_ += v; }
  template <class Int>
    requires std::integral<Int>
  void append_cell(Int v, std::size_t i) {
    sep(i);
    body_ += std::to_string(v);
  }
  void sep(std::size_t i) {
    if (i) body_ += ',';
  }

  std::size_t columns_ = 0;
  std::size_t rows_ = 0;
  std::string body_;
};

// ---------------------------------------------------------------------------
// CSV reading (plain comma-split; our artifacts never quote cells).

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t columns() const { return header.size(); }

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw ConfigError("csv: missing required column '" + name + "'");
  }
};

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    std::string cell = line.substr(start, comma == std::string::npos ? comma : comma - start);
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    cells.push_back(std::move(cell));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}
}  // namespace detail

inline CsvTable parse_csv(const std::string& text, const std::string& context) {
  CsvTable table;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
    pos = nl == std::string::npos ? text.size() : nl + 1;
    if (line.empty() || line == "\r") continue;
    auto cells = detail::split_csv_line(line);
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != table.header.size())
        throw ConfigError(context + ": row has " + std::to_string(cells.size()) +
                          " cells, header has " + std::to_string(table.header.size()));
      table.rows.push_back(std::move(cells));
    }
  }
  if (first) throw ConfigError(context + ": empty csv (no header row)");
  return table;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file for reading: " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return content;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open file for writing: " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw ConfigError("write failed: " + path.string());
}

inline CsvTable read_csv_file(const std::filesystem::path& path) {
  return parse_csv(read_text_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Sparse-matrix export, coordinate text format. First line "rows cols nnz";
// each stored entry follows as "row col value" (0-based indices). Entries are
// emitted in column-major stored order, which is deterministic for a
// compressed matrix.

inline std::string matrix_coordinate_text(const Eigen::SparseMatrix<double>& m) {
  Eigen::SparseMatrix<double> c = m;
  c.makeCompressed();
  std::string out = std::to_string(c.rows()) + ' ' + std::to_string(c.cols()) + ' ' +
                    std::to_string(c.nonZeros()) + '\n';
  for (int k = 0; k < c.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(c, k); it; ++it) {
      out += std::to_string(it.row());
      out += ' ';
      out += std::to_string(it.col());
      out += ' ';
      out += format_double(it.value());
      out += '\n';
    }
  return out;
}

// ---------------------------------------------------------------------------
// Potential loading: CSV of local node coordinates and values.
//
// Expected header: k1[,k2[,k3]],value with one row per closed-cell node,
// kj in 0..n (n+1 samples per axis), each node exactly once.

inline UnitCellField load_unit_cell_field_csv(const std::filesystem::path& path, GridSpec spec) {
  spec.validate();
  CsvTable table = read_csv_file(path);
  const std::string ctx = path.string();
  if (table.columns() != static_cast<std::size_t>(spec.d) + 1)
    throw ConfigError(ctx + ": expected " + std::to_string(spec.d + 1) +
                      " columns (k1..k" + std::to_string(spec.d) + ",value), got " +
                      std::to_string(table.columns()));
  int cols[3] = {-1, -1, -1};
  for (int j = 0; j < spec.d; ++j) cols[j] = table.column("k" + std::to_string(j + 1));
  const int value_col = table.column("value");

  const std::size_t total = static_cast<std::size_t>(UnitCellField::num_samples(spec));
  std::vector<double> samples(total, 0.0);
  std::vector<bool> seen(total, false);
  UnitCellField probe(spec, std::vector<double>(total, 0.0));  // for local_index only

  for (const auto& row : table.rows) {
    IVec l{0, 0, 0};
    for (int j = 0; j < spec.d; ++j) {
      const long long k = parse_int(row[static_cast<std::size_t>(cols[j])], ctx);
      if (k < 0 || k > spec.n)
        throw ConfigError(ctx + ": node coordinate " + std::to_string(k) +
                          " outside 0.." + std::to_string(spec.n));
      l[static_cast<std::size_t>(j)] = static_cast<int>(k);
    }
    const auto idx = static_cast<std::size_t>(probe.local_index(l));
    if (seen[idx]) throw ConfigError(ctx + ": duplicate row for node " + to_string(l, spec.d));
    seen[idx] = true;
    samples[idx] = parse_double(row[static_cast<std::size_t>(value_col)], ctx);
  }
  for (std::size_t i = 0; i < total; ++i)
    if (!seen[i]) throw ConfigError(ctx + ": csv does not cover every node of the closed cell");
  return UnitCellField(spec, std::move(samples));
}

inline PeriodicPotential load_periodic_potential_csv(const std::filesystem::path& path,
                                                     GridSpec spec) {
  return PeriodicPotential(load_unit_cell_field_csv(path, spec));
}

inline SingleSitePotential load_single_site_csv(const std::filesystem::path& path,
                                                GridSpec spec) {
  return SingleSitePotential(load_unit_cell_field_csv(path, spec));
}

// ---------------------------------------------------------------------------
// Named presets. Grammar: NAME or NAME(REAL), e.g. "cosine", "kn-bump(0.5)".

struct PresetName {
  std::string name;
  std::optional<double> argument;
};

inline PresetName parse_preset(const std::string& text) {
  PresetName p;
  const std::size_t open = text.find('(');
  if (open == std::string::npos) {
    p.name = text;
    return p;
  }
  if (text.empty() || text.back() != ')')
    throw ConfigError("preset '" + text + "': expected NAME or NAME(REAL)");
  p.name = text.substr(0, open);
  p.argument = parse_double(text.substr(open + 1, text.size() - open - 2), "preset '" + text + "'");
  return p;
}

// Background (periodic) potential presets: "zero", "cosine", "cosine(amp)".
inline PeriodicPotential periodic_preset(const std::string& text, GridSpec spec) {
  const PresetName p = parse_preset(text);
  if (p.name == "zero") {
    if (p.argument) throw ConfigError("preset 'zero' takes no argument");
    return make_zero_potential(spec);
  }
  if (p.name == "cosine") return make_cosine_potential(spec, p.argument.value_or(1.0));
  throw ConfigError("unknown background potential preset '" + p.name +
                    "' (available: zero, cosine)");
}

// Single-site potential presets: "zero", "bump(amp)", "kn-bump(amp)".
inline SingleSitePotential single_site_preset(const std::string& text, GridSpec spec) {
  const PresetName p = parse_preset(text);
  if (p.name == "zero") {
    if (p.argument) throw ConfigError("preset 'zero' takes no argument");
    return SingleSitePotential(
        UnitCellField::from_function(spec, [](const double*) { return 0.0; }));
  }
  if (p.name == "bump") return make_bump_single_site(spec, p.argument.value_or(1.0));
  if (p.name == "dipole") return make_dipole_single_site(spec, p.argument.value_or(1.0));
  if (p.name == "kn-bump") return kn_single_site(p.argument.value_or(0.5), spec).u;
  throw ConfigError("unknown single-site potential preset '" + p.name +
                    "' (available: zero, bump, dipole, kn-bump)");
}

}  // namespace alloylab

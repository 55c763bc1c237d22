#include "cregmm/csv_io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <system_error>

#include "cregmm/errors.hpp"
#include "cregmm/format.hpp"

namespace cregmm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& text, double& out) {
  const char* b = text.data();
  const char* e = b + text.size();
  if (b != e && *b == '+') ++b;
  auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e;
}

}  // namespace

std::vector<std::string> split_csv_record(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

PanelDataset read_panel_csv(std::istream& in, const PanelCsvSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::MissingColumn, "file has no header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> header = split_csv_record(line);
  for (auto& h : header) h = trim(h);
  int ucol = -1, tcol = -1;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == schema.unit) ucol = static_cast<int>(j);
    if (header[j] == schema.time) tcol = static_cast<int>(j);
  }
  if (ucol < 0) throw Error(ErrorKind::MissingColumn, "unit column '" + schema.unit + "'");
  if (tcol < 0) throw Error(ErrorKind::MissingColumn, "time column '" + schema.time + "'");

  std::vector<PanelRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_csv_record(line);
    if (f.size() != header.size())
      throw Error(ErrorKind::NonNumericCell, "line " + std::to_string(lineno) + ": expected " +
                                                 std::to_string(header.size()) + " fields, found " +
                                                 std::to_string(f.size()));
    PanelRow row;
    for (std::size_t j = 0; j < f.size(); ++j) {
      const std::string cell = trim(f[j]);
      double v = kMissing;
      if (!cell.empty() && !parse_number(cell, v))
        throw Error(ErrorKind::NonNumericCell, "line " + std::to_string(lineno) + ", column " + header[j] + ": '" +
                                                   cell + "'");
      if (static_cast<int>(j) == ucol) {
        if (cell.empty() || !std::isfinite(v) || std::floor(v) != v)
          throw Error(ErrorKind::NonNumericCell, "line " + std::to_string(lineno) + ", column " + header[j] +
                                                     ": unit id must be an integer");
        row.unit = static_cast<std::int64_t>(v);
      } else if (static_cast<int>(j) == tcol) {
        if (cell.empty())
          throw Error(ErrorKind::NonNumericCell, "line " + std::to_string(lineno) + ", column " + header[j] + ": empty");
        row.period = v;
      } else {
        row.values.emplace_back(header[j], v);
      }
    }
    rows.push_back(std::move(row));
  }
  return PanelDataset::build(rows);
}

PanelDataset read_panel_csv(const std::string& path, const PanelCsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path);
  return read_panel_csv(in, schema);
}

void write_panel_csv(std::ostream& out, const PanelDataset& panel, bool include_latents,
                     const PanelCsvSchema& schema) {
  std::vector<std::string> cols;
  for (const auto& c : panel.column_names())
    if (include_latents || !panel.is_latent(c)) cols.push_back(c);
  out << schema.unit << ',' << schema.time;
  for (const auto& c : cols) out << ',' << c;
  out << '\n';
  std::vector<const Column*> data;
  for (const auto& c : cols) data.push_back(&panel.column(c));
  for (std::size_t i = 0; i < panel.n_units(); ++i)
    for (std::int64_t t = panel.first_period(); t <= panel.last_period(); ++t) {
      if (!panel.observed(i, t)) continue;
      out << panel.units()[i] << ',' << t;
      const std::size_t cell = panel.cell(i, t);
      for (const Column* d : data) out << ',' << format_shortest((*d)[cell]);
      out << '\n';
    }
  if (!out) throw Error(ErrorKind::IoFailure, "write failed");
}

void write_panel_csv(const std::string& path, const PanelDataset& panel, bool include_latents,
                     const PanelCsvSchema& schema) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot open " + path + " for writing");
  write_panel_csv(out, panel, include_latents, schema);
}

}  // namespace cregmm

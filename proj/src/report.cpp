#include "cregmm/report.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "cregmm/errors.hpp"
#include "cregmm/format.hpp"
#include "cregmm/linalg.hpp"

namespace cregmm {

namespace {

bool is_dummy(const std::string& n) {
  return n.size() > 1 && n[0] == 'T' && std::all_of(n.begin() + 1, n.end(), [](char c) { return c == '-' || std::isdigit(static_cast<unsigned char>(c)); });
}

std::string stars(double p) {
  if (!(p == p)) return {};
  if (p < 0.01) return "***";
  if (p < 0.05) return "**";
  if (p < 0.1) return "*";
  return {};
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table build_table(const std::vector<EstimationResult>& results, bool with_stars) {
  if (results.empty()) throw Error(ErrorKind::InvalidArgument, "no results to write");
  Table t;
  t.header.push_back("");
  for (const auto& r : results) t.header.push_back(r.estimator_tag);

  std::vector<std::string> terms;
  for (const auto& r : results)
    for (const auto& n : r.names)
      if (!is_dummy(n) && std::find(terms.begin(), terms.end(), n) == terms.end()) terms.push_back(n);
  // constant goes last, as in the usual layout
  if (auto it = std::find(terms.begin(), terms.end(), "_cons"); it != terms.end()) {
    terms.erase(it);
    terms.push_back("_cons");
  }

  for (const auto& term : terms) {
    std::vector<std::string> c{term}, s{""};
    for (const auto& r : results) {
      const int k = r.index_of(term);
      if (k < 0) {
        c.emplace_back();
        s.emplace_back();
        continue;
      }
      const double b = r.coef(k);
      double se = kMissing;
      if (std::isfinite(b) && r.vcov.rows() == r.coef.size() && r.vcov(k, k) >= 0) se = std::sqrt(r.vcov(k, k));
      std::string cell = format_fixed(b, 4);
      if (with_stars && se > 0) cell += stars(normal_two_sided_p(b / se));
      c.push_back(cell);
      s.push_back(se == se ? "(" + format_fixed(se, 4) + ")" : "");
    }
    t.rows.push_back(std::move(c));
    t.rows.push_back(std::move(s));
  }

  auto add = [&](const std::string& label, auto get) {
    std::vector<std::string> row{label};
    for (const auto& r : results) row.push_back(get(r));
    t.rows.push_back(std::move(row));
  };
  auto pval = [](const auto& opt) { return opt && opt->defined ? format_fixed(opt->p, 4) : std::string(); };
  add("NT", [](const EstimationResult& r) { return std::to_string(r.n_obs); });
  add("N", [](const EstimationResult& r) { return std::to_string(r.n_units); });
  add("Tavg", [](const EstimationResult& r) {
    return r.n_units ? format_fixed(static_cast<double>(r.n_obs) / static_cast<double>(r.n_units), 2) : std::string();
  });
  for (int m = 0; m < 3; ++m)
    add("ar" + std::to_string(m + 1) + " pval.", [&](const EstimationResult& r) { return pval(r.diag.ar[static_cast<std::size_t>(m)]); });
  add("Hansen pval.", [&](const EstimationResult& r) { return pval(r.diag.hansen); });
  add("Hausman pval.", [&](const EstimationResult& r) { return pval(r.diag.hausman); });
  add("Time dummies pval.", [&](const EstimationResult& r) { return pval(r.diag.time_dummies); });
  add("R2", [](const EstimationResult& r) { return r.diag.r2 ? format_fixed(*r.diag.r2, 4) : std::string(); });
  add("Instruments", [](const EstimationResult& r) {
    return r.diag.n_instruments ? std::to_string(r.diag.n_instruments) : std::string();
  });
  return t;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

}  // namespace

ResultFormat parse_result_format(const std::string& s) {
  if (s == "table-csv") return ResultFormat::TableCsv;
  if (s == "summary-text") return ResultFormat::SummaryText;
  throw Error(ErrorKind::InvalidArgument, "unknown result format '" + s + "'");
}

const char* result_format_name(ResultFormat f) { return f == ResultFormat::TableCsv ? "table-csv" : "summary-text"; }

void write_results(std::ostream& out, const std::vector<EstimationResult>& results, ResultFormat format) {
  const Table t = build_table(results, format == ResultFormat::SummaryText);
  if (format == ResultFormat::TableCsv) {
    auto line = [&](const std::vector<std::string>& row) {
      for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << csv_cell(row[j]);
      out << '\n';
    };
    std::vector<std::string> h = t.header;
    h[0] = "term";
    line(h);
    for (const auto& r : t.rows) line(r);
  } else {
    std::vector<std::size_t> w(t.header.size(), 0);
    auto widen = [&](const std::vector<std::string>& row) {
      for (std::size_t j = 0; j < row.size(); ++j) w[j] = std::max(w[j], row[j].size());
    };
    widen(t.header);
    for (const auto& r : t.rows) widen(r);
    auto line = [&](const std::vector<std::string>& row) {
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j == 0)
          out << std::left << std::setw(static_cast<int>(w[j])) << row[j];
        else
          out << "  " << std::right << std::setw(static_cast<int>(w[j])) << row[j];
      }
      out << '\n';
    };
    line(t.header);
    std::size_t total = w[0];
    for (std::size_t j = 1; j < w.size(); ++j) total += w[j] + 2;
    out << std::string(total, '-') << '\n';
    for (const auto& r : t.rows) {
      if (r[0] == "NT") out << std::string(total, '-') << '\n';
      line(r);
    }
    for (const auto& r : results)
      for (const auto& n : r.diag.notes) out << "note (" << r.estimator_tag << "): " << n << '\n';
  }
  if (!out) throw Error(ErrorKind::IoFailure, "write failed");
}

void write_results(const std::string& path, const std::vector<EstimationResult>& results, ResultFormat format) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot open " + path + " for writing");
  write_results(out, results, format);
}

void write_decomposition(std::ostream& out, const std::string& var, const DecompositionReport& d) {
  auto pct = [](double v) { return format_fixed(100.0 * v, 2) + "%"; };
  out << "variance decomposition of " << var << " (" << d.n_obs << " observations)\n"
      << "  between               " << pct(d.between_share) << '\n'
      << "  within                " << pct(d.within_share) << '\n'
      << "    common              " << pct(d.within_common_share) << '\n'
      << "    unit-specific       " << pct(d.within_unitspecific_share) << '\n';
  if (!out) throw Error(ErrorKind::IoFailure, "write failed");
}

}  // namespace cregmm

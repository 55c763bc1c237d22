#pragma once

#include <initializer_list>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cregmm/errors.hpp"
#include "cregmm/panel.hpp"
#include "doctest.h"

namespace th {

using cregmm::PanelRow;

// rows of (unit, period, {name, value}...)
inline cregmm::PanelDataset make_panel(std::initializer_list<PanelRow> rows) {
  std::vector<PanelRow> v(rows);
  return cregmm::PanelDataset::build(v);
}

// Balanced panel with columns filled by f(unit_index, period, column).
template <class F>
cregmm::PanelDataset balanced(int N, int T, const std::vector<std::string>& cols, F f, std::int64_t first = 1) {
  std::vector<PanelRow> rows;
  for (int i = 0; i < N; ++i)
    for (int t = 0; t < T; ++t) {
      PanelRow r;
      r.unit = i + 1;
      r.period = static_cast<double>(first + t);
      for (std::size_t c = 0; c < cols.size(); ++c) r.values.emplace_back(cols[c], f(i, first + t, c));
      rows.push_back(r);
    }
  return cregmm::PanelDataset::build(rows);
}

inline double at(const cregmm::PanelDataset& p, const cregmm::Column& c, std::int64_t unit, std::int64_t t) {
  const auto& u = p.units();
  for (std::size_t i = 0; i < u.size(); ++i)
    if (u[i] == unit) return c[p.cell(i, t)];
  FAIL("unit not found");
  return 0;
}

// Equal cell by cell, missing matching missing.
inline bool same_column(const cregmm::Column& a, const cregmm::Column& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (cregmm::is_missing(a[i]) != cregmm::is_missing(b[i]) || (!cregmm::is_missing(a[i]) && a[i] != b[i])) return false;
  return true;
}

template <class F>
cregmm::ErrorKind error_kind(F f) {
  try {
    f();
  } catch (const cregmm::Error& e) {
    return e.kind();
  }
  FAIL("expected a cregmm::Error");
  return cregmm::ErrorKind::IoFailure;
}

}  // namespace th

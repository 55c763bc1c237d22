#include "cregmm/design.hpp"

#include <algorithm>
#include <set>

#include "cregmm/errors.hpp"

namespace cregmm {

std::string term_name(const std::string& var, int lag) {
  if (lag == 0) return var;
  if (lag == 1) return "L." + var;
  return "L" + std::to_string(lag) + "." + var;
}

const char* exogeneity_name(Exogeneity e) {
  switch (e) {
    case Exogeneity::Strict: return "strict";
    case Exogeneity::Predetermined: return "predetermined";
    case Exogeneity::Endogenous: return "endogenous";
  }
  return "endogenous";
}

Exogeneity parse_exogeneity(const std::string& s) {
  if (s == "strict" || s == "strictly-exogenous") return Exogeneity::Strict;
  if (s == "predetermined") return Exogeneity::Predetermined;
  if (s == "endogenous") return Exogeneity::Endogenous;
  throw Error(ErrorKind::TypeMismatch, "exogeneity must be strict, predetermined or endogenous, got '" + s + "'");
}

const char* average_set_name(AverageSet a) {
  switch (a) {
    case AverageSet::None: return "none";
    case AverageSet::YOnly: return "y-only";
    case AverageSet::YAndX: return "y-and-x";
  }
  return "none";
}

AverageSet parse_average_set(const std::string& s) {
  if (s == "none") return AverageSet::None;
  if (s == "y-only") return AverageSet::YOnly;
  if (s == "y-and-x") return AverageSet::YAndX;
  throw Error(ErrorKind::TypeMismatch, "include_averages must be none, y-only or y-and-x, got '" + s + "'");
}

namespace {

void require_estimable(const PanelDataset& panel, const std::string& var) {
  if (!panel.has_column(var)) throw Error(ErrorKind::UnknownVariable, var);
  if (panel.is_latent(var)) throw Error(ErrorKind::InvalidArgument, "'" + var + "' is a latent column");
}

}  // namespace

void ModelSpec::validate(const PanelDataset& panel) const {
  require_estimable(panel, dependent);
  if (ar_order < 0 || ar_order > 1) throw Error(ErrorKind::InvalidArgument, "ar_order must be 0 or 1");
  for (const auto& x : x_terms) {
    require_estimable(panel, x.name);
    if (x.lag < 0 || x.lag > 1) throw Error(ErrorKind::InvalidArgument, "x lag must be 0 or 1 for '" + x.name + "'");
  }
  for (const auto& w : w_terms) {
    require_estimable(panel, w);
    const Column& v = panel.column(w);
    for (std::size_t i = 0; i < panel.n_units(); ++i) {
      double first = kMissing;
      for (std::int64_t t = panel.first_period(); t <= panel.last_period(); ++t) {
        if (!panel.observed(i, t)) continue;
        const double val = v[panel.cell(i, t)];
        if (is_missing(val)) continue;
        if (is_missing(first))
          first = val;
        else if (val != first)
          throw Error(ErrorKind::InvalidArgument,
                      "w term '" + w + "' varies within unit " + std::to_string(panel.units()[i]));
      }
    }
  }
  if (presample_end && *presample_end >= panel.last_period())
    throw Error(ErrorKind::EmptyEstimationSample, "pre-sample end " + std::to_string(*presample_end) +
                                                      " is not before the last period " +
                                                      std::to_string(panel.last_period()));
}

std::vector<std::string> Design::names() const {
  std::vector<std::string> out;
  out.reserve(terms.size());
  for (const auto& t : terms) out.push_back(t.name);
  return out;
}

int Design::index_of(const std::string& name) const {
  for (std::size_t k = 0; k < terms.size(); ++k)
    if (terms[k].name == name) return static_cast<int>(k);
  return -1;
}

void rebuild_clusters(Design& d) {
  d.cluster_start.clear();
  for (std::size_t r = 0; r < d.unit.size(); ++r)
    if (r == 0 || d.unit[r] != d.unit[r - 1]) d.cluster_start.push_back(r);
  d.cluster_start.push_back(d.unit.size());
}

Design assemble_design(const PanelDataset& panel, const ModelSpec& spec, const DesignOptions& options) {
  spec.validate(panel);

  struct Source {
    Term term;
    const Column* values;
  };
  std::vector<Column> owned;
  owned.reserve(2 + spec.x_terms.size());
  std::vector<Source> sources;
  if (spec.ar_order == 1) {
    owned.push_back(lag(panel, spec.dependent, 1));
    sources.push_back({{term_name(spec.dependent, 1), TermKind::LaggedDependent, spec.dependent, 1}, nullptr});
  }
  for (const auto& x : spec.x_terms) {
    if (x.lag == 0) {
      sources.push_back({{x.name, TermKind::Regressor, x.name, 0}, &panel.column(x.name)});
    } else {
      owned.push_back(lag(panel, x.name, x.lag));
      sources.push_back({{term_name(x.name, x.lag), TermKind::Regressor, x.name, x.lag}, nullptr});
    }
  }
  {
    std::size_t k = 0;
    for (auto& s : sources)
      if (!s.values) s.values = &owned[k++];
  }
  for (const auto& w : spec.w_terms) sources.push_back({{w, TermKind::TimeInvariant, w, 0}, &panel.column(w)});
  for (const auto& e : options.extras) {
    if (e.values.size() != panel.n_units() * panel.n_periods())
      throw Error(ErrorKind::InvalidArgument, "extra column '" + e.term.name + "' has wrong length");
    sources.push_back({e.term, &e.values});
  }

  std::set<std::string> seen;
  for (const auto& s : sources)
    if (!seen.insert(s.term.name).second)
      throw Error(ErrorKind::InvalidArgument, "duplicate term '" + s.term.name + "'");

  const Column& yv = panel.column(spec.dependent);
  const std::int64_t lo = options.first_period.value_or(panel.first_period());
  std::vector<std::size_t> cells;
  std::vector<std::size_t> units;
  std::vector<std::int64_t> periods;
  for (std::size_t i = 0; i < panel.n_units(); ++i) {
    for (std::int64_t t = std::max(lo, panel.first_period()); t <= panel.last_period(); ++t) {
      if (!panel.observed(i, t)) continue;
      const std::size_t c = panel.cell(i, t);
      if (is_missing(yv[c])) continue;
      bool ok = true;
      for (const auto& s : sources)
        if (is_missing((*s.values)[c])) {
          ok = false;
          break;
        }
      if (!ok) continue;
      cells.push_back(c);
      units.push_back(i);
      periods.push_back(t);
    }
  }
  if (cells.empty()) throw Error(ErrorKind::EmptySample, "no complete-case rows for '" + spec.dependent + "'");

  std::vector<std::int64_t> dummy_periods;
  if (spec.time_dummies) {
    std::set<std::int64_t> ps(periods.begin(), periods.end());
    dummy_periods.assign(ps.begin(), ps.end());
    if ((options.constant || options.unit_effects) && !dummy_periods.empty()) dummy_periods.erase(dummy_periods.begin());
  }

  Design d;
  const std::size_t n = cells.size();
  if (options.constant) d.terms.push_back({"_cons", TermKind::Constant, "", 0});
  for (const auto& s : sources) d.terms.push_back(s.term);
  for (auto p : dummy_periods) d.terms.push_back({"T" + std::to_string(p), TermKind::TimeDummy, "", 0});

  d.y.resize(static_cast<Eigen::Index>(n));
  d.X.setZero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d.terms.size()));
  for (std::size_t r = 0; r < n; ++r) {
    const auto ri = static_cast<Eigen::Index>(r);
    d.y(ri) = yv[cells[r]];
    Eigen::Index k = 0;
    if (options.constant) d.X(ri, k++) = 1.0;
    for (const auto& s : sources) d.X(ri, k++) = (*s.values)[cells[r]];
    for (auto p : dummy_periods) d.X(ri, k++) = (periods[r] == p) ? 1.0 : 0.0;
  }
  d.unit_id.reserve(units.size());
  for (auto u : units) d.unit_id.push_back(panel.units()[u]);
  d.unit = std::move(units);
  d.period = std::move(periods);
  rebuild_clusters(d);
  return d;
}

Design keep_columns(const Design& d, const std::vector<int>& keep) {
  Design out;
  out.y = d.y;
  out.X.resize(d.X.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    out.X.col(static_cast<Eigen::Index>(k)) = d.X.col(keep[k]);
    out.terms.push_back(d.terms[static_cast<std::size_t>(keep[k])]);
  }
  out.unit = d.unit;
  out.unit_id = d.unit_id;
  out.period = d.period;
  out.cluster_start = d.cluster_start;
  return out;
}

Design keep_rows(const Design& d, const std::vector<char>& keep) {
  Design out;
  out.terms = d.terms;
  std::vector<Eigen::Index> rows;
  for (std::size_t r = 0; r < keep.size(); ++r)
    if (keep[r]) rows.push_back(static_cast<Eigen::Index>(r));
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  out.X.resize(static_cast<Eigen::Index>(rows.size()), d.X.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    out.y(kk) = d.y(rows[k]);
    out.X.row(kk) = d.X.row(rows[k]);
    out.unit.push_back(d.unit[static_cast<std::size_t>(rows[k])]);
    out.unit_id.push_back(d.unit_id[static_cast<std::size_t>(rows[k])]);
    out.period.push_back(d.period[static_cast<std::size_t>(rows[k])]);
  }
  rebuild_clusters(out);
  return out;
}

}  // namespace cregmm

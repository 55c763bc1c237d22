#include "cregmm/instruments.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <set>

#include "cregmm/baseline.hpp"
#include "cregmm/errors.hpp"
#include "cregmm/format.hpp"

namespace cregmm {

GmmVariant GmmVariant::preset(Variant v) {
  GmmVariant g;
  g.tag = v;
  switch (v) {
    case Variant::GL:
      break;
    case Variant::CREGMM0:
    case Variant::CREGMM3:
      g.uses_averages = g.y_average_iv = g.x_average_iv = true;
      break;
    case Variant::CREGMM1:
    case Variant::CREGMM4:
      g.uses_averages = g.x_average_iv = true;
      break;
    case Variant::CREGMM2:
    case Variant::CREGMM5:
      g.uses_averages = true;
      break;
    case Variant::GMMDIF:
      g.differenced = true;
      g.x_form = InstrumentForm::Levels;
      break;
  }
  if (v == Variant::CREGMM3 || v == Variant::CREGMM4 || v == Variant::CREGMM5) g.x_form = InstrumentForm::Levels;
  return g;
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::GL: return "GL";
    case Variant::CREGMM0: return "CREGMM0";
    case Variant::CREGMM1: return "CREGMM1";
    case Variant::CREGMM2: return "CREGMM2";
    case Variant::CREGMM3: return "CREGMM3";
    case Variant::CREGMM4: return "CREGMM4";
    case Variant::CREGMM5: return "CREGMM5";
    case Variant::GMMDIF: return "GMMDIF";
  }
  return "GL";
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> v = {Variant::GL,      Variant::CREGMM0, Variant::CREGMM1, Variant::CREGMM2,
                                         Variant::CREGMM3, Variant::CREGMM4, Variant::CREGMM5, Variant::GMMDIF};
  return v;
}

Variant parse_variant(const std::string& s) {
  for (Variant v : all_variants())
    if (s == variant_name(v)) return v;
  if (s == "CREGMM" || s == "CRE-GMM") return Variant::CREGMM0;
  throw Error(ErrorKind::UnknownVariant, "'" + s + "'");
}

void GmmOptions::validate() const {
  if (steps != 1 && steps != 2) throw Error(ErrorKind::InvalidArgument, "steps must be 1 or 2");
  if (windmeijer && steps != 2) throw Error(ErrorKind::InvalidArgument, "windmeijer correction requires two steps");
  if (!(weight_ridge >= 0)) throw Error(ErrorKind::InvalidArgument, "weight_ridge must be >= 0");
  if (max_lag < 1) throw Error(ErrorKind::InvalidArgument, "max_lag must be >= 1");
}

namespace {

struct Block {
  std::string var;
  InstrumentForm form;
  int m_lo, m_hi;
};

int min_lag(Exogeneity e, bool differenced) {
  if (e == Exogeneity::Strict) return 0;
  if (!differenced) return 1;
  return e == Exogeneity::Predetermined ? 1 : 2;
}

std::vector<Block> gmm_blocks(const ModelSpec& spec, const GmmVariant& v, int max_lag) {
  std::vector<Block> out;
  if (spec.ar_order == 1) {
    if (v.differenced) {
      if (max_lag >= 2) out.push_back({spec.dependent, InstrumentForm::Levels, 2, max_lag});
    } else {
      out.push_back({spec.dependent, InstrumentForm::Differences, 1, max_lag});
    }
  }
  std::vector<std::string> order;
  std::map<std::string, std::pair<int, int>> win;
  for (const auto& x : spec.x_terms) {
    const int lo = x.lag + min_lag(x.role.exogeneity, v.differenced);
    const int hi = x.lag + max_lag;
    if (lo > hi) continue;
    auto it = win.find(x.name);
    if (it == win.end()) {
      order.push_back(x.name);
      win[x.name] = {lo, hi};
    } else {
      it->second.first = std::min(it->second.first, lo);
      it->second.second = std::max(it->second.second, hi);
    }
  }
  for (const auto& name : order) out.push_back({name, v.x_form, win[name].first, win[name].second});
  return out;
}

double fetch(const PanelDataset& panel, const Column& col, std::size_t i, std::int64_t t, InstrumentForm form) {
  if (!panel.observed(i, t)) return kMissing;
  const double a = col[panel.cell(i, t)];
  if (form == InstrumentForm::Levels) return a;
  if (!panel.observed(i, t - 1)) return kMissing;
  return a - col[panel.cell(i, t - 1)];
}

}  // namespace

InstrumentMatrix build_instruments(const PanelDataset& panel, const ModelSpec& spec, const GmmVariant& variant,
                                   const GmmOptions& options, const Design& rows) {
  options.validate();
  const auto blocks = gmm_blocks(spec, variant, options.max_lag);
  std::vector<const Column*> cols;
  for (const auto& b : blocks) cols.push_back(&panel.column(b.var));

  // dense slot per (block, period, m); period collapses to one slot when requested
  std::int64_t tmin = 0, tmax = 0;
  if (rows.n_rows() > 0) {
    tmin = *std::min_element(rows.period.begin(), rows.period.end());
    tmax = *std::max_element(rows.period.begin(), rows.period.end());
  }
  const std::size_t n_t = options.collapse ? 1 : static_cast<std::size_t>(tmax - tmin + 1);
  int span = 0;
  for (const auto& b : blocks) span = std::max(span, b.m_hi - b.m_lo + 1);
  const std::size_t n_m = static_cast<std::size_t>(std::max(span, 1));
  auto slot = [&](std::size_t b, std::int64_t t, int m) {
    const std::size_t tt = options.collapse ? 0 : static_cast<std::size_t>(t - tmin);
    return (b * n_t + tt) * n_m + static_cast<std::size_t>(m - blocks[b].m_lo);
  };
  struct Entry {
    int row;
    std::size_t slot;
    double value;
  };
  std::vector<Entry> entries;
  entries.reserve(rows.n_rows() * blocks.size() * n_m);
  std::vector<int> col_of(blocks.size() * n_t * n_m, -1);
  for (std::size_t r = 0; r < rows.n_rows(); ++r) {
    const std::size_t i = rows.unit[r];
    const std::int64_t t = rows.period[r];
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      for (int m = blocks[b].m_lo; m <= blocks[b].m_hi; ++m) {
        const double v = fetch(panel, *cols[b], i, t - m, blocks[b].form);
        if (is_missing(v)) continue;
        const std::size_t sl = slot(b, t, m);
        col_of[sl] = 0;
        entries.push_back({static_cast<int>(r), sl, v});
      }
    }
  }

  InstrumentMatrix Z;
  for (std::size_t b = 0; b < blocks.size(); ++b)
    for (std::size_t tt = 0; tt < n_t; ++tt)
      for (std::size_t mm = 0; mm < n_m; ++mm) {
        const std::size_t sl = (b * n_t + tt) * n_m + mm;
        if (col_of[sl] < 0) continue;
        col_of[sl] = static_cast<int>(Z.columns.size());
        InstrumentColumn c;
        c.block = static_cast<int>(b);
        c.var = blocks[b].var;
        c.lag = blocks[b].m_lo + static_cast<int>(mm);
        c.form = blocks[b].form == InstrumentForm::Levels ? "level" : "diff";
        if (!options.collapse) c.period = tmin + static_cast<std::int64_t>(tt);
        Z.columns.push_back(c);
      }
  if (Z.columns.empty()) throw Error(ErrorKind::WindowEmpty, "no valid lag inside the instrument window");
  Z.n_gmm_columns = Z.columns.size();

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(entries.size() + rows.n_rows() * 4);
  for (const auto& e : entries) trip.emplace_back(e.row, col_of[e.slot], e.value);

  // IV-style columns from the design
  const int next_block = static_cast<int>(blocks.size());
  for (std::size_t k = 0; k < rows.terms.size(); ++k) {
    const Term& t = rows.terms[k];
    InstrumentColumn c;
    c.var = t.name;
    bool take = false;
    switch (t.kind) {
      case TermKind::Constant: take = true; c.form = "const"; break;
      case TermKind::TimeDummy: take = true; c.form = "dummy"; break;
      case TermKind::TimeInvariant: take = true; c.form = "w"; break;
      case TermKind::Average:
        take = (t.var == spec.dependent && t.lag == 1) ? variant.y_average_iv : variant.x_average_iv;
        c.form = "average";
        c.var = t.var;
        c.lag = t.lag;
        break;
      default: break;
    }
    if (!take) continue;
    c.block = next_block + static_cast<int>(Z.columns.size() - Z.n_gmm_columns);
    const int cid = static_cast<int>(Z.columns.size());
    for (std::size_t r = 0; r < rows.n_rows(); ++r) {
      const double v = rows.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k));
      if (v != 0.0) trip.emplace_back(static_cast<int>(r), cid, v);
    }
    Z.columns.push_back(c);
  }
  Z.values.resize(static_cast<Eigen::Index>(rows.n_rows()), static_cast<Eigen::Index>(Z.columns.size()));
  Z.values.setFromTriplets(trip.begin(), trip.end());
  Z.values.makeCompressed();
  return Z;
}

namespace {

Design difference_rows(const Design& L, std::int64_t first, bool time_dummies) {
  std::vector<std::size_t> keep;
  for (std::size_t g = 0; g < L.n_clusters(); ++g)
    for (std::size_t r = L.cluster_start[g] + 1; r < L.cluster_start[g + 1]; ++r)
      if (L.period[r] == L.period[r - 1] + 1 && L.period[r] >= first) keep.push_back(r);
  if (keep.empty()) throw Error(ErrorKind::EmptySample, "no consecutive periods for the differenced equation");

  std::vector<std::int64_t> dummies;
  if (time_dummies) {
    std::set<std::int64_t> ps;
    for (auto r : keep) ps.insert(L.period[r]);
    dummies.assign(std::next(ps.begin()), ps.end());
  }
  Design d;
  d.terms.push_back({"_cons", TermKind::Constant, "", 0});
  for (const auto& t : L.terms) d.terms.push_back(t);
  for (auto p : dummies) d.terms.push_back({"T" + std::to_string(p), TermKind::TimeDummy, "", 0});
  const auto n = static_cast<Eigen::Index>(keep.size());
  d.y.resize(n);
  d.X.setZero(n, static_cast<Eigen::Index>(d.terms.size()));
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto r = static_cast<Eigen::Index>(keep[static_cast<std::size_t>(k)]);
    d.y(k) = L.y(r) - L.y(r - 1);
    d.X(k, 0) = 1.0;
    d.X.row(k).segment(1, L.X.cols()) = L.X.row(r) - L.X.row(r - 1);
    for (std::size_t j = 0; j < dummies.size(); ++j)
      d.X(k, 1 + L.X.cols() + static_cast<Eigen::Index>(j)) = L.period[static_cast<std::size_t>(r)] == dummies[j] ? 1.0 : 0.0;
    d.unit.push_back(L.unit[static_cast<std::size_t>(r)]);
    d.unit_id.push_back(L.unit_id[static_cast<std::size_t>(r)]);
    d.period.push_back(L.period[static_cast<std::size_t>(r)]);
  }
  rebuild_clusters(d);
  return d;
}

}  // namespace

GmmSetup prepare_gmm(const PanelDataset& panel, const ModelSpec& spec, const GmmVariant& variant,
                     const GmmOptions& options) {
  options.validate();
  GmmSetup s;
  s.differenced = variant.differenced;
  const std::int64_t first = spec.presample_end ? *spec.presample_end + 2 : panel.first_period() + 2;
  if (variant.differenced) {
    ModelSpec lvl = spec;
    lvl.w_terms.clear();
    lvl.time_dummies = false;
    DesignOptions o;
    o.constant = false;
    o.first_period = first - 1;
    s.design = difference_rows(assemble_design(panel, lvl, o), first, spec.time_dummies);
  } else {
    DesignOptions o;
    o.first_period = first;
    if (variant.uses_averages) {
      if (!spec.presample_end)
        throw Error(ErrorKind::InvalidArgument, std::string(variant_name(variant.tag)) + " needs presample_end");
      const auto req = average_requests(spec, true, true);
      MundlakAverages ma = mundlak_averages(panel, *spec.presample_end, req);
      if (ma.n_dropped == panel.n_units())
        throw Error(ErrorKind::NoPresampleUnits, "no unit has usable pre-sample data");
      s.units_dropped_no_presample = ma.n_dropped;
      for (std::size_t k = 0; k < req.size(); ++k)
        o.extras.push_back({{ma.names[k], TermKind::Average, req[k].var, req[k].lag}, std::move(ma.columns[k])});
    }
    s.design = assemble_design(panel, spec, o);
  }
  s.Z = build_instruments(panel, spec, variant, options, s.design);
  return s;
}

InstrumentMatrix build_instruments(const PanelDataset& panel, const ModelSpec& spec, const GmmVariant& variant,
                                   const GmmOptions& options) {
  return prepare_gmm(panel, spec, variant, options).Z;
}

void write_instrument_csv(std::ostream& out, const InstrumentMatrix& Z, const Design& rows) {
  auto header = [&](const char* label, auto&& field) {
    out << label << ",";
    for (std::size_t c = 0; c < Z.columns.size(); ++c) out << "," << field(Z.columns[c]);
    out << "\n";
  };
  header("block", [](const InstrumentColumn& c) { return std::to_string(c.block); });
  header("var", [](const InstrumentColumn& c) { return c.var; });
  header("lag", [](const InstrumentColumn& c) { return std::to_string(c.lag); });
  header("form", [](const InstrumentColumn& c) { return c.form; });
  header("period", [](const InstrumentColumn& c) { return c.period ? std::to_string(*c.period) : std::string(); });
  const Eigen::MatrixXd dense = Eigen::MatrixXd(Z.values);
  for (std::size_t r = 0; r < rows.n_rows(); ++r) {
    out << rows.unit_id[r] << "," << rows.period[r];
    for (Eigen::Index c = 0; c < dense.cols(); ++c) out << "," << format_shortest(dense(static_cast<Eigen::Index>(r), c));
    out << "\n";
  }
}

}  // namespace cregmm

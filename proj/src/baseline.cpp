#include "cregmm/baseline.hpp"

#include <cmath>

#include "cregmm/errors.hpp"
#include "cregmm/linalg.hpp"

namespace cregmm {

namespace {

double squared_corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const Eigen::ArrayXd da = a.array() - a.mean(), db = b.array() - b.mean();
  const double saa = (da * da).sum(), sbb = (db * db).sum();
  if (!(saa > 0) || !(sbb > 0)) return std::numeric_limits<double>::quiet_NaN();
  const double sab = (da * db).sum();
  return sab * sab / (saa * sbb);
}

// Fits yt on Xt; collinear columns are dropped from both Xt and d when allowed.
LsFit fit_checked(Eigen::MatrixXd& Xt, const Eigen::VectorXd& yt, Design& d, const BaselineOptions& opt,
                  Diagnostics& diag) {
  LsFit f = least_squares(Xt, yt);
  if (f.dropped.empty()) return f;
  std::string list;
  for (int j : f.dropped) list += (list.empty() ? "" : ", ") + d.terms[static_cast<std::size_t>(j)].name;
  if (!opt.drop_collinear) throw Error(ErrorKind::RankDeficient, "collinear columns: " + list);
  for (int j : f.dropped) diag.dropped_terms.push_back(d.terms[static_cast<std::size_t>(j)].name);
  Eigen::MatrixXd Xk(Xt.rows(), static_cast<Eigen::Index>(f.kept.size()));
  for (std::size_t j = 0; j < f.kept.size(); ++j) Xk.col(static_cast<Eigen::Index>(j)) = Xt.col(f.kept[j]);
  Xt = std::move(Xk);
  d = keep_columns(d, f.kept);
  f.kept.clear();
  for (Eigen::Index j = 0; j < Xt.cols(); ++j) f.kept.push_back(static_cast<int>(j));
  f.dropped.clear();
  return f;
}

EstimationResult make_result(const std::string& tag, const Design& d, const Eigen::VectorXd& beta) {
  EstimationResult r;
  r.estimator_tag = tag;
  r.names = d.names();
  r.coef = beta;
  r.resid_unit = d.unit_id;
  r.resid_period = d.period;
  r.n_obs = d.n_rows();
  r.n_units = d.n_clusters();
  return r;
}

void attach_time_dummy_test(EstimationResult& r, const Design& d) {
  std::vector<int> idx;
  for (std::size_t k = 0; k < d.terms.size(); ++k)
    if (d.terms[k].kind == TermKind::TimeDummy) idx.push_back(static_cast<int>(k));
  if (!idx.empty()) r.diag.time_dummies = wald_test(r, idx);
}

// Per-cluster row means of X and y.
void cluster_means(const Design& d, Eigen::MatrixXd& Xm, Eigen::VectorXd& ym) {
  const auto G = static_cast<Eigen::Index>(d.n_clusters());
  Xm.resize(G, d.X.cols());
  ym.resize(G);
  for (Eigen::Index g = 0; g < G; ++g) {
    const auto b = static_cast<Eigen::Index>(d.cluster_start[static_cast<std::size_t>(g)]);
    const auto len = static_cast<Eigen::Index>(d.cluster_start[static_cast<std::size_t>(g) + 1]) - b;
    Xm.row(g) = d.X.middleRows(b, len).colwise().mean();
    ym(g) = d.y.segment(b, len).mean();
  }
}

}  // namespace

const char* cre_backend_name(CreBackend b) { return b == CreBackend::RE ? "re" : "pols"; }

std::vector<AverageRequest> average_requests(const ModelSpec& spec, bool include_y, bool include_x) {
  std::vector<AverageRequest> req;
  if (include_y && spec.ar_order == 1) req.push_back({spec.dependent, 1});
  if (include_x) {
    for (const auto& x : spec.x_terms) {
      bool dup = false;
      for (const auto& r : req) dup = dup || (r.var == x.name && r.lag == x.lag);
      if (!dup) req.push_back({x.name, x.lag});
    }
  }
  return req;
}

EstimationResult ols_on_design(Design d, const std::string& tag, const BaselineOptions& opt) {
  Diagnostics diag;
  Eigen::MatrixXd X = d.X;
  LsFit f = fit_checked(X, d.y, d, opt, diag);
  EstimationResult r = make_result(tag, d, f.beta);
  r.diag = std::move(diag);
  const Eigen::VectorXd fitted = d.X * f.beta;
  r.resid = d.y - fitted;
  if (opt.point_only) return r;
  r.vcov = cluster_vcov(d.X, r.resid, d.cluster_start, f.bread);
  r.diag.r2 = squared_corr(fitted, d.y);
  attach_time_dummy_test(r, d);
  return r;
}

EstimationResult within_on_design(Design d, const std::string& tag, const BaselineOptions& opt) {
  for (const auto& t : d.terms)
    if (t.kind == TermKind::TimeInvariant || t.kind == TermKind::Constant)
      throw Error(ErrorKind::TimeInvariantInFE, "'" + (t.name) + "' is absorbed by the unit effects");
  {
    std::vector<char> keep(d.n_rows(), 1);
    for (std::size_t g = 0; g < d.n_clusters(); ++g)
      if (d.cluster_start[g + 1] - d.cluster_start[g] < 2)
        for (std::size_t r = d.cluster_start[g]; r < d.cluster_start[g + 1]; ++r) keep[r] = 0;
    d = keep_rows(d, keep);
  }
  if (d.n_rows() == 0) throw Error(ErrorKind::EmptySample, "no unit has two or more observations");

  Eigen::MatrixXd Xm;
  Eigen::VectorXd ym;
  cluster_means(d, Xm, ym);
  Eigen::MatrixXd Xt = d.X;
  Eigen::VectorXd yt = d.y;
  for (std::size_t g = 0; g < d.n_clusters(); ++g) {
    for (std::size_t r = d.cluster_start[g]; r < d.cluster_start[g + 1]; ++r) {
      const auto ri = static_cast<Eigen::Index>(r), gi = static_cast<Eigen::Index>(g);
      Xt.row(ri) -= Xm.row(gi);
      yt(ri) -= ym(gi);
    }
  }
  for (Eigen::Index k = 0; k < Xt.cols(); ++k) {
    const double scale = 1.0 + d.X.col(k).cwiseAbs().maxCoeff();
    if (Xt.col(k).cwiseAbs().maxCoeff() <= 1e-12 * scale)
      throw Error(ErrorKind::TimeInvariantInFE,
                  "'" + d.terms[static_cast<std::size_t>(k)].name + "' has no within-unit variation");
  }

  Diagnostics diag;
  LsFit f = fit_checked(Xt, yt, d, opt, diag);
  EstimationResult r = make_result(tag, d, f.beta);
  r.diag = std::move(diag);
  const Eigen::VectorXd fitted = Xt * f.beta;
  r.resid = yt - fitted;
  if (opt.point_only) return r;
  r.vcov = cluster_vcov(Xt, r.resid, d.cluster_start, f.bread);
  r.diag.r2 = squared_corr(fitted, yt);
  attach_time_dummy_test(r, d);
  return r;
}

EstimationResult re_on_design(Design d, const std::string& tag, const BaselineOptions& opt) {
  const auto n = static_cast<double>(d.n_rows());
  const auto G = d.n_clusters();
  Eigen::MatrixXd Xm;
  Eigen::VectorXd ym;
  cluster_means(d, Xm, ym);

  // within regression on columns that vary within units
  std::vector<Eigen::Index> varying;
  Eigen::MatrixXd Xw = d.X;
  Eigen::VectorXd yw = d.y;
  for (std::size_t g = 0; g < G; ++g)
    for (std::size_t r = d.cluster_start[g]; r < d.cluster_start[g + 1]; ++r) {
      Xw.row(static_cast<Eigen::Index>(r)) -= Xm.row(static_cast<Eigen::Index>(g));
      yw(static_cast<Eigen::Index>(r)) -= ym(static_cast<Eigen::Index>(g));
    }
  for (Eigen::Index k = 0; k < Xw.cols(); ++k) {
    const double scale = 1.0 + d.X.col(k).cwiseAbs().maxCoeff();
    if (Xw.col(k).cwiseAbs().maxCoeff() > 1e-12 * scale) varying.push_back(k);
  }
  double ssr_w = yw.squaredNorm();
  int k_w = 0;
  if (!varying.empty()) {
    Eigen::MatrixXd Xv(Xw.rows(), static_cast<Eigen::Index>(varying.size()));
    for (std::size_t j = 0; j < varying.size(); ++j) Xv.col(static_cast<Eigen::Index>(j)) = Xw.col(varying[j]);
    LsFit fw = least_squares(Xv, yw);
    Eigen::MatrixXd Xk(Xv.rows(), static_cast<Eigen::Index>(fw.kept.size()));
    for (std::size_t j = 0; j < fw.kept.size(); ++j) Xk.col(static_cast<Eigen::Index>(j)) = Xv.col(fw.kept[j]);
    ssr_w = (yw - Xk * fw.beta).squaredNorm();
    k_w = static_cast<int>(fw.kept.size());
  }
  LsFit fb = least_squares(Xm, ym);
  Eigen::MatrixXd Xbk(Xm.rows(), static_cast<Eigen::Index>(fb.kept.size()));
  for (std::size_t j = 0; j < fb.kept.size(); ++j) Xbk.col(static_cast<Eigen::Index>(j)) = Xm.col(fb.kept[j]);
  const double ssr_b = (ym - Xbk * fb.beta).squaredNorm();
  const int k_b = static_cast<int>(fb.kept.size());

  const double dof_w = n - static_cast<double>(G) - k_w;
  const double dof_b = static_cast<double>(G) - k_b;
  double inv_sum = 0;
  for (std::size_t g = 0; g < G; ++g) inv_sum += 1.0 / static_cast<double>(d.cluster_start[g + 1] - d.cluster_start[g]);
  const double t_bar = static_cast<double>(G) / inv_sum;
  double s_e2 = dof_w > 0 ? ssr_w / dof_w : std::numeric_limits<double>::quiet_NaN();
  double s_mu2 = 0;
  if (dof_w > 0 && dof_b > 0) s_mu2 = std::max(0.0, ssr_b / dof_b - s_e2 / t_bar);

  Eigen::MatrixXd Xt = d.X;
  Eigen::VectorXd yt = d.y;
  double th_min = 1, th_max = 0;
  for (std::size_t g = 0; g < G; ++g) {
    const double Ti = static_cast<double>(d.cluster_start[g + 1] - d.cluster_start[g]);
    const double denom = s_e2 + Ti * s_mu2;
    const double theta = (s_mu2 > 0 && denom > 0) ? 1.0 - std::sqrt(s_e2 / denom) : 0.0;
    th_min = std::min(th_min, theta);
    th_max = std::max(th_max, theta);
    if (theta == 0.0) continue;
    for (std::size_t r = d.cluster_start[g]; r < d.cluster_start[g + 1]; ++r) {
      Xt.row(static_cast<Eigen::Index>(r)) -= theta * Xm.row(static_cast<Eigen::Index>(g));
      yt(static_cast<Eigen::Index>(r)) -= theta * ym(static_cast<Eigen::Index>(g));
    }
  }

  Diagnostics diag;
  LsFit f = fit_checked(Xt, yt, d, opt, diag);
  EstimationResult r = make_result(tag, d, f.beta);
  r.diag = std::move(diag);
  r.diag.values["sigma_e2"] = s_e2;
  r.diag.values["sigma_mu2"] = s_mu2;
  r.diag.values["theta_min"] = th_min;
  r.diag.values["theta_max"] = th_max;
  const Eigen::VectorXd fitted = d.X * f.beta;
  r.resid = d.y - fitted;
  if (opt.point_only) return r;
  const Eigen::VectorXd ut = yt - Xt * f.beta;
  r.vcov = cluster_vcov(Xt, ut, d.cluster_start, f.bread);
  r.diag.r2 = squared_corr(fitted, d.y);
  attach_time_dummy_test(r, d);
  return r;
}

namespace {

DesignOptions baseline_sample(const ModelSpec& spec) {
  DesignOptions o;
  if (spec.presample_end) o.first_period = *spec.presample_end + 1;
  return o;
}

}  // namespace

EstimationResult pols(const PanelDataset& panel, const ModelSpec& spec, const BaselineOptions& opt) {
  return ols_on_design(assemble_design(panel, spec, baseline_sample(spec)), "POLS", opt);
}

EstimationResult fe_within(const PanelDataset& panel, const ModelSpec& spec, const BaselineOptions& opt) {
  if (!spec.w_terms.empty())
    throw Error(ErrorKind::TimeInvariantInFE, "'" + spec.w_terms.front() + "' is absorbed by the unit effects");
  DesignOptions o = baseline_sample(spec);
  o.constant = false;
  o.unit_effects = true;
  return within_on_design(assemble_design(panel, spec, o), "FE", opt);
}

EstimationResult re_fgls(const PanelDataset& panel, const ModelSpec& spec, const BaselineOptions& opt) {
  return re_on_design(assemble_design(panel, spec, baseline_sample(spec)), "RE", opt);
}

EstimationResult cre(const PanelDataset& panel, const ModelSpec& spec, CreVariant variant, MeansSource source,
                     const BaselineOptions& opt) {
  const bool with_x = variant == CreVariant::CRE2;
  const std::string tag = with_x ? "CRE2" : "CRE1";
  DesignOptions o = baseline_sample(spec);
  Design d;
  std::size_t dropped_units = 0;
  if (source == MeansSource::Presample) {
    if (!spec.presample_end) throw Error(ErrorKind::InvalidArgument, tag + " with pre-sample means needs presample_end");
    const auto req = average_requests(spec, true, with_x);
    if (req.empty()) throw Error(ErrorKind::InvalidArgument, tag + ": model has no term to average");
    MundlakAverages ma = mundlak_averages(panel, *spec.presample_end, req);
    if (ma.n_dropped == panel.n_units())
      throw Error(ErrorKind::NoPresampleUnits, "no unit has usable pre-sample data before period " +
                                                   std::to_string(*spec.presample_end + 1));
    dropped_units = ma.n_dropped;
    for (std::size_t k = 0; k < req.size(); ++k)
      o.extras.push_back({{ma.names[k], TermKind::Average, req[k].var, req[k].lag}, std::move(ma.columns[k])});
    d = assemble_design(panel, spec, o);
  } else {
    d = assemble_design(panel, spec, o);
    std::vector<Eigen::Index> cols;
    for (std::size_t k = 0; k < d.terms.size(); ++k) {
      const auto kind = d.terms[k].kind;
      if (kind == TermKind::LaggedDependent || (with_x && kind == TermKind::Regressor))
        cols.push_back(static_cast<Eigen::Index>(k));
    }
    Eigen::MatrixXd Xm;
    Eigen::VectorXd ym;
    cluster_means(d, Xm, ym);
    const Eigen::Index K0 = d.X.cols();
    d.X.conservativeResize(Eigen::NoChange, K0 + static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const Term& src = d.terms[static_cast<std::size_t>(cols[j])];
      const auto c = K0 + static_cast<Eigen::Index>(j);
      for (std::size_t g = 0; g < d.n_clusters(); ++g)
        for (std::size_t r = d.cluster_start[g]; r < d.cluster_start[g + 1]; ++r)
          d.X(static_cast<Eigen::Index>(r), c) = Xm(static_cast<Eigen::Index>(g), cols[j]);
      d.terms.push_back({"fsavg:" + src.name, TermKind::Average, src.var, src.lag});
    }
  }

  EstimationResult r = opt.cre_backend == CreBackend::RE ? re_on_design(std::move(d), tag, opt)
                                                         : ols_on_design(std::move(d), tag, opt);
  r.diag.units_dropped_no_presample = dropped_units;
  if (dropped_units > 0)
    r.diag.notes.push_back(std::to_string(dropped_units) + " unit(s) without pre-sample data dropped");
  r.diag.values["backend_re"] = opt.cre_backend == CreBackend::RE ? 1.0 : 0.0;
  if (!opt.point_only && with_x) {
    std::vector<int> idx;
    for (std::size_t k = 0; k < r.names.size(); ++k) {
      const bool is_avg = r.names[k].rfind("psavg:", 0) == 0 || r.names[k].rfind("fsavg:", 0) == 0;
      if (!is_avg) continue;
      bool is_x = false;
      for (const auto& x : spec.x_terms)
        is_x = is_x || r.names[k] == average_name(x.name, x.lag) || r.names[k] == "fsavg:" + term_name(x.name, x.lag);
      if (is_x) idx.push_back(static_cast<int>(k));
    }
    if (!idx.empty()) r.diag.hausman = wald_test(r, idx);
  }
  return r;
}

}  // namespace cregmm

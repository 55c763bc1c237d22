#include "cregmm/gmm.hpp"

#include <algorithm>
#include <numeric>

#include "cregmm/errors.hpp"
#include "cregmm/linalg.hpp"

namespace cregmm {

namespace {

using It = SparseZ::InnerIterator;

Eigen::MatrixXd cross_zz(const SparseZ& Z) {
  const Eigen::Index L = Z.cols();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(L, L);
  for (Eigen::Index r = 0; r < Z.outerSize(); ++r)
    for (It a(Z, r); a; ++a)
      for (It b(Z, r); b; ++b) out(a.col(), b.col()) += a.value() * b.value();
  return out;
}

// sum_i Z_i' H_i Z_i with H_i = 2 on the diagonal and -1 between consecutive periods.
Eigen::MatrixXd cross_zhz(const SparseZ& Z, const std::vector<std::size_t>& cs, const std::vector<std::int64_t>& period) {
  Eigen::MatrixXd out = 2.0 * cross_zz(Z);
  for (std::size_t g = 0; g + 1 < cs.size(); ++g)
    for (std::size_t r = cs[g] + 1; r < cs[g + 1]; ++r) {
      if (period[r] != period[r - 1] + 1) continue;
      const auto r0 = static_cast<Eigen::Index>(r - 1), r1 = static_cast<Eigen::Index>(r);
      for (It a(Z, r0); a; ++a)
        for (It b(Z, r1); b; ++b) {
          out(a.col(), b.col()) -= a.value() * b.value();
          out(b.col(), a.col()) -= a.value() * b.value();
        }
    }
  return out;
}

Eigen::MatrixXd cross_zx(const SparseZ& Z, const Eigen::MatrixXd& X) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(Z.cols(), X.cols());
  for (Eigen::Index r = 0; r < Z.outerSize(); ++r)
    for (It a(Z, r); a; ++a) out.row(a.col()) += a.value() * X.row(r);
  return out;
}

Eigen::VectorXd cross_zu(const SparseZ& Z, const Eigen::VectorXd& u) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(Z.cols());
  for (Eigen::Index r = 0; r < Z.outerSize(); ++r)
    for (It a(Z, r); a; ++a) out(a.col()) += a.value() * u(r);
  return out;
}

// Row g holds Z_g'u_g.
Eigen::MatrixXd cluster_moments(const SparseZ& Z, const Eigen::VectorXd& u, const std::vector<std::size_t>& cs) {
  const auto G = static_cast<Eigen::Index>(cs.size() - 1);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(G, Z.cols());
  for (Eigen::Index g = 0; g < G; ++g)
    for (std::size_t r = cs[static_cast<std::size_t>(g)]; r < cs[static_cast<std::size_t>(g) + 1]; ++r)
      for (It a(Z, static_cast<Eigen::Index>(r)); a; ++a) out(g, a.col()) += a.value() * u(static_cast<Eigen::Index>(r));
  return out;
}

struct Step {
  Eigen::VectorXd beta;
  Eigen::MatrixXd Ainv;
  Eigen::MatrixXd WZX;  // W * Z'X
};

Step solve_step(const Eigen::MatrixXd& W, const Eigen::MatrixXd& ZX, const Eigen::VectorXd& Zy) {
  Step s;
  s.WZX = W * ZX;
  Eigen::MatrixXd A = ZX.transpose() * s.WZX;
  symmetrize(A);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double lmax = ev.size() ? ev.maxCoeff() : 0.0;
  if (!(lmax > 0) || ev.minCoeff() <= 1e-12 * lmax)
    throw Error(ErrorKind::Underidentified, "instruments do not identify all coefficients");
  s.Ainv = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  s.beta = s.Ainv * (s.WZX.transpose() * Zy);
  return s;
}

PinvResult checked_pinv(const Eigen::MatrixXd& A, double ridge, const char* what) {
  PinvResult p = sym_pinv(A, 1e-12, ridge);
  if (p.rank == 0) throw Error(ErrorKind::SingularWeight, std::string(what) + " weight matrix is zero");
  return p;
}

}  // namespace

Eigen::VectorXd two_step_given(const GmmProblem& p, const Eigen::VectorXd& beta1, double ridge) {
  const Eigen::VectorXd u1 = p.y - p.X * beta1;
  const Eigen::MatrixXd G1 = cluster_moments(p.Z, u1, p.cluster_start);
  const PinvResult W2 = checked_pinv(G1.transpose() * G1, ridge, "two-step");
  return solve_step(W2.inverse, cross_zx(p.Z, p.X), cross_zu(p.Z, p.y)).beta;
}

EstimationResult gmm_solve(const GmmProblem& p, const GmmOptions& opt) {
  opt.validate();
  const Eigen::Index n = p.X.rows(), K = p.X.cols(), L = p.Z.cols();
  if (p.y.size() != n || p.Z.rows() != n) throw Error(ErrorKind::InvalidArgument, "y, X and Z row counts differ");
  if (L < K)
    throw Error(ErrorKind::Underidentified, std::to_string(L) + " instruments for " + std::to_string(K) + " coefficients");
  if (p.cluster_start.empty() || p.cluster_start.back() != static_cast<std::size_t>(n))
    throw Error(ErrorKind::InvalidArgument, "cluster blocks do not cover the rows");

  const Eigen::MatrixXd ZX = cross_zx(p.Z, p.X);
  const Eigen::VectorXd Zy = cross_zu(p.Z, p.y);
  const Eigen::MatrixXd ZZ =
      p.weight == OneStepWeight::Differences ? cross_zhz(p.Z, p.cluster_start, p.period) : cross_zz(p.Z);
  const PinvResult W1 = checked_pinv(ZZ, opt.weight_ridge, "one-step");
  const Step s1 = solve_step(W1.inverse, ZX, Zy);
  const Eigen::VectorXd u1 = p.y - p.X * s1.beta;

  EstimationResult r;
  r.names = p.names;
  if (r.names.size() != static_cast<std::size_t>(K)) {
    r.names.clear();
    for (Eigen::Index k = 0; k < K; ++k) r.names.push_back("b" + std::to_string(k));
  }
  r.n_obs = static_cast<std::size_t>(n);
  r.n_units = p.cluster_start.size() - 1;
  r.resid_unit = p.unit_id;
  r.resid_period = p.period;
  r.diag.n_instruments = static_cast<std::size_t>(L);
  r.diag.weight_ridge = opt.weight_ridge;

  if (opt.steps == 1 && opt.point_only) {
    r.coef = s1.beta;
    r.resid = u1;
    r.diag.weight_rank = W1.rank;
    r.diag.weight_truncated = W1.truncated;
    return r;
  }

  const Eigen::MatrixXd G1 = cluster_moments(p.Z, u1, p.cluster_start);
  const Eigen::MatrixXd Omega1 = G1.transpose() * G1;
  const Eigen::MatrixXd H1 = s1.Ainv * s1.WZX.transpose();  // K x L
  Eigen::MatrixXd V1 = H1 * Omega1 * H1.transpose();
  symmetrize(V1);

  auto fit = std::make_shared<GmmFit>();
  fit->y = p.y;
  fit->X = p.X;
  fit->Z = p.Z;
  fit->cluster_start = p.cluster_start;
  fit->period = p.period;
  fit->differenced = p.differenced;
  fit->steps = opt.steps;

  if (opt.steps == 1) {
    r.coef = s1.beta;
    r.resid = u1;
    r.vcov = V1;
    r.diag.weight_rank = W1.rank;
    r.diag.weight_truncated = W1.truncated;
    const PinvResult Jw = sym_pinv(Omega1, 1e-12, 0.0);
    fit->resid = u1;
    fit->influence = H1;
    fit->moments = cross_zu(p.Z, u1);
    fit->j_weight = Jw.inverse;
    fit->j_rank = Jw.rank;
    r.gmm = fit;
    return r;
  }

  const PinvResult W2 = checked_pinv(Omega1, opt.weight_ridge, "two-step");
  const Step s2 = solve_step(W2.inverse, ZX, Zy);
  const Eigen::VectorXd u2 = p.y - p.X * s2.beta;
  r.coef = s2.beta;
  r.resid = u2;
  r.diag.weight_rank = W2.rank;
  r.diag.weight_truncated = W2.truncated;
  if (opt.point_only) return r;

  const Eigen::MatrixXd V2 = s2.Ainv;
  const Eigen::VectorXd g2 = cross_zu(p.Z, u2);
  // Windmeijer: D_k = -A2^{-1} X'Z W2 dOmega_k W2 g2 with dOmega_k = -sum_i (h_ik g_i' + g_i h_ik')
  Eigen::MatrixXd D(K, K);
  const Eigen::VectorXd W2g2 = W2.inverse * g2;
  const auto& cs = p.cluster_start;
  const auto G = static_cast<Eigen::Index>(cs.size() - 1);
  for (Eigen::Index k = 0; k < K; ++k) {
    Eigen::MatrixXd Hk = Eigen::MatrixXd::Zero(G, L);
    for (Eigen::Index g = 0; g < G; ++g)
      for (std::size_t rr = cs[static_cast<std::size_t>(g)]; rr < cs[static_cast<std::size_t>(g) + 1]; ++rr)
        for (It a(p.Z, static_cast<Eigen::Index>(rr)); a; ++a)
          Hk(g, a.col()) += a.value() * p.X(static_cast<Eigen::Index>(rr), k);
    // dOmega_k * v = -(Hk' (G1 v) + G1' (Hk v))
    const Eigen::VectorXd dv = -(Hk.transpose() * (G1 * W2g2) + G1.transpose() * (Hk * W2g2));
    D.col(k) = -s2.Ainv * (s2.WZX.transpose() * dv);
  }
  Eigen::MatrixXd Vc = V2 + D * V2 + V2 * D.transpose() + D * V1 * D.transpose();
  symmetrize(Vc);
  r.vcov = opt.windmeijer ? Vc : V2;
  if (!opt.windmeijer) symmetrize(r.vcov);

  fit->resid = u2;
  fit->influence = s2.Ainv * s2.WZX.transpose();
  fit->moments = g2;
  fit->j_weight = W2.inverse;
  fit->j_rank = W2.rank;
  fit->windmeijer_D = D;
  r.gmm = fit;
  return r;
}

EstimationResult gmm_solve(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                           const std::vector<std::int64_t>& clusters, const GmmOptions& options) {
  const auto n = static_cast<std::size_t>(X.rows());
  if (clusters.size() != n || static_cast<std::size_t>(Z.rows()) != n || static_cast<std::size_t>(y.size()) != n)
    throw Error(ErrorKind::InvalidArgument, "y, X, Z and clusters row counts differ");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return clusters[a] < clusters[b]; });
  GmmProblem p;
  p.y.resize(y.size());
  p.X.resize(X.rows(), X.cols());
  Eigen::MatrixXd Zs(Z.rows(), Z.cols());
  for (std::size_t k = 0; k < n; ++k) {
    const auto dst = static_cast<Eigen::Index>(k), src = static_cast<Eigen::Index>(order[k]);
    p.y(dst) = y(src);
    p.X.row(dst) = X.row(src);
    Zs.row(dst) = Z.row(src);
    p.unit_id.push_back(clusters[order[k]]);
    if (k == 0 || clusters[order[k]] != clusters[order[k - 1]]) {
      p.cluster_start.push_back(k);
      p.period.push_back(0);
    } else {
      p.period.push_back(p.period.back() + 1);
    }
  }
  p.cluster_start.push_back(n);
  p.Z = Zs.sparseView();
  return gmm_solve(p, options);
}

EstimationResult estimate_variant(const PanelDataset& panel, const ModelSpec& spec, const GmmVariant& variant,
                                  const GmmOptions& options) {
  GmmSetup setup = prepare_gmm(panel, spec, variant, options);
  GmmProblem p;
  p.y = std::move(setup.design.y);
  p.X = std::move(setup.design.X);
  p.Z = std::move(setup.Z.values);
  p.cluster_start = setup.design.cluster_start;
  p.period = setup.design.period;
  p.unit_id = setup.design.unit_id;
  p.names = setup.design.names();
  p.weight = setup.differenced ? OneStepWeight::Differences : OneStepWeight::Levels;
  p.differenced = setup.differenced;

  EstimationResult r = gmm_solve(p, options);
  r.estimator_tag = variant_name(variant.tag);
  r.diag.units_dropped_no_presample = setup.units_dropped_no_presample;
  if (setup.units_dropped_no_presample > 0)
    r.diag.notes.push_back(std::to_string(setup.units_dropped_no_presample) + " unit(s) without pre-sample data dropped");
  if (options.point_only) return r;

  r.diag.notes.push_back(setup.differenced ? "AR(m) on differenced-equation residuals"
                                           : "AR(m) on first differences of level residuals");
  r.diag.hansen = hansen_j(r);
  for (int m = 1; m <= 3; ++m) {
    try {
      r.diag.ar[static_cast<std::size_t>(m - 1)] = ar_test(r, m);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::InsufficientSpan) throw;
    }
  }
  std::vector<std::string> avg_x;
  std::vector<int> dummies;
  for (std::size_t k = 0; k < setup.design.terms.size(); ++k) {
    const Term& t = setup.design.terms[k];
    if (t.kind == TermKind::Average && !(t.var == spec.dependent && t.lag == 1)) avg_x.push_back(t.name);
    if (t.kind == TermKind::TimeDummy) dummies.push_back(static_cast<int>(k));
  }
  if (!avg_x.empty()) r.diag.hausman = hausman_addition(r, avg_x);
  if (!dummies.empty()) r.diag.time_dummies = wald_test(r, dummies);
  const Eigen::VectorXd fitted = p.y - r.resid;
  if (fitted.size() > 1) {
    const Eigen::ArrayXd a = fitted.array() - fitted.mean(), b = p.y.array() - p.y.mean();
    const double sab = (a * b).sum(), saa = (a * a).sum(), sbb = (b * b).sum();
    if (saa > 0 && sbb > 0) r.diag.r2 = sab * sab / (saa * sbb);
  }
  return r;
}

EstimationResult estimate_variant(const PanelDataset& panel, const ModelSpec& spec, Variant variant,
                                  const GmmOptions& options) {
  return estimate_variant(panel, spec, GmmVariant::preset(variant), options);
}

}  // namespace cregmm

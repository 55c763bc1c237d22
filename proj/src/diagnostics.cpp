#include <cmath>

#include "cregmm/errors.hpp"
#include "cregmm/gmm.hpp"
#include "cregmm/linalg.hpp"

namespace cregmm {

TestStat hansen_j(const EstimationResult& r) {
  if (!r.gmm) throw Error(ErrorKind::InvalidArgument, "Hansen J needs a GMM result with moments retained");
  const GmmFit& f = *r.gmm;
  TestStat t;
  t.df = static_cast<double>(f.j_rank) - static_cast<double>(r.coef.size());
  if (t.df <= 0) {
    t.stat = 0.0;
    t.df = 0.0;
    return t;  // just identified: p undefined
  }
  t.stat = std::max(0.0, f.moments.dot(f.j_weight * f.moments));
  t.p = chi2_sf(t.stat, t.df);
  t.defined = true;
  return t;
}

namespace {

struct Serial {
  double a_sum = 0;
  Eigen::VectorXd a;   // per cluster
  Eigen::VectorXd g;   // sum of d a / d beta (negated)
  std::size_t pairs = 0;
};

// u, X already in the transform the statistic uses; rows with valid[r] = 0 are skipped.
Serial serial_products(const std::vector<std::size_t>& cs, const std::vector<std::int64_t>& period,
                       const Eigen::VectorXd& u, const Eigen::MatrixXd* X, const std::vector<char>& valid, int m) {
  Serial s;
  const auto G = static_cast<Eigen::Index>(cs.size() - 1);
  s.a = Eigen::VectorXd::Zero(G);
  if (X) s.g = Eigen::VectorXd::Zero(X->cols());
  for (Eigen::Index g = 0; g < G; ++g) {
    const std::size_t b = cs[static_cast<std::size_t>(g)], e = cs[static_cast<std::size_t>(g) + 1];
    for (std::size_t r = b; r < e; ++r) {
      if (!valid[r]) continue;
      // rows are sorted by period within the cluster
      for (std::size_t q = r; q-- > b;) {
        if (period[q] < period[r] - m) break;
        if (period[q] != period[r] - m || !valid[q]) continue;
        const auto ri = static_cast<Eigen::Index>(r), qi = static_cast<Eigen::Index>(q);
        s.a(g) += u(ri) * u(qi);
        if (X) s.g += X->row(ri).transpose() * u(qi) + X->row(qi).transpose() * u(ri);
        ++s.pairs;
      }
    }
  }
  s.a_sum = s.a.sum();
  return s;
}

void difference_within(const std::vector<std::size_t>& cs, const std::vector<std::int64_t>& period,
                       const Eigen::VectorXd& u, const Eigen::MatrixXd* X, Eigen::VectorXd& du, Eigen::MatrixXd* dX,
                       std::vector<char>& valid) {
  const auto n = u.size();
  du = Eigen::VectorXd::Zero(n);
  if (X && dX) *dX = Eigen::MatrixXd::Zero(n, X->cols());
  valid.assign(static_cast<std::size_t>(n), 0);
  for (std::size_t g = 0; g + 1 < cs.size(); ++g)
    for (std::size_t r = cs[g] + 1; r < cs[g + 1]; ++r) {
      if (period[r] != period[r - 1] + 1) continue;
      const auto ri = static_cast<Eigen::Index>(r);
      du(ri) = u(ri) - u(ri - 1);
      if (X && dX) dX->row(ri) = X->row(ri) - X->row(ri - 1);
      valid[r] = 1;
    }
}

}  // namespace

ZTest ar_test_residuals(const std::vector<std::size_t>& cs, const std::vector<std::int64_t>& period,
                        const Eigen::VectorXd& resid, int m, bool difference) {
  if (m < 1) throw Error(ErrorKind::InvalidArgument, "AR order must be >= 1");
  Eigen::VectorXd du;
  std::vector<char> valid;
  if (difference) {
    difference_within(cs, period, resid, nullptr, du, nullptr, valid);
  } else {
    du = resid;
    valid.assign(static_cast<std::size_t>(resid.size()), 1);
  }
  const Serial s = serial_products(cs, period, du, nullptr, valid, m);
  if (s.pairs == 0) throw Error(ErrorKind::InsufficientSpan, "no unit spans order " + std::to_string(m));
  ZTest z;
  const double v = s.a.squaredNorm();
  if (!(v > 0)) return z;
  z.z = s.a_sum / std::sqrt(v);
  z.p = normal_two_sided_p(z.z);
  z.defined = true;
  return z;
}

ZTest ar_test(const EstimationResult& r, int m) {
  if (m < 1) throw Error(ErrorKind::InvalidArgument, "AR order must be >= 1");
  if (!r.gmm) throw Error(ErrorKind::InvalidArgument, "AR test needs a GMM result with residuals retained");
  const GmmFit& f = *r.gmm;
  Eigen::VectorXd du;
  Eigen::MatrixXd dX;
  std::vector<char> valid;
  if (f.differenced) {
    du = f.resid;
    dX = f.X;
    valid.assign(static_cast<std::size_t>(du.size()), 1);
  } else {
    difference_within(f.cluster_start, f.period, f.resid, &f.X, du, &dX, valid);
  }
  const Serial s = serial_products(f.cluster_start, f.period, du, &dX, valid, m);
  if (s.pairs == 0) throw Error(ErrorKind::InsufficientSpan, "no unit spans order " + std::to_string(m));

  // psi_i = a_i - g' H Z_i'u_i
  const Eigen::RowVectorXd gH = s.g.transpose() * f.influence;
  const auto& cs = f.cluster_start;
  double v = 0;
  for (std::size_t g = 0; g + 1 < cs.size(); ++g) {
    double corr = 0;
    for (std::size_t rr = cs[g]; rr < cs[g + 1]; ++rr)
      for (SparseZ::InnerIterator a(f.Z, static_cast<Eigen::Index>(rr)); a; ++a)
        corr += gH(a.col()) * a.value() * f.resid(static_cast<Eigen::Index>(rr));
    const double psi = s.a(static_cast<Eigen::Index>(g)) - corr;
    v += psi * psi;
  }
  ZTest z;
  if (!(v > 0)) return z;
  z.z = s.a_sum / std::sqrt(v);
  z.p = normal_two_sided_p(z.z);
  z.defined = true;
  return z;
}

TestStat hausman_addition(const EstimationResult& r, const std::vector<std::string>& terms) {
  std::vector<int> idx;
  std::string missing;
  for (const auto& t : terms) {
    const int k = r.index_of(t);
    if (k < 0)
      missing += (missing.empty() ? "" : ", ") + t;
    else
      idx.push_back(k);
  }
  if (!missing.empty() || idx.empty())
    throw Error(ErrorKind::TermsNotInModel, missing.empty() ? std::string("no terms given") : missing);
  if (r.vcov.rows() != r.coef.size()) throw Error(ErrorKind::InvalidArgument, "result has no variance matrix");
  return wald_test(r, idx);
}

}  // namespace cregmm

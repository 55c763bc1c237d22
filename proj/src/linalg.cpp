#include "cregmm/linalg.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>

namespace cregmm {

LsFit least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tol) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(tol);
  const int k = static_cast<int>(X.cols());
  const int rank = static_cast<int>(qr.rank());
  LsFit fit;
  const auto& perm = qr.colsPermutation().indices();
  std::vector<char> keep(static_cast<std::size_t>(k), 0);
  for (int j = 0; j < rank; ++j) keep[static_cast<std::size_t>(perm(j))] = 1;
  for (int j = 0; j < k; ++j) (keep[static_cast<std::size_t>(j)] ? fit.kept : fit.dropped).push_back(j);

  Eigen::MatrixXd Xk(X.rows(), static_cast<Eigen::Index>(fit.kept.size()));
  for (std::size_t j = 0; j < fit.kept.size(); ++j) Xk.col(static_cast<Eigen::Index>(j)) = X.col(fit.kept[j]);
  if (fit.dropped.empty()) {
    fit.beta = qr.solve(y);
  } else {
    fit.beta = Xk.colPivHouseholderQr().solve(y);
  }
  const Eigen::MatrixXd xtx = Xk.transpose() * Xk;
  fit.bread = xtx.ldlt().solve(Eigen::MatrixXd::Identity(xtx.rows(), xtx.cols()));
  return fit;
}

Eigen::MatrixXd cluster_meat(const Eigen::MatrixXd& X, const Eigen::VectorXd& u,
                             const std::vector<std::size_t>& cs) {
  const Eigen::Index k = X.cols();
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd s(k);
  for (std::size_t g = 0; g + 1 < cs.size(); ++g) {
    const auto b = static_cast<Eigen::Index>(cs[g]);
    const auto len = static_cast<Eigen::Index>(cs[g + 1] - cs[g]);
    s.noalias() = X.middleRows(b, len).transpose() * u.segment(b, len);
    meat.selfadjointView<Eigen::Lower>().rankUpdate(s);
  }
  meat.triangularView<Eigen::StrictlyUpper>() = meat.transpose();
  return meat;
}

Eigen::MatrixXd cluster_vcov(const Eigen::MatrixXd& X, const Eigen::VectorXd& u,
                             const std::vector<std::size_t>& cs, const Eigen::MatrixXd& bread) {
  Eigen::MatrixXd v = bread * cluster_meat(X, u, cs) * bread;
  symmetrize(v);
  return v;
}

PinvResult sym_pinv(const Eigen::MatrixXd& A, double rel_tol, double ridge) {
  Eigen::MatrixXd B = A;
  symmetrize(B);
  if (ridge > 0) B.diagonal().array() += ridge;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double lmax = ev.size() ? ev.maxCoeff() : 0.0;
  PinvResult r;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  for (Eigen::Index j = 0; j < ev.size(); ++j) {
    if (lmax > 0 && ev(j) > rel_tol * lmax) {
      inv(j) = 1.0 / ev(j);
      ++r.rank;
    } else {
      ++r.truncated;
    }
  }
  r.inverse = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  symmetrize(r.inverse);
  return r;
}

void symmetrize(Eigen::MatrixXd& A) { A = 0.5 * (A + A.transpose()).eval(); }

double chi2_sf(double stat, double df) {
  if (!(df > 0) || !std::isfinite(stat)) return std::numeric_limits<double>::quiet_NaN();
  if (stat <= 0) return 1.0;
  boost::math::chi_squared dist(df);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

double normal_two_sided_p(double z) {
  if (!std::isfinite(z)) return std::numeric_limits<double>::quiet_NaN();
  boost::math::normal dist;
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(z)));
}

}  // namespace cregmm

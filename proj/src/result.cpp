#include "cregmm/result.hpp"

#include <cmath>

#include "cregmm/errors.hpp"
#include "cregmm/linalg.hpp"

namespace cregmm {

int EstimationResult::index_of(const std::string& name) const {
  for (std::size_t k = 0; k < names.size(); ++k)
    if (names[k] == name) return static_cast<int>(k);
  return -1;
}

double EstimationResult::coefficient(const std::string& name) const {
  const int k = index_of(name);
  if (k < 0) throw Error(ErrorKind::TermsNotInModel, name);
  return coef(k);
}

double EstimationResult::se(const std::string& name) const {
  const int k = index_of(name);
  if (k < 0) throw Error(ErrorKind::TermsNotInModel, name);
  if (vcov.rows() <= k) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(std::max(0.0, vcov(k, k)));
}

TestStat wald_test(const EstimationResult& r, const std::vector<int>& idx) {
  TestStat t;
  if (idx.empty() || r.vcov.rows() != r.coef.size()) return t;
  const auto q = static_cast<Eigen::Index>(idx.size());
  Eigen::VectorXd b(q);
  Eigen::MatrixXd V(q, q);
  for (Eigen::Index a = 0; a < q; ++a) {
    b(a) = r.coef(idx[static_cast<std::size_t>(a)]);
    for (Eigen::Index c = 0; c < q; ++c) V(a, c) = r.vcov(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(c)]);
  }
  const PinvResult pi = sym_pinv(V, 1e-12);
  t.stat = b.dot(pi.inverse * b);
  t.df = pi.rank;
  t.p = chi2_sf(t.stat, t.df);
  t.defined = t.df > 0;
  return t;
}

}  // namespace cregmm

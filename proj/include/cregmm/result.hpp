#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace cregmm {

using SparseZ = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct TestStat {
  double stat = std::numeric_limits<double>::quiet_NaN();
  double df = 0;
  double p = std::numeric_limits<double>::quiet_NaN();
  bool defined = false;
};

struct ZTest {
  double z = std::numeric_limits<double>::quiet_NaN();
  double p = std::numeric_limits<double>::quiet_NaN();
  bool defined = false;
};

struct Diagnostics {
  std::optional<TestStat> hansen;
  std::array<std::optional<ZTest>, 3> ar;  // m = 1..3
  std::optional<TestStat> hausman;
  std::optional<TestStat> time_dummies;
  std::optional<double> r2;
  std::size_t n_instruments = 0;
  int weight_rank = 0;
  int weight_truncated = 0;
  double weight_ridge = 0;
  std::vector<std::string> dropped_terms;
  std::size_t units_dropped_no_presample = 0;
  std::map<std::string, double> values;  // estimator-specific scalars
  std::vector<std::string> notes;
};

// Internals of a GMM fit kept for J, AR(m) and Windmeijer computations.
struct GmmFit {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  SparseZ Z;
  std::vector<std::size_t> cluster_start;
  std::vector<std::int64_t> period;
  bool differenced = false;
  int steps = 1;
  Eigen::VectorXd resid;      // final-step residuals
  Eigen::MatrixXd influence;  // K x L, beta - beta0 ~ influence * sum_i Z_i'u_i
  Eigen::VectorXd moments;    // Z'u at the final estimate
  Eigen::MatrixXd j_weight;   // inverse of the cluster moment covariance used for J
  int j_rank = 0;
  Eigen::MatrixXd windmeijer_D;  // d beta2 / d beta1, two-step only
};

struct EstimationResult {
  std::string estimator_tag;
  std::vector<std::string> names;
  Eigen::VectorXd coef;
  Eigen::MatrixXd vcov;
  std::vector<std::int64_t> resid_unit;  // unit ids
  std::vector<std::int64_t> resid_period;
  Eigen::VectorXd resid;
  std::size_t n_obs = 0;
  std::size_t n_units = 0;
  Diagnostics diag;
  std::shared_ptr<const GmmFit> gmm;

  int index_of(const std::string& name) const;
  double coefficient(const std::string& name) const;
  double se(const std::string& name) const;
};

// Wald test that the named coefficients are jointly zero, using the result's vcov.
TestStat wald_test(const EstimationResult& r, const std::vector<int>& idx);

}  // namespace cregmm

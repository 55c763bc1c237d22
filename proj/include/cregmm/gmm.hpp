#pragma once

#include <string>
#include <vector>

#include "cregmm/instruments.hpp"
#include "cregmm/model.hpp"
#include "cregmm/panel.hpp"
#include "cregmm/result.hpp"

namespace cregmm {

enum class OneStepWeight { Levels, Differences };

struct GmmProblem {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  SparseZ Z;
  std::vector<std::size_t> cluster_start;  // contiguous row blocks
  std::vector<std::int64_t> period;        // for the differenced one-step weight and AR(m)
  std::vector<std::int64_t> unit_id;
  std::vector<std::string> names;
  OneStepWeight weight = OneStepWeight::Levels;
  bool differenced = false;
};

EstimationResult gmm_solve(const GmmProblem& problem, const GmmOptions& options);

// Rows are grouped by cluster label (stable) before solving; periods are row order within a cluster.
EstimationResult gmm_solve(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                           const std::vector<std::int64_t>& clusters, const GmmOptions& options);

// Two-step estimate as a function of the first-step coefficients that build the weight.
Eigen::VectorXd two_step_given(const GmmProblem& problem, const Eigen::VectorXd& beta1, double ridge = 0.0);

TestStat hansen_j(const EstimationResult& r);
ZTest ar_test(const EstimationResult& r, int m);
// Uncorrected statistic on raw residuals; differences them first when difference is set.
ZTest ar_test_residuals(const std::vector<std::size_t>& cluster_start, const std::vector<std::int64_t>& period,
                        const Eigen::VectorXd& resid, int m, bool difference = true);
TestStat hausman_addition(const EstimationResult& r, const std::vector<std::string>& terms);

EstimationResult estimate_variant(const PanelDataset& panel, const ModelSpec& spec, const GmmVariant& variant,
                                  const GmmOptions& options);
EstimationResult estimate_variant(const PanelDataset& panel, const ModelSpec& spec, Variant variant,
                                  const GmmOptions& options);

}  // namespace cregmm

#pragma once

#include <Eigen/Dense>
#include <vector>

namespace cregmm {

struct LsFit {
  Eigen::VectorXd beta;     // over kept columns
  std::vector<int> kept;
  std::vector<int> dropped;
  Eigen::MatrixXd bread;    // (X_k'X_k)^{-1}
};

// Pivoted QR least squares; columns whose pivot falls below tol * max pivot are reported in dropped.
LsFit least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tol = 1e-10);

// sum_g (X_g'u_g)(X_g'u_g)' over contiguous row blocks.
Eigen::MatrixXd cluster_meat(const Eigen::MatrixXd& X, const Eigen::VectorXd& u,
                             const std::vector<std::size_t>& cluster_start);
Eigen::MatrixXd cluster_vcov(const Eigen::MatrixXd& X, const Eigen::VectorXd& u,
                             const std::vector<std::size_t>& cluster_start, const Eigen::MatrixXd& bread);

struct PinvResult {
  Eigen::MatrixXd inverse;
  int rank = 0;
  int truncated = 0;
};

// Symmetric generalized inverse; eigenvalues below rel_tol * lambda_max are zeroed.
PinvResult sym_pinv(const Eigen::MatrixXd& A, double rel_tol = 1e-12, double ridge = 0.0);

void symmetrize(Eigen::MatrixXd& A);

double chi2_sf(double stat, double df);
double normal_two_sided_p(double z);

}  // namespace cregmm

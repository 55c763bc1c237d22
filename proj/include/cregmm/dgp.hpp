#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cregmm/panel.hpp"

namespace cregmm {

enum class ExecPolicy { Serial, Parallel };

// Thread cap from CREGMM_THREADS, else the OpenMP default.
int max_threads();

enum class ErrorVarianceMode { FixVe, FixVeps };
enum class RegressorVarianceMode { FixVx, FixVxi };

struct VarianceMode {
  ErrorVarianceMode error = ErrorVarianceMode::FixVe;
  RegressorVarianceMode regressor = RegressorVarianceMode::FixVxi;
  bool operator==(const VarianceMode&) const = default;
};

struct DgpConfig {
  double rho = 0.5;
  double beta0 = 0.0;
  double beta1 = 1.0;
  double beta2 = 0.0;
  double theta_x = 0.5;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double gamma3 = 0.0;
  double sigma_mu = 1.0;
  double sigma_e = 1.0;    // used under FixVe
  double sigma_eps = 1.0;  // used under FixVeps
  double sigma_x = 1.0;    // used under FixVx
  double sigma_xi = 1.0;   // used under FixVxi
  VarianceMode mode;
  int N = 1000;
  int T = 10;  // observed periods 1..T, pre-sample included
  int S = 2;   // pre-sample periods 1..S
  int burn_in = 50;
  std::uint64_t seed = 1;

  bool operator==(const DgpConfig&) const = default;
  void validate() const;
};

struct CalibratedSigmas {
  double sigma_eps = 0;
  double sigma_xi = 0;
  double implied_Vx = 0;
  double implied_Ve = 0;
};

CalibratedSigmas calibrate_variances(const DgpConfig& c);

// Columns y, x and the latents mu, eps, e (flagged) when keep_latents.
PanelDataset simulate_panel(const DgpConfig& c, bool keep_latents = true, ExecPolicy policy = ExecPolicy::Parallel);

double ols_bias_oracle(double gamma1, double gamma2, double gamma3, double theta_x, double V_xi,
                       RegressorVarianceMode mode);

// Population POLS slope bias of y on (1, x) for the static model, exact under stationarity.
double ols_bias_exact(double gamma1, double gamma2, double gamma3, double theta_x, double sigma_mu,
                      double sigma_eps, double sigma_xi);

struct MomentReport {
  double var_x = 0;
  double var_e = 0;
  double corr_x_mu = 0;
  double corr_x_eps = 0;
  std::size_t n = 0;
};

MomentReport empirical_moments(const PanelDataset& panel, std::int64_t first_period, const std::string& x = "x");

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

const char* error_mode_name(ErrorVarianceMode m);
const char* regressor_mode_name(RegressorVarianceMode m);
ErrorVarianceMode parse_error_mode(const std::string& s);
RegressorVarianceMode parse_regressor_mode(const std::string& s);

}  // namespace cregmm

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cregmm/baseline.hpp"
#include "cregmm/dgp.hpp"
#include "cregmm/instruments.hpp"

namespace cregmm {

struct Scenario {
  double rho = 0.5;
  double beta1 = 1.0;
  double beta2 = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double gamma3 = 0.0;
  int N = 1000;
  int T = 10;
  int S = 2;

  std::string id() const;
  double param(const std::string& name) const;
};

// Names accepted by Scenario::param and the parameter_order of export_nestedloop.
const std::vector<std::string>& scenario_parameters();

struct GridSpec {
  std::vector<double> rho = {0.5};
  std::vector<double> beta2 = {0.0};
  std::vector<double> gamma1 = {0.0};
  std::vector<double> gamma2 = {0.0};
  std::vector<double> gamma3 = {0.0, 0.8};
  std::vector<int> N = {1000};
  std::vector<int> T = {10};
  // When non-empty these replace the gamma1 x gamma2 and N x T products.
  std::vector<std::pair<double, double>> gamma12;
  std::vector<std::pair<int, int>> NT;

  bool operator==(const GridSpec&) const = default;
};

// Estimator output: bias keyed by coefficient label (rho, beta1, beta2).
using EstimatorFn = std::function<std::map<std::string, double>(const PanelDataset&, const Scenario&)>;

struct McConfig {
  GridSpec grid;
  int reps = 300;
  std::vector<std::string> estimators = {"RE", "FE", "CRE1", "CRE2", "GL", "CREGMM0", "CREGMM1",
                                         "CREGMM2", "CREGMM3", "CREGMM4", "CREGMM5"};
  std::uint64_t base_seed = 20240611;
  int S = 2;
  std::map<int, int> S_by_T = {{20, 4}, {40, 4}};
  DgpConfig base;  // non-grid DGP parameters
  Exogeneity x_role = Exogeneity::Endogenous;
  BaselineOptions baseline;
  GmmOptions gmm;
  bool skip_infeasible = true;  // drop cells violating (1-theta^2) sigma_x^2 > gamma1^2 sigma_mu^2 + gamma2^2 sigma_eps^2
  bool keep_raw = false;
  bool fail_on_all_failed = true;
  ExecPolicy policy = ExecPolicy::Parallel;
  std::vector<std::pair<std::string, EstimatorFn>> custom;  // run after the named estimators

  int presample_for(int T) const;
  void validate() const;
  // Compares everything except the custom callbacks.
  bool operator==(const McConfig& o) const;
};

struct McRow {
  std::size_t scenario = 0;
  std::string estimator;
  std::string coef;
  double bias = 0;
  double ese = 0;
  int reps = 0;
  int failures = 0;
};

struct RawRecord {
  std::size_t scenario = 0;
  std::string estimator;
  std::string coef;
  int rep = 0;
  double bias = 0;
};

struct SkippedScenario {
  Scenario scenario;
  std::string reason;
};

struct McSummary {
  std::vector<Scenario> scenarios;
  std::vector<McRow> rows;
  std::vector<SkippedScenario> skipped;
  std::vector<RawRecord> raw;
  bool raw_retained = false;
  int reps = 0;
};

std::vector<Scenario> enumerate_grid(const McConfig& cfg, std::vector<SkippedScenario>* skipped = nullptr);
ModelSpec mc_model(const Scenario& s, Exogeneity role);
DgpConfig mc_dgp(const McConfig& cfg, const Scenario& s, int rep);
EstimatorFn builtin_estimator(const std::string& name, const McConfig& cfg);

McSummary run_grid(const McConfig& cfg);

void write_summary_csv(std::ostream& out, const McSummary& s);

// Rows ordered lexicographically by parameter_order; one bias column per estimator.
void export_nestedloop(std::ostream& out, const McSummary& s, const std::vector<std::string>& parameter_order,
                       const std::string& coef = "rho");
// Long format: group, scenario_id, estimator, coef, rep, bias.
void export_boxplot(std::ostream& out, const McSummary& s, const std::vector<std::string>& grouping,
                    const std::string& coef = "rho");
std::string group_label(const Scenario& s, const std::vector<std::string>& grouping);

// Type-7 sample quantile.
double quantile(std::vector<double> values, double p);

struct ReferenceRow {
  std::string table;
  Scenario scenario;  // S is not part of the key
  std::string estimator;
  std::string coef;
  double bias = 0;
  double ese = 0;
  int reps = 0;
  std::string source;
};

std::vector<ReferenceRow> read_reference_csv(std::istream& in);
std::vector<ReferenceRow> read_reference_csv(const std::string& path);

struct TolerancePolicy {
  double abs_tol = 0.02;
  double z = 3.0;
  bool strict = false;  // every summary row needs a reference row
};

struct ComparisonRow {
  std::size_t summary_row = 0;
  std::string table;
  double bias = 0;
  double reference = 0;
  double tolerance = 0;
  bool pass = false;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  std::size_t unmatched = 0;
  double pass_rate() const;
  std::size_t passed() const;
};

ComparisonReport compare_to_reference(const McSummary& s, const std::vector<ReferenceRow>& reference,
                                      const TolerancePolicy& policy = {});
void write_comparison_csv(std::ostream& out, const McSummary& s, const ComparisonReport& r);

}  // namespace cregmm

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cregmm/baseline.hpp"
#include "cregmm/dgp.hpp"
#include "cregmm/instruments.hpp"
#include "cregmm/mc.hpp"
#include "cregmm/model.hpp"

namespace cregmm {

struct EstimateConfig {
  std::vector<std::string> estimators = {"RE", "FE", "CRE1", "CRE2", "GL", "CREGMM2", "CREGMM5"};
  BaselineOptions baseline;
  GmmOptions gmm;
  MeansSource cre_means = MeansSource::Presample;
  std::vector<std::string> decompose;  // variables to decompose alongside the estimates

  bool operator==(const EstimateConfig&) const = default;
};

struct McOutputConfig {
  std::vector<std::string> nestedloop_order = {"rho", "beta2", "gamma1", "gamma2", "gamma3", "N", "T"};
  std::vector<std::string> boxplot_grouping = {"gamma1", "T"};
  std::vector<std::string> coefs = {"rho", "beta1"};
  TolerancePolicy tolerance;
  std::vector<std::string> reference_tables;  // empty compares against every table
  double min_pass_rate = 0.9;

  bool operator==(const McOutputConfig& o) const {
    return nestedloop_order == o.nestedloop_order && boxplot_grouping == o.boxplot_grouping && coefs == o.coefs &&
           tolerance.abs_tol == o.tolerance.abs_tol && tolerance.z == o.tolerance.z &&
           tolerance.strict == o.tolerance.strict && reference_tables == o.reference_tables &&
           min_pass_rate == o.min_pass_rate;
  }
};

struct IoConfig {
  std::string input;
  std::string output_dir = "out";
  std::string unit_col = "unit";
  std::string time_col = "time";
  std::vector<std::string> formats = {"table-csv", "summary-text"};
  std::string reference;
  bool keep_latents = false;

  bool operator==(const IoConfig&) const = default;
};

struct RunConfig {
  std::string command;  // simulate, estimate, mc, decompose; may be left to the CLI
  std::optional<DgpConfig> dgp;
  std::optional<ModelSpec> model;
  std::optional<EstimateConfig> estimate;
  std::optional<McConfig> mc;
  McOutputConfig mc_output;
  IoConfig io;

  bool operator==(const RunConfig&) const = default;
  // Throws MissingSection when the command's sub-configs are absent.
  void require_for(const std::string& command) const;
};

// JSON document with sections dgp, model, estimate, mc, io. Unknown keys are rejected.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& c);

}  // namespace cregmm

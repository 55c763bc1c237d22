#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cregmm/config.hpp"
#include "cregmm/result.hpp"

namespace cregmm {

// Command-line values that override or complement the config file.
struct CliOverrides {
  std::string data;       // estimate, decompose
  std::string var = "y";  // decompose
  std::optional<std::int64_t> presample_end;
  std::string reference;  // mc
  std::string output_dir;
  bool keep_latents = false;
  bool full = false;  // mc at 1000 reps
};

// Runs one named estimator with full diagnostics.
EstimationResult run_estimator(const PanelDataset& panel, const ModelSpec& spec, const std::string& name,
                               const EstimateConfig& cfg);

// Returns the process exit status; errors are reported on err with their module.
int cmd_dispatch(const RunConfig& config, const CliOverrides& over, std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace cregmm

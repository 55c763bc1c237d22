#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cregmm {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

// Values over the dense unit x period grid, row-major by unit.
using Column = std::vector<double>;

struct PanelRow {
  std::int64_t unit = 0;
  double period = 0;  // must be integral
  std::vector<std::pair<std::string, double>> values;
};

class PanelDataset {
 public:
  PanelDataset() = default;

  static PanelDataset build(std::span<const PanelRow> rows);

  std::size_t n_units() const { return units_.size(); }
  std::size_t n_periods() const { return static_cast<std::size_t>(n_grid_); }
  std::int64_t first_period() const { return p0_; }
  std::int64_t last_period() const { return p0_ + n_grid_ - 1; }
  const std::vector<std::int64_t>& units() const { return units_; }
  // Periods with at least one observed unit.
  std::vector<std::int64_t> periods() const;
  std::size_t n_observations() const;

  std::size_t cell(std::size_t unit_index, std::int64_t period) const {
    return unit_index * static_cast<std::size_t>(n_grid_) + static_cast<std::size_t>(period - p0_);
  }
  bool in_grid(std::int64_t period) const { return period >= p0_ && period < p0_ + n_grid_; }
  bool observed(std::size_t unit_index, std::int64_t period) const {
    return in_grid(period) && present_[cell(unit_index, period)];
  }
  std::int64_t unit_first(std::size_t unit_index) const { return first_[unit_index]; }
  std::int64_t unit_last(std::size_t unit_index) const { return last_[unit_index]; }
  std::size_t unit_obs(std::size_t unit_index) const { return count_[unit_index]; }

  bool has_column(const std::string& name) const { return columns_.count(name) > 0; }
  const Column& column(const std::string& name) const;
  double value(const std::string& name, std::size_t unit_index, std::int64_t period) const;
  std::vector<std::string> column_names() const;
  bool is_latent(const std::string& name) const { return latent_.count(name) > 0; }

  // Copy sharing existing columns, plus one more. Cells outside the support are forced missing.
  PanelDataset with_column(const std::string& name, Column values, bool latent = false) const;
  PanelDataset without_latents() const;

  // Direct construction on a balanced grid; used by the simulator.
  static PanelDataset balanced(std::vector<std::int64_t> units, std::int64_t first_period, std::int64_t n_periods);

 private:
  std::vector<std::int64_t> units_;
  std::int64_t p0_ = 0;
  std::int64_t n_grid_ = 0;
  std::vector<char> present_;
  std::vector<std::int64_t> first_, last_;
  std::vector<std::size_t> count_;
  std::map<std::string, std::shared_ptr<const Column>> columns_;
  std::set<std::string> latent_;
};

// Calendar lag: value of var at (i, t-k) when both cells are observed.
Column lag(const PanelDataset& panel, const std::string& var, int k);
Column lag(const PanelDataset& panel, const Column& values, int k);
Column first_difference(const PanelDataset& panel, const std::string& var);
Column first_difference(const PanelDataset& panel, const Column& values);

struct SampleSplit {
  std::int64_t presample_end = 0;
  std::vector<char> presample;   // cell mask, s <= S
  std::vector<char> estimation;  // cell mask, t > S
  std::vector<char> no_presample;  // per unit
  std::size_t n_flagged = 0;
};

SampleSplit split_presample(const PanelDataset& panel, std::int64_t S);

struct AverageRequest {
  std::string var;
  int lag = 0;  // 1 averages var_{s-1} over s <= S
};

std::string average_name(const std::string& var, int lag);

struct MundlakAverages {
  std::vector<std::string> names;
  std::vector<Column> columns;  // replicated over the estimation sample
  std::vector<char> dropped;    // per unit
  std::size_t n_dropped = 0;
  std::vector<std::string> warnings;
};

MundlakAverages mundlak_averages(const PanelDataset& panel, std::int64_t S, std::span<const AverageRequest> requests);
MundlakAverages mundlak_averages(const PanelDataset& panel, std::int64_t S, std::span<const std::string> vars,
                                 bool include_lagged_y, const std::string& dependent = "y");

// Per-unit mean over observed cells with t > S (all cells when S is empty).
std::vector<Column> full_sample_means(const PanelDataset& panel, std::span<const std::string> vars,
                                      std::optional<std::int64_t> S = std::nullopt);

struct DecompositionReport {
  double between_share = 0;
  double within_share = 0;
  double within_common_share = 0;
  double within_unitspecific_share = 0;
  std::size_t n_obs = 0;
};

DecompositionReport variance_decomposition(const PanelDataset& panel, const std::string& var,
                                           std::int64_t period_lo, std::int64_t period_hi);
DecompositionReport variance_decomposition(const PanelDataset& panel, const std::string& var);

}  // namespace cregmm

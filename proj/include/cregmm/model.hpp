#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cregmm {

class PanelDataset;

enum class Exogeneity { Strict, Predetermined, Endogenous };

struct VariableRole {
  Exogeneity exogeneity = Exogeneity::Endogenous;
  bool het_correlated = true;
  bool operator==(const VariableRole&) const = default;
};

struct XTerm {
  std::string name;
  int lag = 0;  // 0 or 1
  VariableRole role;
  bool operator==(const XTerm&) const = default;
};

enum class AverageSet { None, YOnly, YAndX };

struct ModelSpec {
  std::string dependent = "y";
  int ar_order = 1;  // 0 gives a static model
  std::vector<XTerm> x_terms;
  std::vector<std::string> w_terms;
  bool time_dummies = false;
  std::optional<std::int64_t> presample_end;
  AverageSet include_averages = AverageSet::None;

  bool operator==(const ModelSpec&) const = default;

  // Throws on unknown variables, bad lags, time-varying w, or a pre-sample
  // cutoff that leaves some unit without estimation periods.
  void validate(const PanelDataset& panel) const;
};

std::string term_name(const std::string& var, int lag);

const char* exogeneity_name(Exogeneity e);
Exogeneity parse_exogeneity(const std::string& s);
const char* average_set_name(AverageSet a);
AverageSet parse_average_set(const std::string& s);

}  // namespace cregmm

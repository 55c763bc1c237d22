#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cregmm/model.hpp"
#include "cregmm/panel.hpp"

namespace cregmm {

enum class TermKind { Constant, LaggedDependent, Regressor, TimeInvariant, Average, TimeDummy };

struct Term {
  std::string name;
  TermKind kind = TermKind::Regressor;
  std::string var;
  int lag = 0;
};

struct ExtraColumn {
  Term term;
  Column values;
};

struct DesignOptions {
  bool constant = true;
  bool unit_effects = false;  // a within transform follows; drops the first dummy like a constant would
  std::optional<std::int64_t> first_period;
  std::vector<ExtraColumn> extras;  // appended after the w terms
};

// Complete-case regression rows, sorted by (unit, period); rows of one unit are contiguous.
struct Design {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  std::vector<Term> terms;
  std::vector<std::size_t> unit;  // panel unit index
  std::vector<std::int64_t> unit_id;
  std::vector<std::int64_t> period;
  std::vector<std::size_t> cluster_start;  // block offsets plus end sentinel

  std::size_t n_rows() const { return static_cast<std::size_t>(y.size()); }
  std::size_t n_clusters() const { return cluster_start.empty() ? 0 : cluster_start.size() - 1; }
  std::vector<std::string> names() const;
  int index_of(const std::string& name) const;
};

Design assemble_design(const PanelDataset& panel, const ModelSpec& spec, const DesignOptions& options = {});

Design keep_columns(const Design& d, const std::vector<int>& keep);
Design keep_rows(const Design& d, const std::vector<char>& keep);
void rebuild_clusters(Design& d);

}  // namespace cregmm

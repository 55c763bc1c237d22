#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cregmm/panel.hpp"

namespace cregmm {

struct PanelCsvSchema {
  std::string unit = "unit";
  std::string time = "time";
};

// Empty cells are missing. Errors carry 1-based file line numbers.
PanelDataset read_panel_csv(std::istream& in, const PanelCsvSchema& schema = {});
PanelDataset read_panel_csv(const std::string& path, const PanelCsvSchema& schema = {});

// One line per observed (unit, period), columns in name order; latents only when asked.
void write_panel_csv(std::ostream& out, const PanelDataset& panel, bool include_latents = false,
                     const PanelCsvSchema& schema = {});
void write_panel_csv(const std::string& path, const PanelDataset& panel, bool include_latents = false,
                     const PanelCsvSchema& schema = {});

std::vector<std::string> split_csv_record(const std::string& line);

}  // namespace cregmm

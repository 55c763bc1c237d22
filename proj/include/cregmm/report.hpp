#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cregmm/panel.hpp"
#include "cregmm/result.hpp"

namespace cregmm {

enum class ResultFormat { TableCsv, SummaryText };

ResultFormat parse_result_format(const std::string& s);
const char* result_format_name(ResultFormat f);

// One column per result; coefficient and (se) rows, then diagnostics rows that are
// always present and blank when undefined. Time dummy coefficients are not listed.
void write_results(std::ostream& out, const std::vector<EstimationResult>& results, ResultFormat format);
void write_results(const std::string& path, const std::vector<EstimationResult>& results, ResultFormat format);

void write_decomposition(std::ostream& out, const std::string& var, const DecompositionReport& d);

}  // namespace cregmm

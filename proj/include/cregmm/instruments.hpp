#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cregmm/design.hpp"
#include "cregmm/model.hpp"
#include "cregmm/panel.hpp"
#include "cregmm/result.hpp"

namespace cregmm {

enum class Variant { GL, CREGMM0, CREGMM1, CREGMM2, CREGMM3, CREGMM4, CREGMM5, GMMDIF };
enum class InstrumentForm { Differences, Levels };

struct GmmVariant {
  Variant tag = Variant::GL;
  InstrumentForm x_form = InstrumentForm::Differences;
  bool uses_averages = false;  // averages enter the regressors
  bool y_average_iv = false;
  bool x_average_iv = false;
  bool differenced = false;    // equation in first differences

  static GmmVariant preset(Variant v);
};

const char* variant_name(Variant v);
Variant parse_variant(const std::string& s);
const std::vector<Variant>& all_variants();

struct GmmOptions {
  int steps = 1;
  bool collapse = false;
  bool windmeijer = false;
  double weight_ridge = 0.0;
  int max_lag = 3;
  bool point_only = false;  // coefficients only

  bool operator==(const GmmOptions&) const = default;
  void validate() const;
};

struct InstrumentColumn {
  int block = 0;
  std::string var;
  int lag = 0;
  std::string form;  // diff, level, average, const, dummy, w
  std::optional<std::int64_t> period;  // empty for collapsed and IV-style columns
};

struct InstrumentMatrix {
  SparseZ values;  // rows aligned to the design rows
  std::vector<InstrumentColumn> columns;
  std::size_t n_gmm_columns = 0;
};

struct GmmSetup {
  Design design;
  InstrumentMatrix Z;
  bool differenced = false;
  std::size_t units_dropped_no_presample = 0;
};

GmmSetup prepare_gmm(const PanelDataset& panel, const ModelSpec& spec, const GmmVariant& variant,
                     const GmmOptions& options);
InstrumentMatrix build_instruments(const PanelDataset& panel, const ModelSpec& spec, const GmmVariant& variant,
                                   const GmmOptions& options);
InstrumentMatrix build_instruments(const PanelDataset& panel, const ModelSpec& spec, const GmmVariant& variant,
                                   const GmmOptions& options, const Design& rows);

// One metadata header row per field (block, var, lag, form, period), then one row per observation.
void write_instrument_csv(std::ostream& out, const InstrumentMatrix& Z, const Design& rows);

}  // namespace cregmm

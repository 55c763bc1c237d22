#pragma once

#include "cregmm/design.hpp"
#include "cregmm/model.hpp"
#include "cregmm/panel.hpp"
#include "cregmm/result.hpp"

namespace cregmm {

enum class CreVariant { CRE1, CRE2 };
enum class MeansSource { Presample, FullSample };
enum class CreBackend { RE, POLS };

struct BaselineOptions {
  bool drop_collinear = false;  // drop and report instead of throwing RankDeficient
  CreBackend cre_backend = CreBackend::RE;
  bool point_only = false;      // skip vcov and diagnostics
  bool operator==(const BaselineOptions&) const = default;
};

EstimationResult pols(const PanelDataset& panel, const ModelSpec& spec, const BaselineOptions& opt = {});
EstimationResult fe_within(const PanelDataset& panel, const ModelSpec& spec, const BaselineOptions& opt = {});
EstimationResult re_fgls(const PanelDataset& panel, const ModelSpec& spec, const BaselineOptions& opt = {});
EstimationResult cre(const PanelDataset& panel, const ModelSpec& spec, CreVariant variant, MeansSource source,
                     const BaselineOptions& opt = {});

// Design-level entry points.
EstimationResult ols_on_design(Design d, const std::string& tag, const BaselineOptions& opt);
EstimationResult within_on_design(Design d, const std::string& tag, const BaselineOptions& opt);
EstimationResult re_on_design(Design d, const std::string& tag, const BaselineOptions& opt);

// Average regressors added by CRE1/CRE2 and CRE-GMM: y-bar^1 (when dynamic) and the x terms.
std::vector<AverageRequest> average_requests(const ModelSpec& spec, bool include_y, bool include_x);

const char* cre_backend_name(CreBackend b);

}  // namespace cregmm

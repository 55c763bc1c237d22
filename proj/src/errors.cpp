#include "cregmm/errors.hpp"

namespace cregmm {

std::string_view kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DuplicateKey: return "DuplicateKey";
    case ErrorKind::BadPeriod: return "BadPeriod";
    case ErrorKind::UnknownVariable: return "UnknownVariable";
    case ErrorKind::EmptyEstimationSample: return "EmptyEstimationSample";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::CalibrationInfeasible: return "CalibrationInfeasible";
    case ErrorKind::MissingLatents: return "MissingLatents";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::EmptySample: return "EmptySample";
    case ErrorKind::TimeInvariantInFE: return "TimeInvariantInFE";
    case ErrorKind::NoPresampleUnits: return "NoPresampleUnits";
    case ErrorKind::WindowEmpty: return "WindowEmpty";
    case ErrorKind::UnknownVariant: return "UnknownVariant";
    case ErrorKind::Underidentified: return "Underidentified";
    case ErrorKind::SingularWeight: return "SingularWeight";
    case ErrorKind::InsufficientSpan: return "InsufficientSpan";
    case ErrorKind::TermsNotInModel: return "TermsNotInModel";
    case ErrorKind::AllRepsFailed: return "AllRepsFailed";
    case ErrorKind::NonFactorialGrid: return "NonFactorialGrid";
    case ErrorKind::RawNotRetained: return "RawNotRetained";
    case ErrorKind::KeyMismatch: return "KeyMismatch";
    case ErrorKind::UnknownKey: return "UnknownKey";
    case ErrorKind::MissingSection: return "MissingSection";
    case ErrorKind::TypeMismatch: return "TypeMismatch";
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::NonNumericCell: return "NonNumericCell";
    case ErrorKind::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

std::string_view kind_module(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DuplicateKey:
    case ErrorKind::BadPeriod:
    case ErrorKind::UnknownVariable:
    case ErrorKind::EmptyEstimationSample:
    case ErrorKind::ZeroVariance:
    case ErrorKind::InvalidArgument:
      return "panel_core";
    case ErrorKind::CalibrationInfeasible:
    case ErrorKind::MissingLatents:
      return "dgp";
    case ErrorKind::RankDeficient:
    case ErrorKind::EmptySample:
    case ErrorKind::TimeInvariantInFE:
    case ErrorKind::NoPresampleUnits:
      return "baseline_estimators";
    case ErrorKind::WindowEmpty:
    case ErrorKind::UnknownVariant:
    case ErrorKind::Underidentified:
    case ErrorKind::SingularWeight:
    case ErrorKind::InsufficientSpan:
    case ErrorKind::TermsNotInModel:
      return "gmm_engine";
    case ErrorKind::AllRepsFailed:
    case ErrorKind::NonFactorialGrid:
    case ErrorKind::RawNotRetained:
    case ErrorKind::KeyMismatch:
      return "mc_harness";
    case ErrorKind::UnknownKey:
    case ErrorKind::MissingSection:
    case ErrorKind::TypeMismatch:
    case ErrorKind::MissingColumn:
    case ErrorKind::NonNumericCell:
    case ErrorKind::IoFailure:
      return "cli_io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& detail)
    : std::runtime_error(std::string(kind_name(kind)) + ": " + detail), kind_(kind), detail_(detail) {}

}  // namespace cregmm

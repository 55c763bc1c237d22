#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cregmm {

enum class ErrorKind {
  // panel
  DuplicateKey,
  BadPeriod,
  UnknownVariable,
  EmptyEstimationSample,
  ZeroVariance,
  InvalidArgument,
  // dgp
  CalibrationInfeasible,
  MissingLatents,
  // estimation
  RankDeficient,
  EmptySample,
  TimeInvariantInFE,
  NoPresampleUnits,
  WindowEmpty,
  UnknownVariant,
  Underidentified,
  SingularWeight,
  InsufficientSpan,
  TermsNotInModel,
  // mc
  AllRepsFailed,
  NonFactorialGrid,
  RawNotRetained,
  KeyMismatch,
  // config / io
  UnknownKey,
  MissingSection,
  TypeMismatch,
  MissingColumn,
  NonNumericCell,
  IoFailure,
};

std::string_view kind_name(ErrorKind kind);
// Module that owns the error kind, used to qualify CLI messages.
std::string_view kind_module(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail);
  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace cregmm

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace govid {

/// Failure categories raised across the library. Every throw site uses
/// govid::Error with one of these codes so callers can branch on the kind
/// of failure without parsing messages.
enum class Errc {
  // blocks
  NonPositiveDt,
  InvalidLimits,
  DelayShorterThanDt,
  DtMismatch,
  NonlinearBlock,
  InitialOutputOutOfLimits,
  // plants
  InvalidParams,
  NoSteadyState,
  RateMismatch,
  MissingChannel,
  WrongModelKind,
  // signals
  MalformedCsv,
  NonUniformSampling,
  EmptyFile,
  CutoffAboveNyquist,
  MissingBase,
  NonPositiveBase,
  DegeneratePeriod,
  ConstantChannel,
  // estimate
  GateSwitchInWindow,
  InsufficientData,
  SingularRegressor,
  LengthMismatch,
  Empty,
  // optim
  BadLambda,
  ObjectivePanic,
  // validate
  TooFewSamples,
  AlphaOutOfRange,
  IncompleteRun,
  // shared
  InvalidArgument,
  Io,
};

[[nodiscard]] std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  [[nodiscard]] Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace govid

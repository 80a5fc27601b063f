#include "govid/error.hpp"

#include <fmt/format.h>

namespace govid {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::NonPositiveDt: return "NonPositiveDt";
    case Errc::InvalidLimits: return "InvalidLimits";
    case Errc::DelayShorterThanDt: return "DelayShorterThanDt";
    case Errc::DtMismatch: return "DtMismatch";
    case Errc::NonlinearBlock: return "NonlinearBlock";
    case Errc::InitialOutputOutOfLimits: return "InitialOutputOutOfLimits";
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::NoSteadyState: return "NoSteadyState";
    case Errc::RateMismatch: return "RateMismatch";
    case Errc::MissingChannel: return "MissingChannel";
    case Errc::WrongModelKind: return "WrongModelKind";
    case Errc::MalformedCsv: return "MalformedCsv";
    case Errc::NonUniformSampling: return "NonUniformSampling";
    case Errc::EmptyFile: return "EmptyFile";
    case Errc::CutoffAboveNyquist: return "CutoffAboveNyquist";
    case Errc::MissingBase: return "MissingBase";
    case Errc::NonPositiveBase: return "NonPositiveBase";
    case Errc::DegeneratePeriod: return "DegeneratePeriod";
    case Errc::ConstantChannel: return "ConstantChannel";
    case Errc::GateSwitchInWindow: return "GateSwitchInWindow";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::SingularRegressor: return "SingularRegressor";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::Empty: return "Empty";
    case Errc::BadLambda: return "BadLambda";
    case Errc::ObjectivePanic: return "ObjectivePanic";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::AlphaOutOfRange: return "AlphaOutOfRange";
    case Errc::IncompleteRun: return "IncompleteRun";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(fmt::format("{}: {}", to_string(code), message)), code_(code) {}

}  // namespace govid

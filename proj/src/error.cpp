#include "drivevqa/error.hpp"

#include <fmt/format.h>

namespace drivevqa {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::UnknownToken: return "UnknownToken";
    case Errc::MalformedTable: return "MalformedTable";
    case Errc::NonMonotonicTimestamps: return "NonMonotonicTimestamps";
    case Errc::MalformedQuestionFile: return "MalformedQuestionFile";
    case Errc::InsufficientHistory: return "InsufficientHistory";
    case Errc::ZeroDt: return "ZeroDt";
    case Errc::NoVisibleCorner: return "NoVisibleCorner";
    case Errc::DegenerateImage: return "DegenerateImage";
    case Errc::UnroutableQuestion: return "UnroutableQuestion";
    case Errc::MissingImage: return "MissingImage";
    case Errc::TokenBudgetExceeded: return "TokenBudgetExceeded";
    case Errc::EndpointUnavailable: return "EndpointUnavailable";
    case Errc::BadRequest: return "BadRequest";
    case Errc::OversizedPayload: return "OversizedPayload";
    case Errc::UnparseableCompletion: return "UnparseableCompletion";
    case Errc::NoValidSamples: return "NoValidSamples";
    case Errc::KindMismatch: return "KindMismatch";
    case Errc::JudgeFailure: return "JudgeFailure";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(fmt::format("{}: {}", to_string(code), message)), code_(code) {}

}  // namespace drivevqa

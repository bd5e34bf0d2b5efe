#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace drivevqa {

enum class Errc {
  UnknownToken,
  MalformedTable,
  NonMonotonicTimestamps,
  MalformedQuestionFile,
  InsufficientHistory,
  ZeroDt,
  NoVisibleCorner,
  DegenerateImage,
  UnroutableQuestion,
  MissingImage,
  TokenBudgetExceeded,
  EndpointUnavailable,
  BadRequest,
  OversizedPayload,
  UnparseableCompletion,
  NoValidSamples,
  KindMismatch,
  JudgeFailure,
  InvalidArgument,
  Io,
};

std::string_view to_string(Errc code);

// Every failure the library reports carries one of the codes above so callers
// (notably the CLI exit-code mapping) can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace drivevqa

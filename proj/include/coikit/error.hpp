#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace coikit {

enum class ErrorCode {
  kIOFailure,
  kSchemaViolation,
  kDuplicateId,
  kUnlabeledCorpus,
  kMissingLabel,
  kEmptyInput,
  kDegenerateDistribution,
  kSupportMismatch,
  kNoQuestions,
  kRemoteUnavailable,
  kUnparseableLabel,
  kOutOfRangeScore,
  kZeroVector,
  kEmptyReferenceCorpus,
  kUnpairedScenario,
  kModelScoreOutOfRange,
  kKTooLarge,
  kCombinatorialBlowup,
  kMissingTemplate,
  kInvalidSpec,
  kInvalidArgument,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the toolkit. `details` carries
/// structured extras (offending ids, line diagnostics) for reports.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::vector<std::string> details = {})
      : std::runtime_error(message), code_(code), details_(std::move(details)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  ErrorCode code_;
  std::vector<std::string> details_;
};

struct LineIssue {
  std::size_t line = 0;  // 1-based
  std::string message;
};

class SchemaError : public Error {
 public:
  explicit SchemaError(std::vector<LineIssue> issues);

  const std::vector<LineIssue>& issues() const noexcept { return issues_; }

 private:
  std::vector<LineIssue> issues_;
};

}  // namespace coikit

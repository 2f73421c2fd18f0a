#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gam {

enum class ErrorCode {
  kLengthMismatch,
  kAllZeroAttribution,
  kEmptyInput,
  kKTooLarge,
  kKZero,
  kInvalidMedoidIndex,
  kEmptyCluster,
  kSingleCluster,
  kRowCountMismatch,
  kShapeMismatch,
  kIndexOutOfRange,
  kEmptyDataset,
  kMalformedModelFile,
  kUnsupportedActivation,
  kOddCount,
  kDegenerateFraction,
  kMalformedCsv,
  kUnknownLabelColumn,
  kNonNumericWithoutOneHot,
  kInvalidArgument,
  kIo,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kAllZeroAttribution: return "AllZeroAttribution";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kKTooLarge: return "KTooLarge";
    case ErrorCode::kKZero: return "KZero";
    case ErrorCode::kInvalidMedoidIndex: return "InvalidMedoidIndex";
    case ErrorCode::kEmptyCluster: return "EmptyCluster";
    case ErrorCode::kSingleCluster: return "SingleCluster";
    case ErrorCode::kRowCountMismatch: return "RowCountMismatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kMalformedModelFile: return "MalformedModelFile";
    case ErrorCode::kUnsupportedActivation: return "UnsupportedActivation";
    case ErrorCode::kOddCount: return "OddCount";
    case ErrorCode::kDegenerateFraction: return "DegenerateFraction";
    case ErrorCode::kMalformedCsv: return "MalformedCsv";
    case ErrorCode::kUnknownLabelColumn: return "UnknownLabelColumn";
    case ErrorCode::kNonNumericWithoutOneHot: return "NonNumericWithoutOneHot";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

/// Exception carrying a machine-checkable error code. Every failure raised by
/// the library goes through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace gam

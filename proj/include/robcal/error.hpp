#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace robcal {

/// Machine-readable failure categories. The CLI prints the code name and
/// derives its exit status from the enumerator value.
enum class ErrorCode {
  InvalidArgument = 2,
  Parse = 3,
  Io = 4,
  MissingNoise = 5,
  BucketMismatch = 6,
  Underdetermined = 7,
  RankDeficient = 8,
  Internal = 9,
};

constexpr std::string_view code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "E_INVALID_ARGUMENT";
    case ErrorCode::Parse: return "E_PARSE";
    case ErrorCode::Io: return "E_IO";
    case ErrorCode::MissingNoise: return "E_MISSING_NOISE";
    case ErrorCode::BucketMismatch: return "E_BUCKET_MISMATCH";
    case ErrorCode::Underdetermined: return "E_UNDERDETERMINED";
    case ErrorCode::RankDeficient: return "E_RANK_DEFICIENT";
    case ErrorCode::Internal: return "E_INTERNAL";
  }
  return "E_UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace robcal

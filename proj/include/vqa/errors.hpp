#pragma once

#include <stdexcept>
#include <string>

namespace vqa {

// Error categories double as CLI exit codes.
enum class ErrorCategory : int {
  config = 2,
  data = 3,
  numeric = 4,
  io = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& stage, const std::string& message)
      : std::runtime_error(stage + ": " + message), category_(category), stage_(stage) {}

  ErrorCategory category() const noexcept { return category_; }
  const std::string& stage() const noexcept { return stage_; }

 private:
  ErrorCategory category_;
  std::string stage_;
};

struct ConfigError : Error {
  ConfigError(const std::string& stage, const std::string& m) : Error(ErrorCategory::config, stage, m) {}
};

// Checkpoint/architecture mismatch is a configuration problem, not file damage.
struct CompatibilityError : ConfigError {
  using ConfigError::ConfigError;
};

struct DataError : Error {
  DataError(const std::string& stage, const std::string& m) : Error(ErrorCategory::data, stage, m) {}
};

struct ParseError : DataError {
  using DataError::DataError;
};

struct ValidationError : DataError {
  using DataError::DataError;
};

// Raised when a contrastive batch cannot be assembled from the available tiers.
struct CompositionError : DataError {
  using DataError::DataError;
};

struct DecodeError : DataError {
  using DataError::DataError;
};

struct NumericError : Error {
  NumericError(const std::string& stage, const std::string& m) : Error(ErrorCategory::numeric, stage, m) {}
};

// Correlation over a constant sequence; callers may catch this and continue.
struct UndefinedCorrelationError : NumericError {
  using NumericError::NumericError;
};

struct IoError : Error {
  IoError(const std::string& stage, const std::string& m) : Error(ErrorCategory::io, stage, m) {}
};

struct IntegrityError : IoError {
  using IoError::IoError;
};

}  // namespace vqa

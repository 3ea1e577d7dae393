#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gustrl {

/// Configuration failed validation. Carries every problem found, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  explicit ConfigError(const std::string& problem) : ConfigError(std::vector<std::string>{problem}) {}

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Base for malformed policy files.
class PolicyFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PolicyVersionError : public PolicyFormatError {
 public:
  using PolicyFormatError::PolicyFormatError;
};

class PolicyTruncatedError : public PolicyFormatError {
 public:
  using PolicyFormatError::PolicyFormatError;
};

class PolicyChecksumError : public PolicyFormatError {
 public:
  using PolicyFormatError::PolicyFormatError;
};

/// Network or policy shape does not match what the caller asked for.
class SpecMismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gustrl

#pragma once

#include <stdexcept>
#include <string>

namespace cgswap {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// File exists but its contents are not in a supported format.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Caller passed a value outside an operation's contract.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Missing or incompatible weights, empty datasets, bad config keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Training diverged (non-finite loss or gradient).
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Wraps a failure raised inside one pipeline stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace cgswap

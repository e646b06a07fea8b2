#pragma once

#include <stdexcept>
#include <string>

namespace ids {

/// Process exit codes used by the `ids-bench` CLI.
enum class ExitCode : int {
  kOk = 0,
  kConfig = 2,
  kNumerical = 3,
  kSaturation = 4,
  kIo = 5,
};

/// Root of the toolkit's exception hierarchy. Each subclass maps onto one
/// CLI exit code so that `main` can translate failures uniformly.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual ExitCode exit_code() const noexcept = 0;
};

/// Invalid argument or precondition violation (bad shape, out-of-range parameter).
class DomainError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kConfig; }
};

/// Bad experiment or service configuration (missing bucket dir, label mismatch).
class ConfigError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kConfig; }
};

/// Numerical breakdown (indefinite covariance, non-finite results, untrainable data).
class NumericalError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kNumerical; }
};

/// SVM training refused (e.g. only one class present).
class TrainingError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Rejection sampling ran out of attempts.
class SaturationError : public Error {
 public:
  SaturationError(const std::string& what, long attempts, double closest_ratio)
      : Error(what), attempts_(attempts), closest_ratio_(closest_ratio) {}
  ExitCode exit_code() const noexcept override { return ExitCode::kSaturation; }
  long attempts() const noexcept { return attempts_; }
  double closest_ratio() const noexcept { return closest_ratio_; }

 private:
  long attempts_;
  double closest_ratio_;
};

/// File system failure (open/read/write).
class IoError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kIo; }
};

/// Malformed file content. `kind` distinguishes the failure for callers and tests.
class ParseError : public IoError {
 public:
  enum class Kind { kBadMagic, kUnsupportedVersion, kTruncated, kNonFinite, kCorrupt };

  ParseError(Kind kind, const std::string& what) : IoError(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

const char* to_string(ParseError::Kind kind);

}  // namespace ids

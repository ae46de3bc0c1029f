#pragma once

#include <stdexcept>
#include <string>

namespace acela {

/// Failure categories surfaced by the library. The CLI maps these onto exit codes.
enum class ErrorKind {
  EmptyInput,
  DegenerateSplit,
  InvalidRecord,
  InvalidQuantile,
  ShapeError,
  InsufficientData,
  MissingFirmwareData,
  StaleData,
  UnknownJob,
  DivisionByZeroTruth,
  Undefined,
  InvalidSpec,
  InvalidConfig,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace acela

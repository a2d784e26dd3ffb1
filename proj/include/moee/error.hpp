// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace moee {

enum class ErrorKind {
  Config,
  Numeric,
  Shape,
  EmptyInput,
  Vocab,
  Io,
  Format,
  Corruption,
  Validation,
  Consistency,
  Strategy,
  Pairing,
  DegenerateInput,
  Template,
  UndefinedCorrelation,
  UndefinedMetric,
  UndefinedRanking,
  Size,
  DegenerateTask,
  Parse,
  Coverage,
  Spec,
  InsufficientData,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every domain failure in the library is reported as an Error carrying its
/// kind; the CLI maps all of them to exit code 1.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace moee

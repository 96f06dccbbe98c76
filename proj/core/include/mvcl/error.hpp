#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mvcl {

enum class ErrorKind {
  ViewMismatch,
  ParseError,
  EmptyInput,
  StatsMismatch,
  InvalidSpec,
  LabelsRequired,
  SplitInfeasible,
  DimError,
  NumericError,
  NumericDivergence,
  EmptyTrain,
  BenchmarkError,
  IoError,
  ConfigError,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), cause_(kind) {}
  // Wrapping error; `cause` keeps the kind of the original failure.
  Error(ErrorKind kind, ErrorKind cause, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), cause_(cause) {}

  ErrorKind kind() const noexcept { return kind_; }
  ErrorKind cause() const noexcept { return cause_; }

 private:
  ErrorKind kind_;
  ErrorKind cause_;
};

// Raised by train() when the objective stops being finite.
class NumericDivergence : public Error {
 public:
  NumericDivergence(long iteration, const std::string& what)
      : Error(ErrorKind::NumericDivergence,
              "iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration) {}

  long iteration() const noexcept { return iteration_; }

 private:
  long iteration_;
};

}  // namespace mvcl

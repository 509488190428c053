#pragma once

#include <stdexcept>
#include <string>

namespace mvx {

// Error categories. The CLI maps corrupt_repo to exit code 3 and every
// other thrown error to exit code 2; analysis outcomes ("the answer is
// no") are reported as data, never as errors.
enum class ErrorKind {
  usage,
  parse,
  precondition,
  not_found,
  conflict,
  io,
  locked,
  corrupt_repo,
  no_evaluator,
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

} // namespace mvx

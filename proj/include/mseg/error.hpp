#pragma once

#include <stdexcept>
#include <string>

namespace mseg {

/// Failure category. Values double as the CLI exit status.
enum class ErrorKind : int {
  usage = 1,
  data = 2,
  internal = 3,
};

/// Base exception for every library failure. The message is prefixed with the
/// module that raised it, e.g. "[grouping] k exceeds distinct samples".
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, const std::string& message)
      : std::runtime_error("[" + module + "] " + message),
        kind_(kind),
        module_(std::move(module)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }

 private:
  ErrorKind kind_;
  std::string module_;
};

class UsageError : public Error {
 public:
  UsageError(std::string module, const std::string& message)
      : Error(ErrorKind::usage, std::move(module), message) {}
};

class DataError : public Error {
 public:
  DataError(std::string module, const std::string& message)
      : Error(ErrorKind::data, std::move(module), message) {}
};

class InternalError : public Error {
 public:
  InternalError(std::string module, const std::string& message)
      : Error(ErrorKind::internal, std::move(module), message) {}
};

}  // namespace mseg

#pragma once

#include <stdexcept>
#include <string>

namespace crrix {

/// Failure categories; the CLI maps them onto exit codes 1, 2 and 3.
enum class ErrorKind { Usage = 1, Data = 2, Numerical = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct UsageError : Error {
  explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

struct DataError : Error {
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

/// Rethrow as the concrete subtype for `kind` with a new message.
[[noreturn]] inline void throw_error(ErrorKind kind, const std::string& what) {
  switch (kind) {
    case ErrorKind::Usage: throw UsageError(what);
    case ErrorKind::Data: throw DataError(what);
    case ErrorKind::Numerical: throw NumericalError(what);
  }
  throw Error(kind, what);
}

}  // namespace crrix

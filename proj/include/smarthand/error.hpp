#pragma once

#include <stdexcept>
#include <string>

namespace smarthand {

/// Error categories surfaced by the library. The C API maps each onto a
/// distinct status code and the CLI onto an exit code.
enum class ErrorKind {
  Io,
  BadMagic,
  Truncated,
  Validation,
  InvalidArgument,
  BufferLimit,
  Singular,
  NonConvergence,
  MissingCache,
  Config,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by iterative solvers that exhaust their iteration budget.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, int iterations, double residual)
      : Error(ErrorKind::NonConvergence, what),
        iterations_(iterations),
        residual_(residual) {}

  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  int iterations_;
  double residual_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) throw Error(kind, what);
}

}  // namespace smarthand

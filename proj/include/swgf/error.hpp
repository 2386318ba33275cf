#pragma once

#include <stdexcept>
#include <string>

namespace swgf {

/// Failure categories. The CLI maps each one to a distinct exit code.
enum class ErrorKind {
  kInvalidArgument,  // violated precondition of a library call
  kConfig,           // bad or missing configuration value
  kData,             // malformed input file or observation stream
  kNumerical,        // unstable discretization, rank deficiency, non-PSD input
  kUnsafeStep,       // step size outside the convergence interval
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::kInvalidArgument, what);
}

}  // namespace swgf

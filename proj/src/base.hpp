#pragma once

#include <stdexcept>
#include <string>

namespace fdikit {

// Error categories exposed through the C API and mapped to CLI exit codes.
enum class ErrorCode {
  invalid_argument = 1,   // bad dimensions, indices, options
  unsolvable = 2,         // synthesis problem has no solution
  numeric = 3,            // factorization / convergence failure
  unsupported = 4,        // out of the supported problem class (e.g. singular E)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

[[noreturn]] inline void fail_arg(const std::string& msg) {
  fail(ErrorCode::invalid_argument, msg);
}

}  // namespace fdikit

// Typed error hierarchy shared by every module. Each failure mode carries a
// stable machine-parsable code so the CLI can print "code: message" lines.
#ifndef CCI_ERRORS_HPP_
#define CCI_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace cci {

enum class ErrorCode {
  invalid_argument,
  not_found,
  unsupported_format,
  channel_too_short,
  infeasible_geometry,
  numerical_failure,
  infeasible_constraints,
  degenerate_initialization,
  ensemble_failure,
  estimation_failure,
  io_error,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::not_found: return "not-found";
    case ErrorCode::unsupported_format: return "unsupported-format";
    case ErrorCode::channel_too_short: return "channel-too-short";
    case ErrorCode::infeasible_geometry: return "infeasible-geometry";
    case ErrorCode::numerical_failure: return "numerical-failure";
    case ErrorCode::infeasible_constraints: return "infeasible-constraints";
    case ErrorCode::degenerate_initialization: return "degenerate-initialization";
    case ErrorCode::ensemble_failure: return "ensemble-failure";
    case ErrorCode::estimation_failure: return "estimation-failure";
    case ErrorCode::io_error: return "io-error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }
  const char* code_name() const { return error_code_name(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_error(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace cci

#endif  // CCI_ERRORS_HPP_

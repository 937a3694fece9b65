#pragma once

#include <stdexcept>
#include <string>

namespace deepclaw {

enum class ErrorCode {
  InvalidArgument,
  Config,
  Io,
  DegenerateInput,
  NoObservations,
  OutOfWorkspace,
  Consistency,
  NoGrasp,
  Internal,
};

const char* error_code_name(ErrorCode code);

/// Library-wide exception carrying a coarse error code. The C API maps the
/// code one-to-one onto dc_status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace deepclaw

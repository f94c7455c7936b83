#pragma once

#include <stdexcept>
#include <string>

namespace egomo {

// Error taxonomy shared by the C++ core, the C API status codes and the CLI
// exit codes. Keep the numbering in sync with egomo/egomo.h.
enum class ErrorKind {
  config = 2,
  io = 3,
  integrity = 4,
  version = 5,
  shape = 6,
  missing_checkpoint = 7,
  placement = 8,
  degenerate_input = 9,
  near_static = 10,
  non_finite = 11,
  invalid_argument = 12,
  internal = 13,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

inline void require(bool ok, ErrorKind kind, const std::string& msg) {
  if (!ok) fail(kind, msg);
}

}  // namespace egomo

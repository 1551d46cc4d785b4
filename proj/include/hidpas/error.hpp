#pragma once

#include <stdexcept>
#include <string>

namespace hidpas {

enum class ErrorKind {
  invalid_argument,
  io,
  parse,
  data,
  impossible_evidence,
  internal,
};

/// Every failure raised by the core library carries one of these kinds so the
/// C API can map it onto a status code without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace hidpas

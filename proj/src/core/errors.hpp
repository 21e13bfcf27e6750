#pragma once

#include <stdexcept>
#include <string>

namespace sa {

// Error categories map 1:1 onto C-API status codes and CLI exit codes.
enum class ErrorKind {
  Usage,     // bad arguments, malformed config or input files
  Io,        // filesystem failures
  Parse,     // malformed records, unparseable judge output
  Contract,  // instrument-contract violations (digest mismatch etc.)
  Provider,  // endpoint failure after retries
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string msg)
      : std::runtime_error(std::move(msg)), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

}  // namespace sa

#pragma once

#include <stdexcept>
#include <string>

namespace ssce {

enum class ErrorCode {
  InvalidArgument,
  Config,
  Io,
  Parse,
  Numerical,
  DegenerateGate,
  StaleCache,
};

// Base for every error the library raises. The C layer maps `code()` onto
// its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorCode::Parse, "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

inline void require(bool cond, const std::string& what,
                    ErrorCode code = ErrorCode::InvalidArgument) {
  if (!cond) throw Error(code, what);
}

}  // namespace ssce

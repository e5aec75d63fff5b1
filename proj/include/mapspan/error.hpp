#pragma once

#include <stdexcept>
#include <string>

namespace mapspan {

// Error categories, kept in sync with the status codes of the C API.
enum class ErrorCode {
  invalid_argument = 1,
  dimension = 2,
  index = 3,
  vocabulary = 4,
  resource = 5,
  training = 6,
  numeric = 7,
  parse = 8,
  schema = 9,
  config = 10,
  evaluation = 11,
  io = 12,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

}  // namespace mapspan

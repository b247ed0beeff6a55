#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace anisostokes {

enum class ErrorCode {
  InvalidArgument = 1,
  UnsupportedCut,
  DegenerateCell,
  InvertedCell,
  OutOfDomain,
  SingularMatrix,
  InternalError,
  IoError,
  ConfigError,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace anisostokes

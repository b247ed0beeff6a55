#include "anisostokes/error.hpp"

namespace anisostokes {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::UnsupportedCut: return "unsupported-cut";
    case ErrorCode::DegenerateCell: return "degenerate-cell";
    case ErrorCode::InvertedCell: return "inverted-cell";
    case ErrorCode::OutOfDomain: return "out-of-domain";
    case ErrorCode::SingularMatrix: return "singular-matrix";
    case ErrorCode::InternalError: return "internal-error";
    case ErrorCode::IoError: return "io-error";
    case ErrorCode::ConfigError: return "config-error";
  }
  return "unknown";
}

}  // namespace anisostokes

#include "smarthand/error.hpp"

namespace smarthand {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Io: return "io";
    case ErrorKind::BadMagic: return "bad_magic";
    case ErrorKind::Truncated: return "truncated";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::BufferLimit: return "buffer_limit";
    case ErrorKind::Singular: return "singular";
    case ErrorKind::NonConvergence: return "non_convergence";
    case ErrorKind::MissingCache: return "missing_cache";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

}  // namespace smarthand

#include "errors.hpp"

namespace sgc {

const char* error_kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::shape: return "shape";
    case ErrorKind::format: return "format";
    case ErrorKind::io: return "io";
    case ErrorKind::data: return "data";
    case ErrorKind::index: return "index";
    case ErrorKind::state: return "state";
    case ErrorKind::domain: return "domain";
    case ErrorKind::config: return "config";
    case ErrorKind::capacity: return "capacity";
    case ErrorKind::training: return "training";
  }
  return "unknown";
}

}  // namespace sgc

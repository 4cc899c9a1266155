#pragma once

#include <stdexcept>
#include <string>

namespace sgc {

// Every failure raised by the core carries one of these kinds; the C API
// maps them one-to-one onto sgc_status codes.
enum class ErrorKind {
  shape,
  format,
  io,
  data,
  index,
  state,
  domain,
  config,
  capacity,
  training,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define SGC_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

SGC_DEFINE_ERROR(ShapeError, shape)
SGC_DEFINE_ERROR(FormatError, format)
SGC_DEFINE_ERROR(IoError, io)
SGC_DEFINE_ERROR(DataError, data)
SGC_DEFINE_ERROR(IndexError, index)
SGC_DEFINE_ERROR(StateError, state)
SGC_DEFINE_ERROR(DomainError, domain)
SGC_DEFINE_ERROR(ConfigError, config)
SGC_DEFINE_ERROR(CapacityError, capacity)
SGC_DEFINE_ERROR(TrainingError, training)

#undef SGC_DEFINE_ERROR

const char* error_kind_name(ErrorKind kind) noexcept;

}  // namespace sgc

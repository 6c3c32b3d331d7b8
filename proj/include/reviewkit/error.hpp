#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace reviewkit {

/// Machine-readable error category; maps onto HTTP status in the service layer.
enum class ErrorCode {
  invalid_argument,
  contract_violation,
  not_found,
  catalog_miss,
  invalid_state,
  backend_error,
  empty_response,
  format_error,
  io_error,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::contract_violation: return "contract_violation";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::catalog_miss: return "catalog_miss";
    case ErrorCode::invalid_state: return "invalid_state";
    case ErrorCode::backend_error: return "backend_error";
    case ErrorCode::empty_response: return "empty_response";
    case ErrorCode::format_error: return "format_error";
    case ErrorCode::io_error: return "io_error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

#define REVIEWKIT_DEFINE_ERROR(Name, Code)                                  \
  class Name : public Error {                                              \
   public:                                                                 \
    explicit Name(const std::string& message, std::string detail = {})     \
        : Error(ErrorCode::Code, message, std::move(detail)) {}            \
  };

REVIEWKIT_DEFINE_ERROR(InvalidArgument, invalid_argument)
REVIEWKIT_DEFINE_ERROR(ContractViolation, contract_violation)
REVIEWKIT_DEFINE_ERROR(NotFound, not_found)
// Product type has too few reviews (or none) to serve mined topics.
REVIEWKIT_DEFINE_ERROR(CatalogMiss, catalog_miss)
REVIEWKIT_DEFINE_ERROR(InvalidState, invalid_state)
REVIEWKIT_DEFINE_ERROR(BackendError, backend_error)
REVIEWKIT_DEFINE_ERROR(EmptyResponse, empty_response)
REVIEWKIT_DEFINE_ERROR(FormatError, format_error)
REVIEWKIT_DEFINE_ERROR(IoError, io_error)

#undef REVIEWKIT_DEFINE_ERROR

}  // namespace reviewkit

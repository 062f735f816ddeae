#pragma once

#include <cassert>
#include <optional>
#include <string>
#include <utility>

namespace fogconf {

// Stable error codes shared by the registry, the quorum store and the wire
// protocol. The string forms appear verbatim in responses and CSV output.
enum class ErrorCode {
  BadRequest,
  MalformedAddress,
  KeygroupExists,
  NoSuchKeygroup,
  NoSuchNode,
  NoQuorum,
  Timeout,
  Unreachable,
  SeedUnreachable,
  Internal,
};

const char* to_string(ErrorCode code);
std::optional<ErrorCode> error_code_from_string(const std::string& s);

struct Error {
  ErrorCode code = ErrorCode::Internal;
  std::string message;
};

template <typename T>
class Result {
 public:
  Result(T value) : value_(std::move(value)) {}  // NOLINT: implicit by design
  Result(Error error) : error_(std::move(error)) {}
  Result(ErrorCode code, std::string message = {})
      : error_(Error{code, std::move(message)}) {}

  bool ok() const { return value_.has_value(); }
  explicit operator bool() const { return ok(); }

  const T& value() const {
    assert(ok());
    return *value_;
  }
  T& value() {
    assert(ok());
    return *value_;
  }
  T take() {
    assert(ok());
    return std::move(*value_);
  }

  const Error& error() const {
    assert(!ok());
    return *error_;
  }

 private:
  std::optional<T> value_;
  std::optional<Error> error_;
};

class Status {
 public:
  Status() = default;
  Status(Error error) : error_(std::move(error)) {}  // NOLINT
  Status(ErrorCode code, std::string message = {})
      : error_(Error{code, std::move(message)}) {}

  static Status ok_status() { return Status(); }

  bool ok() const { return !error_.has_value(); }
  explicit operator bool() const { return ok(); }

  const Error& error() const {
    assert(!ok());
    return *error_;
  }

 private:
  std::optional<Error> error_;
};

}  // namespace fogconf

#include "fogconf/result.hpp"

namespace fogconf {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadRequest: return "BadRequest";
    case ErrorCode::MalformedAddress: return "MalformedAddress";
    case ErrorCode::KeygroupExists: return "KeygroupExists";
    case ErrorCode::NoSuchKeygroup: return "NoSuchKeygroup";
    case ErrorCode::NoSuchNode: return "NoSuchNode";
    case ErrorCode::NoQuorum: return "NoQuorum";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::SeedUnreachable: return "SeedUnreachable";
    case ErrorCode::Internal: return "Internal";
  }
  return "Internal";
}

std::optional<ErrorCode> error_code_from_string(const std::string& s) {
  static const struct {
    const char* name;
    ErrorCode code;
  } kTable[] = {
      {"BadRequest", ErrorCode::BadRequest},
      {"MalformedAddress", ErrorCode::MalformedAddress},
      {"KeygroupExists", ErrorCode::KeygroupExists},
      {"NoSuchKeygroup", ErrorCode::NoSuchKeygroup},
      {"NoSuchNode", ErrorCode::NoSuchNode},
      {"NoQuorum", ErrorCode::NoQuorum},
      {"Timeout", ErrorCode::Timeout},
      {"Unreachable", ErrorCode::Unreachable},
      {"SeedUnreachable", ErrorCode::SeedUnreachable},
      {"Internal", ErrorCode::Internal},
  };
  for (const auto& row : kTable) {
    if (s == row.name) return row.code;
  }
  return std::nullopt;
}

}  // namespace fogconf

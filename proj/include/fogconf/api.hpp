#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "fogconf/bytes.hpp"
#include "fogconf/result.hpp"
#include "fogconf/wire.hpp"

namespace fogconf {

// Wire envelope: a 4-byte big-endian length prefix followed by that many
// bytes of canonical record. protocol.md documents the exact bytes.
struct Envelope {
  std::int64_t version = 1;
  std::string msg_type;
  std::string request_id;
  Json body = Json::object();
};

inline constexpr std::int64_t kProtocolVersion = 1;
inline constexpr std::uint32_t kMaxFrameBytes = 64u * 1024u * 1024u;

// Client-facing operations plus the gossip exchange. A response envelope
// repeats the request's msg_type and request_id; its body carries
// status "Ok" or "Error" with a stable code.
namespace msg {
inline constexpr const char* kCreateKeygroup = "CreateKeygroup";
inline constexpr const char* kDeleteKeygroup = "DeleteKeygroup";
inline constexpr const char* kJoinKeygroup = "JoinKeygroup";
inline constexpr const char* kLeaveKeygroup = "LeaveKeygroup";
inline constexpr const char* kRegisterNode = "RegisterNode";
inline constexpr const char* kSetPermission = "SetPermission";
inline constexpr const char* kRevokePermission = "RevokePermission";
inline constexpr const char* kCheckPermission = "CheckPermission";
inline constexpr const char* kGetReplicas = "GetReplicas";
inline constexpr const char* kKeygroupCount = "KeygroupCount";
inline constexpr const char* kStateExchange = "StateExchange";
}  // namespace msg

Bytes encode_frame(const Envelope& envelope);
Result<Envelope> decode_frame(const Bytes& frame);

// Reads one length prefix. Returns the record length or an error for a
// syntactically impossible prefix.
Result<std::uint32_t> decode_length_prefix(const std::uint8_t* data,
                                           std::size_t size);

Envelope make_request(std::string msg_type, std::string request_id, Json body);
Envelope make_ok_response(const Envelope& request, Json body = Json::object());
Envelope make_error_response(const Envelope& request, ErrorCode code,
                             const std::string& message);

// True iff the body says status == "Ok".
bool response_ok(const Envelope& response);
// Error code of a non-Ok response body (Internal if unparseable).
ErrorCode response_error_code(const Envelope& response);

}  // namespace fogconf

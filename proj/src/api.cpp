#include "fogconf/api.hpp"

namespace fogconf {

Bytes encode_frame(const Envelope& envelope) {
  Json record{{"body", envelope.body},
              {"msg_type", envelope.msg_type},
              {"request_id", envelope.request_id},
              {"version", envelope.version}};
  std::string text = canonical_dump(record);
  Bytes frame;
  frame.reserve(4 + text.size());
  auto length = static_cast<std::uint32_t>(text.size());
  frame.push_back(static_cast<std::uint8_t>((length >> 24) & 0xff));
  frame.push_back(static_cast<std::uint8_t>((length >> 16) & 0xff));
  frame.push_back(static_cast<std::uint8_t>((length >> 8) & 0xff));
  frame.push_back(static_cast<std::uint8_t>(length & 0xff));
  frame.insert(frame.end(), text.begin(), text.end());
  return frame;
}

Result<std::uint32_t> decode_length_prefix(const std::uint8_t* data,
                                           std::size_t size) {
  if (size < 4) {
    return Error{ErrorCode::BadRequest, "frame shorter than length prefix"};
  }
  std::uint32_t length = (static_cast<std::uint32_t>(data[0]) << 24) |
                         (static_cast<std::uint32_t>(data[1]) << 16) |
                         (static_cast<std::uint32_t>(data[2]) << 8) |
                         static_cast<std::uint32_t>(data[3]);
  if (length > kMaxFrameBytes) {
    return Error{ErrorCode::BadRequest, "frame length exceeds limit"};
  }
  return length;
}

Result<Envelope> decode_frame(const Bytes& frame) {
  auto length = decode_length_prefix(frame.data(), frame.size());
  if (!length) return length.error();
  if (frame.size() != 4u + length.value()) {
    return Error{ErrorCode::BadRequest, "truncated frame"};
  }
  auto record = parse_json(std::string_view(
      reinterpret_cast<const char*>(frame.data()) + 4, length.value()));
  if (!record) return record.error();

  auto version = get_int(record.value(), "version");
  if (!version) return version.error();
  if (version.value() != kProtocolVersion) {
    return Error{ErrorCode::BadRequest, "unsupported protocol version"};
  }
  auto msg_type = get_string(record.value(), "msg_type");
  if (!msg_type) return msg_type.error();
  auto request_id = get_string(record.value(), "request_id");
  if (!request_id) return request_id.error();
  auto body = get_object(record.value(), "body");
  if (!body) return body.error();

  return Envelope{version.value(), msg_type.take(), request_id.take(),
                  body.take()};
}

Envelope make_request(std::string msg_type, std::string request_id,
                      Json body) {
  return Envelope{kProtocolVersion, std::move(msg_type),
                  std::move(request_id), std::move(body)};
}

Envelope make_ok_response(const Envelope& request, Json body) {
  body["status"] = "Ok";
  return Envelope{kProtocolVersion, request.msg_type, request.request_id,
                  std::move(body)};
}

Envelope make_error_response(const Envelope& request, ErrorCode code,
                             const std::string& message) {
  return Envelope{kProtocolVersion, request.msg_type, request.request_id,
                  Json{{"code", to_string(code)},
                       {"message", message},
                       {"status", "Error"}}};
}

bool response_ok(const Envelope& response) {
  auto status = get_string(response.body, "status");
  return status && status.value() == "Ok";
}

ErrorCode response_error_code(const Envelope& response) {
  auto code = get_string(response.body, "code");
  if (!code) return ErrorCode::Internal;
  auto parsed = error_code_from_string(code.value());
  return parsed.value_or(ErrorCode::Internal);
}

}  // namespace fogconf

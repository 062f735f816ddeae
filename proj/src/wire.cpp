#include "fogconf/wire.hpp"

namespace fogconf {

std::string canonical_dump(const Json& value) {
  return value.dump(-1, ' ', false, Json::error_handler_t::strict);
}

Bytes canonical_bytes(const Json& value) {
  return to_bytes(canonical_dump(value));
}

Json timestamp_to_json(const Timestamp& ts) {
  return Json{{"replica_id", ts.replica_id},
              {"seq", ts.seq},
              {"time_ms", ts.time_ms}};
}

Result<Timestamp> timestamp_from_json(const Json& j) {
  auto time_ms = get_int(j, "time_ms");
  if (!time_ms) return time_ms.error();
  auto seq = get_int(j, "seq");
  if (!seq) return seq.error();
  auto replica_id = get_string(j, "replica_id");
  if (!replica_id) return replica_id.error();
  return Timestamp{time_ms.value(), seq.value(), replica_id.take()};
}

Json lww_set_to_json(const LwwElementSet& set) {
  Json adds = Json::object();
  for (const auto& [id, entry] : set.adds()) {
    adds[hex_encode(id)] = Json{{"payload", hex_encode(entry.payload)},
                                {"stamp", timestamp_to_json(entry.stamp)}};
  }
  Json removes = Json::object();
  for (const auto& [id, stamp] : set.removes()) {
    removes[hex_encode(id)] = timestamp_to_json(stamp);
  }
  return Json{{"adds", std::move(adds)}, {"removes", std::move(removes)}};
}

Result<LwwElementSet> lww_set_from_json(const Json& j) {
  auto adds = get_object(j, "adds");
  if (!adds) return adds.error();
  auto removes = get_object(j, "removes");
  if (!removes) return removes.error();

  LwwElementSet set;
  for (const auto& [hex_id, entry] : adds.value().items()) {
    auto id = hex_decode(hex_id);
    if (!id) return Error{ErrorCode::BadRequest, "bad hex element id"};
    if (!entry.is_object()) {
      return Error{ErrorCode::BadRequest, "add entry is not an object"};
    }
    auto payload_hex = get_string(entry, "payload");
    if (!payload_hex) return payload_hex.error();
    auto payload = hex_decode(payload_hex.value());
    if (!payload) return Error{ErrorCode::BadRequest, "bad hex payload"};
    auto stamp_json = get_object(entry, "stamp");
    if (!stamp_json) return stamp_json.error();
    auto stamp = timestamp_from_json(stamp_json.value());
    if (!stamp) return stamp.error();
    set.add(to_string(*id), std::move(*payload), stamp.value());
  }
  for (const auto& [hex_id, stamp_json] : removes.value().items()) {
    auto id = hex_decode(hex_id);
    if (!id) return Error{ErrorCode::BadRequest, "bad hex element id"};
    auto stamp = timestamp_from_json(stamp_json);
    if (!stamp) return stamp.error();
    set.remove(to_string(*id), stamp.value());
  }
  return set;
}

Result<std::string> get_string(const Json& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_string()) {
    return Error{ErrorCode::BadRequest, "missing string field: " + key};
  }
  return j.at(key).get<std::string>();
}

Result<std::int64_t> get_int(const Json& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key) ||
      !j.at(key).is_number_integer()) {
    return Error{ErrorCode::BadRequest, "missing integer field: " + key};
  }
  return j.at(key).get<std::int64_t>();
}

Result<bool> get_bool(const Json& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_boolean()) {
    return Error{ErrorCode::BadRequest, "missing boolean field: " + key};
  }
  return j.at(key).get<bool>();
}

Result<Json> get_object(const Json& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_object()) {
    return Error{ErrorCode::BadRequest, "missing object field: " + key};
  }
  return j.at(key);
}

Result<Json> get_array(const Json& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_array()) {
    return Error{ErrorCode::BadRequest, "missing array field: " + key};
  }
  return j.at(key);
}

Result<Json> parse_json(std::string_view text) {
  Json parsed = Json::parse(text, nullptr, false);
  if (parsed.is_discarded()) {
    return Error{ErrorCode::BadRequest, "malformed record"};
  }
  return parsed;
}

}  // namespace fogconf

#pragma once

// Canonical record encoding shared by the wire protocol, snapshots and state
// hashing. A canonical record is a JSON value whose object keys are sorted
// bytewise and whose serialized form (compact dump, no whitespace) is
// therefore identical for equal values. Opaque byte strings (CRDT payloads
// and element ids) are embedded as lowercase hex.

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "fogconf/bytes.hpp"
#include "fogconf/crdt.hpp"
#include "fogconf/result.hpp"

namespace fogconf {

using Json = nlohmann::json;

// Compact dump; nlohmann objects are backed by std::map, so keys come out
// bytewise-sorted already.
std::string canonical_dump(const Json& value);
Bytes canonical_bytes(const Json& value);

Json timestamp_to_json(const Timestamp& ts);
Result<Timestamp> timestamp_from_json(const Json& j);

// LwwElementSet <-> {"adds": {hex_id: {"payload": hex, "stamp": {...}}},
//                    "removes": {hex_id: {...stamp...}}}
Json lww_set_to_json(const LwwElementSet& set);
Result<LwwElementSet> lww_set_from_json(const Json& j);

// Field accessors that return errors instead of throwing.
Result<std::string> get_string(const Json& j, const std::string& key);
Result<std::int64_t> get_int(const Json& j, const std::string& key);
Result<bool> get_bool(const Json& j, const std::string& key);
Result<Json> get_object(const Json& j, const std::string& key);
Result<Json> get_array(const Json& j, const std::string& key);

Result<Json> parse_json(std::string_view text);

}  // namespace fogconf

#include "fogconf/registry.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fogconf/bytes.hpp"

namespace fogconf {

namespace {

constexpr char kSeparator = '\x1f';

// Membership records share the keygroups set: the paper's "keygroup
// configuration" covers both the keygroup itself (key = keygroup_id) and
// its replication membership (key = keygroup_id 0x1f node_id). Plain ids
// never contain the separator, so the two kinds cannot collide.

Bytes node_payload(const std::string& node_id, const std::string& address) {
  return canonical_bytes(
      Json{{"address", address}, {"node_id", node_id}, {"v", 1}});
}

Bytes keygroup_payload(const KeygroupConfig& config,
                       const std::string& creator) {
  return canonical_bytes(Json{{"creator", creator},
                              {"expiry_s", config.expiry_s},
                              {"mutable", config.is_mutable},
                              {"v", 1}});
}

Bytes membership_payload(const std::string& keygroup_id,
                         const std::string& node_id) {
  return canonical_bytes(Json{{"keygroup_id", keygroup_id},
                              {"node_id", node_id},
                              {"role", "replica"},
                              {"v", 1}});
}

Bytes permission_payload(const std::string& user_id,
                         const std::string& keygroup_id,
                         const std::set<Action>& actions) {
  Json list = Json::array();
  for (Action a : actions) list.push_back(to_string(a));
  return canonical_bytes(Json{{"actions", std::move(list)},
                              {"keygroup_id", keygroup_id},
                              {"user_id", user_id},
                              {"v", 1}});
}

Bytes organization_payload(const std::string& node_id,
                           const OrganizationInfo& info) {
  Json labels = Json::object();
  for (const auto& [k, v] : info.labels) labels[k] = v;
  return canonical_bytes(Json{{"labels", std::move(labels)},
                              {"node_id", node_id},
                              {"v", 1},
                              {"zone", info.zone}});
}

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.size() >= prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
}

bool is_composite(const std::string& key) {
  return key.find(kSeparator) != std::string::npos;
}

std::pair<std::string, std::string> split_composite(const std::string& key) {
  auto pos = key.find(kSeparator);
  return {key.substr(0, pos), key.substr(pos + 1)};
}

}  // namespace

const char* to_string(Action a) {
  switch (a) {
    case Action::Read: return "Read";
    case Action::Update: return "Update";
    case Action::Delete: return "Delete";
    case Action::Configure: return "Configure";
  }
  return "Read";
}

std::optional<Action> action_from_string(const std::string& s) {
  if (s == "Read") return Action::Read;
  if (s == "Update") return Action::Update;
  if (s == "Delete") return Action::Delete;
  if (s == "Configure") return Action::Configure;
  return std::nullopt;
}

bool is_valid_address(const std::string& address) {
  auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 ||
      colon + 1 >= address.size()) {
    return false;
  }
  long port = 0;
  for (std::size_t i = colon + 1; i < address.size(); ++i) {
    char c = address[i];
    if (c < '0' || c > '9') return false;
    port = port * 10 + (c - '0');
    if (port > 65535) return false;
  }
  return port >= 1;
}

std::string composite_key(const std::string& a, const std::string& b) {
  return a + kSeparator + b;
}

bool is_valid_identifier(const std::string& id) {
  return !id.empty() && id.find(kSeparator) == std::string::npos;
}

Registry::Registry(std::string replica_id) : clock_(std::move(replica_id)) {}

Registry::Registry(std::string replica_id, std::int64_t clock_time_ms,
                   std::int64_t clock_seq)
    : clock_(std::move(replica_id), clock_time_ms, clock_seq) {}

Status Registry::register_node(const std::string& node_id,
                               const std::string& address,
                               std::int64_t now_ms) {
  if (!is_valid_identifier(node_id)) {
    return Error{ErrorCode::BadRequest, "invalid node id"};
  }
  if (!is_valid_address(address)) {
    return Error{ErrorCode::MalformedAddress,
                 "address must be host:port, got: " + address};
  }
  nodes_.add(node_id, node_payload(node_id, address), stamp(now_ms));
  return Status::ok_status();
}

Status Registry::create_keygroup(const std::string& keygroup_id,
                                 const KeygroupConfig& config,
                                 const std::string& creator,
                                 std::int64_t now_ms) {
  if (!is_valid_identifier(keygroup_id)) {
    return Error{ErrorCode::BadRequest, "invalid keygroup id"};
  }
  if (!is_valid_identifier(creator)) {
    return Error{ErrorCode::BadRequest, "invalid creator id"};
  }
  if (keygroup_live(keygroup_id)) {
    return Error{ErrorCode::KeygroupExists,
                 "keygroup already exists: " + keygroup_id};
  }
  keygroups_.add(keygroup_id, keygroup_payload(config, creator),
                 stamp(now_ms));
  // The creator starts with full rights on the new keygroup.
  std::set<Action> all{Action::Read, Action::Update, Action::Delete,
                       Action::Configure};
  permissions_.add(composite_key(creator, keygroup_id),
                   permission_payload(creator, keygroup_id, all),
                   stamp(now_ms));
  return Status::ok_status();
}

Status Registry::delete_keygroup(const std::string& keygroup_id,
                                 std::int64_t now_ms) {
  if (!keygroup_live(keygroup_id)) {
    return Error{ErrorCode::NoSuchKeygroup,
                 "no such keygroup: " + keygroup_id};
  }
  keygroups_.remove(keygroup_id, stamp(now_ms));

  // Cascade: tombstone every live membership and permission that references
  // this keygroup, each with its own fresh stamp.
  const std::string prefix = keygroup_id + kSeparator;
  std::vector<std::string> doomed;
  for (auto it = keygroups_.adds().lower_bound(prefix);
       it != keygroups_.adds().end() && starts_with(it->first, prefix); ++it) {
    if (keygroups_.is_member(it->first)) doomed.push_back(it->first);
  }
  for (const auto& key : doomed) keygroups_.remove(key, stamp(now_ms));

  doomed.clear();
  for (const auto& [key, entry] : permissions_.adds()) {
    if (!permissions_.is_member(key)) continue;
    auto [user, kg] = split_composite(key);
    if (kg == keygroup_id) doomed.push_back(key);
  }
  for (const auto& key : doomed) permissions_.remove(key, stamp(now_ms));
  return Status::ok_status();
}

Status Registry::join_keygroup(const std::string& keygroup_id,
                               const std::string& node_id,
                               std::int64_t now_ms) {
  if (!keygroup_live(keygroup_id)) {
    return Error{ErrorCode::NoSuchKeygroup,
                 "no such keygroup: " + keygroup_id};
  }
  if (!nodes_.is_member(node_id)) {
    return Error{ErrorCode::NoSuchNode, "no such node: " + node_id};
  }
  keygroups_.add(composite_key(keygroup_id, node_id),
                 membership_payload(keygroup_id, node_id), stamp(now_ms));
  return Status::ok_status();
}

Status Registry::leave_keygroup(const std::string& keygroup_id,
                                const std::string& node_id,
                                std::int64_t now_ms) {
  if (!keygroup_live(keygroup_id)) {
    return Error{ErrorCode::NoSuchKeygroup,
                 "no such keygroup: " + keygroup_id};
  }
  if (!nodes_.is_member(node_id)) {
    return Error{ErrorCode::NoSuchNode, "no such node: " + node_id};
  }
  keygroups_.remove(composite_key(keygroup_id, node_id), stamp(now_ms));
  return Status::ok_status();
}

Status Registry::set_permission(const std::string& user_id,
                                const std::string& keygroup_id,
                                const std::set<Action>& actions,
                                std::int64_t now_ms) {
  if (!is_valid_identifier(user_id)) {
    return Error{ErrorCode::BadRequest, "invalid user id"};
  }
  if (actions.empty()) {
    return Error{ErrorCode::BadRequest, "permission needs at least one action"};
  }
  if (!keygroup_live(keygroup_id)) {
    return Error{ErrorCode::NoSuchKeygroup,
                 "no such keygroup: " + keygroup_id};
  }
  permissions_.add(composite_key(user_id, keygroup_id),
                   permission_payload(user_id, keygroup_id, actions),
                   stamp(now_ms));
  return Status::ok_status();
}

Status Registry::revoke_permission(const std::string& user_id,
                                   const std::string& keygroup_id,
                                   std::int64_t now_ms) {
  if (!keygroup_live(keygroup_id)) {
    return Error{ErrorCode::NoSuchKeygroup,
                 "no such keygroup: " + keygroup_id};
  }
  permissions_.remove(composite_key(user_id, keygroup_id), stamp(now_ms));
  return Status::ok_status();
}

Status Registry::set_organization(const std::string& node_id,
                                  const OrganizationInfo& info,
                                  std::int64_t now_ms) {
  if (!nodes_.is_member(node_id)) {
    return Error{ErrorCode::NoSuchNode, "no such node: " + node_id};
  }
  organization_.add(node_id, organization_payload(node_id, info),
                    stamp(now_ms));
  return Status::ok_status();
}

bool Registry::check_permission(const std::string& user_id,
                                const std::string& keygroup_id,
                                Action action) const {
  auto payload = permissions_.lookup(composite_key(user_id, keygroup_id));
  if (!payload) return false;
  auto record = parse_json(to_string(*payload));
  if (!record) return false;
  auto actions = get_array(record.value(), "actions");
  if (!actions) return false;
  for (const auto& item : actions.value()) {
    if (item.is_string() && item.get<std::string>() == to_string(action)) {
      return true;
    }
  }
  return false;
}

Result<std::vector<NodeInfo>> Registry::get_replicas(
    const std::string& keygroup_id) const {
  if (!keygroup_live(keygroup_id)) {
    return Error{ErrorCode::NoSuchKeygroup,
                 "no such keygroup: " + keygroup_id};
  }
  std::vector<NodeInfo> out;
  const std::string prefix = keygroup_id + kSeparator;
  for (auto it = keygroups_.adds().lower_bound(prefix);
       it != keygroups_.adds().end() && starts_with(it->first, prefix); ++it) {
    if (!keygroups_.is_member(it->first)) continue;
    auto [kg, node_id] = split_composite(it->first);
    auto address = node_address(node_id);
    if (!address) continue;  // node record tombstoned or missing
    out.push_back(NodeInfo{node_id, *address});
  }
  // Map iteration over composite keys already yields node_id order.
  return out;
}

std::optional<OrganizationInfo> Registry::get_organization(
    const std::string& node_id) const {
  auto payload = organization_.lookup(node_id);
  if (!payload) return std::nullopt;
  auto record = parse_json(to_string(*payload));
  if (!record) return std::nullopt;
  OrganizationInfo info;
  if (auto zone = get_string(record.value(), "zone")) {
    info.zone = zone.take();
  }
  if (auto labels = get_object(record.value(), "labels")) {
    for (const auto& [k, v] : labels.value().items()) {
      if (v.is_string()) info.labels[k] = v.get<std::string>();
    }
  }
  return info;
}

std::optional<std::string> Registry::node_address(
    const std::string& node_id) const {
  auto payload = nodes_.lookup(node_id);
  if (!payload) return std::nullopt;
  auto record = parse_json(to_string(*payload));
  if (!record) return std::nullopt;
  auto address = get_string(record.value(), "address");
  if (!address) return std::nullopt;
  return address.take();
}

std::vector<NodeInfo> Registry::live_nodes() const {
  std::vector<NodeInfo> out;
  for (const auto& [node_id, payload] : nodes_.members()) {
    auto record = parse_json(to_string(payload));
    if (!record) continue;
    auto address = get_string(record.value(), "address");
    if (!address) continue;
    out.push_back(NodeInfo{node_id, address.take()});
  }
  return out;
}

std::optional<KeygroupConfig> Registry::keygroup_config(
    const std::string& keygroup_id) const {
  auto payload = keygroups_.lookup(keygroup_id);
  if (!payload) return std::nullopt;
  auto record = parse_json(to_string(*payload));
  if (!record) return std::nullopt;
  KeygroupConfig config;
  if (auto m = get_bool(record.value(), "mutable")) config.is_mutable = m.value();
  if (auto e = get_int(record.value(), "expiry_s")) config.expiry_s = e.value();
  return config;
}

bool Registry::keygroup_live(const std::string& keygroup_id) const {
  return keygroups_.is_member(keygroup_id);
}

std::int64_t Registry::keygroup_count() const {
  std::int64_t count = 0;
  for (const auto& [key, entry] : keygroups_.adds()) {
    if (!is_composite(key) && keygroups_.is_member(key)) ++count;
  }
  return count;
}

void Registry::observe_set(const LwwElementSet& set) {
  for (const auto& [id, entry] : set.adds()) clock_.observe(entry.stamp);
  for (const auto& [id, stamp] : set.removes()) clock_.observe(stamp);
}

void Registry::merge(const Registry& remote) {
  nodes_.merge(remote.nodes_);
  keygroups_.merge(remote.keygroups_);
  permissions_.merge(remote.permissions_);
  organization_.merge(remote.organization_);
  observe_set(remote.nodes_);
  observe_set(remote.keygroups_);
  observe_set(remote.permissions_);
  observe_set(remote.organization_);
}

Status Registry::merge_state_json(const Json& remote_state) {
  LwwElementSet* targets[] = {&nodes_, &keygroups_, &permissions_,
                              &organization_};
  const char* keys[] = {"nodes", "keygroups", "permissions", "organization"};
  LwwElementSet parsed[4];
  for (int i = 0; i < 4; ++i) {
    auto set_json = get_object(remote_state, keys[i]);
    if (!set_json) return set_json.error();
    auto set = lww_set_from_json(set_json.value());
    if (!set) return set.error();
    parsed[i] = set.take();
  }
  for (int i = 0; i < 4; ++i) {
    targets[i]->merge(parsed[i]);
    observe_set(parsed[i]);
  }
  return Status::ok_status();
}

Json Registry::state_json() const {
  return Json{{"keygroups", lww_set_to_json(keygroups_)},
              {"nodes", lww_set_to_json(nodes_)},
              {"organization", lww_set_to_json(organization_)},
              {"permissions", lww_set_to_json(permissions_)}};
}

std::string Registry::state_hash() const {
  return fnv1a64_hex(canonical_dump(state_json()));
}

Json Registry::snapshot_json() const {
  return Json{{"clock", Json{{"last_seq", clock_.last_seq()},
                             {"last_time_ms", clock_.last_time_ms()},
                             {"replica_id", clock_.replica_id()}}},
              {"state", state_json()},
              {"v", 1}};
}

Result<Registry> Registry::from_snapshot_json(const Json& j) {
  auto clock_json = get_object(j, "clock");
  if (!clock_json) return clock_json.error();
  auto replica_id = get_string(clock_json.value(), "replica_id");
  if (!replica_id) return replica_id.error();
  auto last_time = get_int(clock_json.value(), "last_time_ms");
  if (!last_time) return last_time.error();
  auto last_seq = get_int(clock_json.value(), "last_seq");
  if (!last_seq) return last_seq.error();

  Registry registry(replica_id.take(), last_time.value(), last_seq.value());
  auto state = get_object(j, "state");
  if (!state) return state.error();
  auto status = registry.merge_state_json(state.value());
  if (!status.ok()) return status.error();
  return registry;
}

Status Registry::save_snapshot(const std::string& path) const {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      return Error{ErrorCode::Internal, "cannot open " + tmp};
    }
    out << canonical_dump(snapshot_json()) << '\n';
    if (!out.flush()) {
      return Error{ErrorCode::Internal, "short write to " + tmp};
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    return Error{ErrorCode::Internal,
                 "rename failed: " + ec.message()};
  }
  return Status::ok_status();
}

Result<Registry> Registry::load_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return Error{ErrorCode::Internal, "cannot open " + path};
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto parsed = parse_json(buffer.str());
  if (!parsed) return parsed.error();
  return from_snapshot_json(parsed.value());
}

}  // namespace fogconf

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fogconf/crdt.hpp"
#include "fogconf/result.hpp"
#include "fogconf/wire.hpp"

namespace fogconf {

enum class Action { Read, Update, Delete, Configure };

const char* to_string(Action a);
std::optional<Action> action_from_string(const std::string& s);

struct NodeInfo {
  std::string node_id;
  std::string address;

  bool operator==(const NodeInfo&) const = default;
};

struct KeygroupConfig {
  bool is_mutable = true;
  std::int64_t expiry_s = 0;

  bool operator==(const KeygroupConfig&) const = default;
};

struct OrganizationInfo {
  std::string zone;
  std::map<std::string, std::string> labels;

  bool operator==(const OrganizationInfo&) const = default;
};

// host:port with a numeric port in [1, 65535] and a non-empty host.
bool is_valid_address(const std::string& address);

// The naming-service state: four LWW element sets (node information,
// keygroup configuration, system permissions, node organization) plus this
// replica's clock. All mutators are local-only: they touch nothing but this
// state and complete without any remote call. Callers serialize access.
class Registry {
 public:
  explicit Registry(std::string replica_id);
  Registry(std::string replica_id, std::int64_t clock_time_ms,
           std::int64_t clock_seq);

  const std::string& replica_id() const { return clock_.replica_id(); }

  Status register_node(const std::string& node_id, const std::string& address,
                       std::int64_t now_ms);
  Status create_keygroup(const std::string& keygroup_id,
                         const KeygroupConfig& config,
                         const std::string& creator, std::int64_t now_ms);
  Status delete_keygroup(const std::string& keygroup_id, std::int64_t now_ms);
  Status join_keygroup(const std::string& keygroup_id,
                       const std::string& node_id, std::int64_t now_ms);
  Status leave_keygroup(const std::string& keygroup_id,
                        const std::string& node_id, std::int64_t now_ms);
  Status set_permission(const std::string& user_id,
                        const std::string& keygroup_id,
                        const std::set<Action>& actions, std::int64_t now_ms);
  Status revoke_permission(const std::string& user_id,
                           const std::string& keygroup_id, std::int64_t now_ms);
  Status set_organization(const std::string& node_id,
                          const OrganizationInfo& info, std::int64_t now_ms);

  bool check_permission(const std::string& user_id,
                        const std::string& keygroup_id, Action action) const;
  Result<std::vector<NodeInfo>> get_replicas(
      const std::string& keygroup_id) const;
  std::optional<OrganizationInfo> get_organization(
      const std::string& node_id) const;
  std::optional<std::string> node_address(const std::string& node_id) const;
  std::vector<NodeInfo> live_nodes() const;
  std::optional<KeygroupConfig> keygroup_config(
      const std::string& keygroup_id) const;
  bool keygroup_live(const std::string& keygroup_id) const;
  std::int64_t keygroup_count() const;

  // Set-wise lattice join, then the clock receive rule: the local clock is
  // advanced past every stamp present in the remote sets so new local writes
  // cannot lose to already-merged remote writes.
  void merge(const Registry& remote);
  Status merge_state_json(const Json& remote_state);

  // Canonical forms. state_json covers the four sets only (equal states
  // serialize to identical bytes regardless of which replica holds them);
  // snapshot_json additionally carries the replica clock.
  Json state_json() const;
  std::string state_hash() const;
  Json snapshot_json() const;
  static Result<Registry> from_snapshot_json(const Json& j);

  Status save_snapshot(const std::string& path) const;
  static Result<Registry> load_snapshot(const std::string& path);

  const LwwElementSet& nodes() const { return nodes_; }
  const LwwElementSet& keygroups() const { return keygroups_; }
  const LwwElementSet& permissions() const { return permissions_; }
  const LwwElementSet& organization() const { return organization_; }
  ReplicaClock& clock() { return clock_; }

 private:
  Timestamp stamp(std::int64_t now_ms) { return clock_.next(now_ms); }
  void observe_set(const LwwElementSet& set);

  LwwElementSet nodes_;
  LwwElementSet keygroups_;
  LwwElementSet permissions_;
  LwwElementSet organization_;
  ReplicaClock clock_;
};

// Composite element ids for the permission and membership sets. Identifier
// strings must not contain the separator byte 0x1f.
std::string composite_key(const std::string& a, const std::string& b);
bool is_valid_identifier(const std::string& id);

}  // namespace fogconf

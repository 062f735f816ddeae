#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fogconf/replica.hpp"
#include "fogconf/transport.hpp"
#include "fogconf/wire.hpp"

namespace fogconf {

enum class PeerStatus { Alive, Suspect, Unreachable };

const char* to_string(PeerStatus status);

struct PeerEntry {
  std::string node_id;
  std::string address;
  PeerStatus status = PeerStatus::Alive;
  std::int64_t last_contact_ms = 0;
  int consecutive_failures = 0;
};

struct GossipConfig {
  std::int64_t period_ms = 1000;
  int fanout = 1;
  int failure_threshold = 3;
  std::int64_t rpc_timeout_ms = 500;
  int bootstrap_attempts = 5;
  std::int64_t bootstrap_backoff_ms = 250;
};

// Anti-entropy driver for one replica: periodic push-pull full-state
// exchanges with randomly selected peers, failure counting, and
// bootstrapping through a single seed. The peer list itself rides on the
// registry's node set, so the overlay assembles transitively from one seed.
class Gossiper {
 public:
  Gossiper(Transport& transport, SharedRegistry& registry,
           std::string self_id, std::string self_address, GossipConfig config,
           std::mt19937_64& rng);

  // Registers self into the local registry and, when a seed is given,
  // performs the first exchange against it (bounded retries with backoff).
  void bootstrap(const std::optional<std::string>& seed_address,
                 std::function<void(Status)> on_done);

  void start();  // schedule periodic rounds
  void stop();

  // One round: refresh peer statuses, pick up to `fanout` peers uniformly
  // from the non-Unreachable pool for a push-pull exchange, and additionally
  // probe one Unreachable peer (if any) so healed partitions are discovered
  // without outside help. Per-peer failures are recorded, never raised.
  void gossip_round();

  void mark_peers(std::int64_t now_ms);

  // Called by the endpoint when a remote initiates an exchange with us.
  // Merges the remote state and returns our pre-merge state.
  Json handle_exchange(const std::string& sender_id,
                       const std::string& sender_address,
                       const Json& remote_state);

  std::vector<PeerEntry> peers() const;
  const GossipConfig& config() const { return config_; }

 private:
  void tick();
  void exchange_with(const std::string& peer_id, const std::string& address);
  void bootstrap_attempt(std::string seed_address, int attempt,
                         std::function<void(Status)> on_done);
  void note_success_locked(const std::string& peer_id,
                           const std::string& address);
  void note_failure_locked(const std::string& peer_id);
  void refresh_peers_locked();
  void apply_status_locked(PeerEntry& peer);

  Transport& transport_;
  SharedRegistry& registry_;
  std::string self_id_;
  std::string self_address_;
  GossipConfig config_;
  std::mt19937_64& rng_;

  mutable std::mutex mutex_;
  std::map<std::string, PeerEntry> peers_;
  bool running_ = false;
};

}  // namespace fogconf

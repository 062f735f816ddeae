#include "fogconf/gossip.hpp"

#include <algorithm>

#include "fogconf/api.hpp"

namespace fogconf {

const char* to_string(PeerStatus status) {
  switch (status) {
    case PeerStatus::Alive: return "Alive";
    case PeerStatus::Suspect: return "Suspect";
    case PeerStatus::Unreachable: return "Unreachable";
  }
  return "Alive";
}

Gossiper::Gossiper(Transport& transport, SharedRegistry& registry,
                   std::string self_id, std::string self_address,
                   GossipConfig config, std::mt19937_64& rng)
    : transport_(transport),
      registry_(registry),
      self_id_(std::move(self_id)),
      self_address_(std::move(self_address)),
      config_(config),
      rng_(rng) {}

void Gossiper::bootstrap(const std::optional<std::string>& seed_address,
                         std::function<void(Status)> on_done) {
  registry_.with([&](Registry& r) {
    return r.register_node(self_id_, self_address_, transport_.now_ms());
  });
  if (!seed_address) {
    on_done(Status::ok_status());
    return;
  }
  bootstrap_attempt(*seed_address, 1, std::move(on_done));
}

void Gossiper::bootstrap_attempt(std::string seed_address, int attempt,
                                 std::function<void(Status)> on_done) {
  Json state = registry_.with([](Registry& r) { return r.state_json(); });
  Envelope request = make_request(
      msg::kStateExchange, "bootstrap-" + std::to_string(attempt),
      Json{{"sender_address", self_address_},
           {"sender_id", self_id_},
           {"state", std::move(state)}});

  transport_.send_request(
      self_address_, seed_address, encode_frame(request),
      config_.rpc_timeout_ms,
      [this, seed_address = std::move(seed_address), attempt,
       on_done = std::move(on_done)](RpcResult result) mutable {
        bool merged = false;
        if (result.ok) {
          auto response = decode_frame(result.response);
          if (response && response_ok(response.value())) {
            if (auto state = get_object(response.value().body, "state")) {
              Status status = registry_.with([&](Registry& r) {
                return r.merge_state_json(state.value());
              });
              merged = status.ok();
            }
          }
        }
        if (merged) {
          std::lock_guard<std::mutex> lock(mutex_);
          refresh_peers_locked();
          on_done(Status::ok_status());
          return;
        }
        if (attempt >= config_.bootstrap_attempts) {
          on_done(Error{ErrorCode::SeedUnreachable,
                        "seed unreachable after " + std::to_string(attempt) +
                            " attempts: " + seed_address});
          return;
        }
        transport_.schedule(
            config_.bootstrap_backoff_ms * attempt,
            [this, seed_address = std::move(seed_address), attempt,
             on_done = std::move(on_done)]() mutable {
              bootstrap_attempt(std::move(seed_address), attempt + 1,
                                std::move(on_done));
            });
      });
}

void Gossiper::start() {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (running_) return;
    running_ = true;
  }
  transport_.schedule(config_.period_ms, [this] { tick(); });
}

void Gossiper::tick() {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (!running_) return;
  }
  gossip_round();
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (!running_) return;
  }
  transport_.schedule(config_.period_ms, [this] { tick(); });
}

void Gossiper::stop() {
  std::lock_guard<std::mutex> lock(mutex_);
  running_ = false;
}

void Gossiper::mark_peers(std::int64_t now_ms) {
  (void)now_ms;
  std::lock_guard<std::mutex> lock(mutex_);
  for (auto& [id, peer] : peers_) apply_status_locked(peer);
}

void Gossiper::apply_status_locked(PeerEntry& peer) {
  if (peer.consecutive_failures >= config_.failure_threshold) {
    peer.status = PeerStatus::Unreachable;
  } else if (peer.consecutive_failures > 0) {
    peer.status = PeerStatus::Suspect;
  } else {
    peer.status = PeerStatus::Alive;
  }
}

void Gossiper::gossip_round() {
  mark_peers(transport_.now_ms());

  std::vector<std::pair<std::string, std::string>> reachable;
  std::vector<std::pair<std::string, std::string>> unreachable;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    refresh_peers_locked();
    for (const auto& [id, peer] : peers_) {
      if (peer.status == PeerStatus::Unreachable) {
        unreachable.emplace_back(id, peer.address);
      } else {
        reachable.emplace_back(id, peer.address);
      }
    }
  }

  std::vector<std::pair<std::string, std::string>> targets;
  int want = std::max(config_.fanout, 1);
  for (int i = 0; i < want && !reachable.empty(); ++i) {
    std::uniform_int_distribution<std::size_t> pick(0, reachable.size() - 1);
    std::size_t j = pick(rng_);
    targets.push_back(reachable[j]);
    reachable.erase(reachable.begin() + static_cast<std::ptrdiff_t>(j));
  }
  if (!unreachable.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, unreachable.size() - 1);
    targets.push_back(unreachable[pick(rng_)]);
  }

  for (const auto& [id, address] : targets) exchange_with(id, address);
}

void Gossiper::exchange_with(const std::string& peer_id,
                             const std::string& address) {
  Json state = registry_.with([](Registry& r) { return r.state_json(); });
  Envelope request =
      make_request(msg::kStateExchange,
                   self_id_ + "-x" + std::to_string(transport_.now_ms()),
                   Json{{"sender_address", self_address_},
                        {"sender_id", self_id_},
                        {"state", std::move(state)}});

  transport_.send_request(
      self_address_, address, encode_frame(request), config_.rpc_timeout_ms,
      [this, peer_id, address](RpcResult result) {
        if (result.ok) {
          auto response = decode_frame(result.response);
          if (response && response_ok(response.value())) {
            if (auto state = get_object(response.value().body, "state")) {
              registry_.with([&](Registry& r) {
                return r.merge_state_json(state.value());
              });
              std::lock_guard<std::mutex> lock(mutex_);
              note_success_locked(peer_id, address);
              refresh_peers_locked();
              return;
            }
          }
        }
        std::lock_guard<std::mutex> lock(mutex_);
        note_failure_locked(peer_id);
      });
}

Json Gossiper::handle_exchange(const std::string& sender_id,
                               const std::string& sender_address,
                               const Json& remote_state) {
  Json pre_merge;
  registry_.with([&](Registry& r) {
    pre_merge = r.state_json();
    return r.merge_state_json(remote_state);
  });
  if (sender_id != self_id_) {
    std::lock_guard<std::mutex> lock(mutex_);
    note_success_locked(sender_id, sender_address);
    refresh_peers_locked();
  }
  return pre_merge;
}

void Gossiper::note_success_locked(const std::string& peer_id,
                                   const std::string& address) {
  PeerEntry& peer = peers_[peer_id];
  peer.node_id = peer_id;
  if (!address.empty()) peer.address = address;
  peer.consecutive_failures = 0;
  peer.last_contact_ms = transport_.now_ms();
  apply_status_locked(peer);
}

void Gossiper::note_failure_locked(const std::string& peer_id) {
  auto it = peers_.find(peer_id);
  if (it == peers_.end()) return;
  ++it->second.consecutive_failures;
  apply_status_locked(it->second);
}

void Gossiper::refresh_peers_locked() {
  auto nodes = registry_.with([](Registry& r) { return r.live_nodes(); });
  std::map<std::string, std::string> live;
  for (const auto& node : nodes) {
    if (node.node_id == self_id_) continue;
    live[node.node_id] = node.address;
    PeerEntry& peer = peers_[node.node_id];
    if (peer.node_id.empty()) {
      peer.node_id = node.node_id;
      peer.last_contact_ms = transport_.now_ms();
    }
    peer.address = node.address;
    apply_status_locked(peer);
  }
  // Drop peers whose node records are gone (tombstoned or never present).
  for (auto it = peers_.begin(); it != peers_.end();) {
    if (live.count(it->first) == 0) {
      it = peers_.erase(it);
    } else {
      ++it;
    }
  }
}

std::vector<PeerEntry> Gossiper::peers() const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::vector<PeerEntry> out;
  out.reserve(peers_.size());
  for (const auto& [id, peer] : peers_) out.push_back(peer);
  return out;
}

}  // namespace fogconf

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>

#include "fogconf/api.hpp"
#include "fogconf/gossip.hpp"
#include "fogconf/replica.hpp"
#include "fogconf/transport.hpp"

namespace fogconf {

struct NodeOptions {
  std::string node_id;
  std::string address;
  GossipConfig gossip;
  std::optional<std::string> seed_address;
  std::optional<std::string> snapshot_path;
};

// One naming-service replica: the guarded registry, the gossip driver and
// the request endpoint. Every client operation is answered from local state
// alone; the only cross-replica traffic is the gossip exchange.
class Node {
 public:
  Node(Transport& transport, NodeOptions options, std::mt19937_64& rng);

  // Loads the snapshot if one exists, binds the endpoint, registers itself
  // and bootstraps through the seed. on_ready fires once with the outcome;
  // periodic gossip starts only on success.
  void start(std::function<void(Status)> on_ready);
  void stop();

  // Answers one already-decoded client request from local state.
  Envelope dispatch(const Envelope& request);

  SharedRegistry& registry() { return registry_; }
  Gossiper& gossiper() { return gossiper_; }
  const NodeOptions& options() const { return options_; }

  std::int64_t keygroup_count() const;
  std::string state_hash() const;
  Status save_snapshot() const;

 private:
  void handle_request(const std::string& from, const Bytes& request,
                      std::function<void(Bytes)> respond);

  Transport& transport_;
  NodeOptions options_;
  SharedRegistry registry_;
  Gossiper gossiper_;
};

}  // namespace fogconf

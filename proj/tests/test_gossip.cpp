#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memory>
#include <random>
#include <vector>

#include "fogconf/node.hpp"
#include "fogconf/simnet.hpp"

using namespace fogconf;

namespace {

// A small cluster on the simulated network, booted in order, first node as
// the bootstrap seed.
struct Cluster {
  EventLoop loop;
  DelayMatrix delays;
  std::unique_ptr<SimNetwork> net;
  std::mt19937_64 rng;
  std::vector<std::unique_ptr<Node>> nodes;
  std::vector<Status> boot_status;

  explicit Cluster(int n, GossipConfig gossip = {}, std::uint64_t seed = 7,
                   DelayMatrix matrix = {})
      : delays(std::move(matrix)), rng(seed) {
    net = std::make_unique<SimNetwork>(loop, delays);
    for (int i = 0; i < n; ++i) {
      NodeOptions options;
      options.node_id = "m" + std::to_string(i + 1);
      options.address = options.node_id;
      options.gossip = gossip;
      if (i > 0) options.seed_address = "m1";
      nodes.push_back(std::make_unique<Node>(*net, options, rng));
    }
    boot_status.assign(nodes.size(), Status::ok_status());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      nodes[i]->start(
          [this, i](Status status) { boot_status[i] = status; });
    }
    loop.run_until(0);
  }

  bool converged() const {
    for (const auto& node : nodes) {
      if (node->state_hash() != nodes[0]->state_hash()) return false;
    }
    return true;
  }
};

}  // namespace

TEST_CASE("first node without a seed forms a single-node overlay") {
  Cluster cluster(1);
  CHECK(cluster.boot_status[0].ok());
  CHECK(cluster.nodes[0]->gossiper().peers().empty());
  // It knows itself.
  auto nodes = cluster.nodes[0]->registry().with(
      [](const Registry& r) { return r.live_nodes(); });
  REQUIRE(nodes.size() == 1);
  CHECK(nodes[0].node_id == "m1");
}

TEST_CASE("second node adopts the seed's state after one exchange") {
  Cluster cluster(2);
  CHECK(cluster.boot_status[0].ok());
  CHECK(cluster.boot_status[1].ok());

  // Both know both node records already (bootstrap exchange is push-pull:
  // the seed merged m2's state, m2 merged the seed's pre-merge state and
  // learned m1's record).
  for (const auto& node : cluster.nodes) {
    auto records = node->registry().with(
        [](const Registry& r) { return r.live_nodes(); });
    REQUIRE(records.size() == 2);
  }
  CHECK(cluster.nodes[1]->gossiper().peers().size() == 1);
  CHECK(cluster.nodes[1]->gossiper().peers()[0].node_id == "m1");
}

TEST_CASE("seed down: bounded retries then SeedUnreachable") {
  EventLoop loop;
  SimNetwork net(loop, DelayMatrix{});
  std::mt19937_64 rng(3);
  GossipConfig gossip;
  gossip.bootstrap_attempts = 3;
  gossip.bootstrap_backoff_ms = 100;

  NodeOptions options;
  options.node_id = "m2";
  options.address = "m2";
  options.gossip = gossip;
  options.seed_address = "m1";  // never bound

  Node node(net, options, rng);
  std::optional<Status> outcome;
  node.start([&](Status status) { outcome = status; });
  loop.run_until(60000);
  REQUIRE(outcome.has_value());
  CHECK(!outcome->ok());
  CHECK(outcome->error().code == ErrorCode::SeedUnreachable);
}

TEST_CASE("three nodes with distinct keygroups converge within 10 rounds") {
  // 100 trials with different RNG seeds; fanout 1; full connectivity.
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    Cluster cluster(3, GossipConfig{}, trial + 1);
    for (std::size_t i = 0; i < cluster.nodes.size(); ++i) {
      cluster.nodes[i]->registry().with([&](Registry& r) {
        return r.create_keygroup("kg-m" + std::to_string(i + 1),
                                 KeygroupConfig{}, "u",
                                 cluster.loop.now_ms());
      });
    }
    std::int64_t deadline = 10 * cluster.nodes[0]->gossiper().config().period_ms;
    cluster.loop.run_until(deadline);
    REQUIRE(cluster.converged());
    REQUIRE(cluster.nodes[0]->keygroup_count() == 3);
  }
}

TEST_CASE("push-pull symmetry: one exchange converges both endpoints") {
  Cluster cluster(2);
  cluster.nodes[0]->registry().with([](Registry& r) {
    return r.create_keygroup("kg-a", KeygroupConfig{}, "u", 1);
  });
  cluster.nodes[1]->registry().with([](Registry& r) {
    return r.create_keygroup("kg-b", KeygroupConfig{}, "u", 1);
  });

  // One full period: each side initiates one exchange with the only peer.
  cluster.loop.run_until(cluster.nodes[0]->gossiper().config().period_ms);
  CHECK(cluster.converged());
  CHECK(cluster.nodes[0]->keygroup_count() == 2);
  CHECK(cluster.nodes[1]->keygroup_count() == 2);
}

TEST_CASE("mark_peers thresholds: Alive, Suspect, Unreachable") {
  Cluster cluster(3);
  cluster.loop.run_until(2000);  // overlay settles

  // Cut m2 and m3 off from m1; m1's exchanges start failing.
  cluster.net->apply_partition({{"m1"}, {"m2", "m3"}});
  GossipConfig config = cluster.nodes[0]->gossiper().config();

  // After fewer than threshold failures the peer is Suspect, still listed.
  // Failure counting needs timeouts to fire: each round's exchange fails
  // rpc_timeout_ms after it starts.
  std::int64_t start = cluster.loop.now_ms();
  cluster.loop.run_until(start + 2 * config.period_ms + config.rpc_timeout_ms);
  bool saw_suspect = false;
  for (const auto& peer : cluster.nodes[0]->gossiper().peers()) {
    if (peer.status == PeerStatus::Suspect) saw_suspect = true;
    CHECK(peer.status != PeerStatus::Unreachable);
  }
  CHECK(saw_suspect);

  // Probing means every round hits some peer; after enough rounds both
  // exceed the threshold.
  cluster.loop.run_until(start + 12 * config.period_ms);
  for (const auto& peer : cluster.nodes[0]->gossiper().peers()) {
    CHECK(peer.status == PeerStatus::Unreachable);
    CHECK(peer.consecutive_failures >= config.failure_threshold);
  }

  // Heal: the per-round probe of an Unreachable peer restores Alive.
  cluster.net->heal();
  cluster.loop.run_until(cluster.loop.now_ms() + 4 * config.period_ms);
  for (const auto& peer : cluster.nodes[0]->gossiper().peers()) {
    CHECK(peer.status == PeerStatus::Alive);
    CHECK(peer.consecutive_failures == 0);
  }
}

TEST_CASE("partition isolation and resumed convergence after heal") {
  Cluster cluster(3);
  cluster.loop.run_until(2000);
  cluster.net->apply_partition({{"m1"}, {"m2", "m3"}});

  cluster.nodes[0]->registry().with([&](Registry& r) {
    return r.create_keygroup("kg-during", KeygroupConfig{},
                             "u", cluster.loop.now_ms());
  });
  cluster.loop.run_until(cluster.loop.now_ms() + 10000);

  // The minority side never sees the write; the majority side state is
  // untouched by m1's churn.
  CHECK(cluster.nodes[0]->keygroup_count() == 1);
  CHECK(cluster.nodes[1]->keygroup_count() == 0);
  CHECK(cluster.nodes[2]->keygroup_count() == 0);

  cluster.net->heal();
  GossipConfig config = cluster.nodes[0]->gossiper().config();
  cluster.loop.run_until(cluster.loop.now_ms() + 3 * config.period_ms);
  CHECK(cluster.converged());
  CHECK(cluster.nodes[1]->keygroup_count() == 1);
}

TEST_CASE("gossip does not block local writes") {
  // With every peer partitioned away, mutators still complete.
  Cluster cluster(3);
  cluster.loop.run_until(2000);
  cluster.net->apply_partition({{"m1"}, {"m2", "m3"}});
  cluster.loop.run_until(cluster.loop.now_ms() + 5000);

  Status status = cluster.nodes[0]->registry().with([&](Registry& r) {
    return r.create_keygroup("kg-offline", KeygroupConfig{}, "u",
                             cluster.loop.now_ms());
  });
  CHECK(status.ok());
  CHECK(cluster.nodes[0]->keygroup_count() == 1);
}

TEST_CASE("peer list follows the registry node set transitively") {
  // m3 bootstraps via m1 but learns m2 through the merged node set.
  Cluster cluster(3);
  cluster.loop.run_until(3 * cluster.nodes[0]->gossiper().config().period_ms);
  auto peers = cluster.nodes[2]->gossiper().peers();
  REQUIRE(peers.size() == 2);
  CHECK(peers[0].node_id == "m1");
  CHECK(peers[1].node_id == "m2");
}

TEST_CASE("quiescent convergence: hashes stay equal absent new writes") {
  Cluster cluster(3);
  cluster.nodes[1]->registry().with([](Registry& r) {
    return r.create_keygroup("kg-x", KeygroupConfig{}, "u", 1);
  });
  cluster.loop.run_until(10000);
  REQUIRE(cluster.converged());
  std::string hash = cluster.nodes[0]->state_hash();
  cluster.loop.run_until(30000);
  CHECK(cluster.converged());
  CHECK(cluster.nodes[0]->state_hash() == hash);
}

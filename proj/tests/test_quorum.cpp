#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memory>
#include <optional>
#include <vector>

#include "fogconf/quorum.hpp"
#include "fogconf/simnet.hpp"

using namespace fogconf;

namespace {

struct QuorumCluster {
  EventLoop loop;
  std::unique_ptr<SimNetwork> net;
  std::vector<std::unique_ptr<QuorumReplica>> replicas;
  QuorumConfig config;

  explicit QuorumCluster(int n, DelayMatrix delays = {},
                         std::int64_t backoff_ms = 5000) {
    net = std::make_unique<SimNetwork>(loop, delays);
    for (int i = 1; i <= n; ++i) {
      std::string id = "m" + std::to_string(i);
      config.members.push_back({id, id});
    }
    config.retry_backoff_ms = backoff_ms;
    for (const auto& member : config.members) {
      replicas.push_back(
          std::make_unique<QuorumReplica>(*net, member.node_id, config));
      REQUIRE(replicas.back()->start().ok());
    }
  }

  // Client write through the coordinator (first member), returning the
  // response envelope and its completion time.
  std::pair<std::optional<Envelope>, std::int64_t> create_keygroup(
      const std::string& id, std::int64_t run_for = 5000) {
    Envelope request = make_request(
        msg::kCreateKeygroup, "t-" + id, Json{{"keygroup_id", id}});
    std::optional<Envelope> response;
    std::int64_t completed_at = -1;
    net->send_request("m1", "m1", encode_frame(request), 5000,
                      [&](RpcResult result) {
                        REQUIRE(result.ok);
                        auto envelope = decode_frame(result.response);
                        REQUIRE(envelope.ok());
                        response = envelope.take();
                        completed_at = loop.now_ms();
                      });
    loop.run_until(loop.now_ms() + run_for);
    return {response, completed_at};
  }
};

}  // namespace

TEST_CASE("start rejects undersized clusters") {
  EventLoop loop;
  SimNetwork net(loop, DelayMatrix{});
  QuorumConfig config;
  config.members = {{"m1", "m1"}, {"m2", "m2"}};
  QuorumReplica replica(net, "m1", config);
  Status status = replica.start();
  CHECK(!status.ok());
}

TEST_CASE("write commits with zero latency on zero-delay links") {
  QuorumCluster cluster(3);
  auto [response, completed_at] = cluster.create_keygroup("kg1");
  REQUIRE(response.has_value());
  CHECK(response_ok(*response));
  CHECK(completed_at == 0);
  CHECK(cluster.replicas[0]->keygroup_count() == 1);
}

TEST_CASE("commit latency is one RTT to the nearest remote member") {
  DelayMatrix delays;
  for (const auto& a : {"m1", "m2", "m3"}) {
    for (const auto& b : {"m1", "m2", "m3"}) {
      if (std::string(a) != b) delays.set(a, b, 10);
    }
  }
  QuorumCluster cluster(3, delays);
  std::int64_t start = cluster.loop.now_ms();
  auto [response, completed_at] = cluster.create_keygroup("kg1");
  REQUIRE(response.has_value());
  CHECK(response_ok(*response));
  CHECK(completed_at - start == 20);
}

TEST_CASE("duplicate create fails with KeygroupExists") {
  QuorumCluster cluster(3);
  auto first = cluster.create_keygroup("kg1");
  REQUIRE(response_ok(*first.first));
  auto second = cluster.create_keygroup("kg1");
  REQUIRE(second.first.has_value());
  CHECK(!response_ok(*second.first));
  CHECK(response_error_code(*second.first) == ErrorCode::KeygroupExists);
}

TEST_CASE("coordinator without majority fails every request") {
  QuorumCluster cluster(3);
  auto ok = cluster.create_keygroup("kg0");
  REQUIRE(response_ok(*ok.first));

  cluster.net->apply_partition({{"m1"}, {"m2", "m3"}});
  auto failed = cluster.create_keygroup("kg1");
  REQUIRE(failed.first.has_value());
  CHECK(!response_ok(*failed.first));
  CHECK(response_error_code(*failed.first) == ErrorCode::NoQuorum);
  // Nothing stale was committed.
  CHECK(cluster.replicas[0]->committed_len() == 1);

  // Reads fail too.
  Envelope read = make_request(msg::kKeygroupCount, "r", Json::object());
  std::optional<Envelope> response;
  cluster.net->send_request("m1", "m1", encode_frame(read), 5000,
                            [&](RpcResult result) {
                              REQUIRE(result.ok);
                              auto envelope = decode_frame(result.response);
                              REQUIRE(envelope.ok());
                              response = envelope.take();
                            });
  cluster.loop.run_until(cluster.loop.now_ms() + 3000);
  REQUIRE(response.has_value());
  CHECK(!response_ok(*response));
  CHECK(response_error_code(*response) == ErrorCode::NoQuorum);
}

TEST_CASE("reads serve after a majority barrier") {
  QuorumCluster cluster(3);
  auto ok = cluster.create_keygroup("kg1");
  REQUIRE(response_ok(*ok.first));

  Envelope read = make_request(msg::kKeygroupCount, "r", Json::object());
  std::optional<Envelope> response;
  cluster.net->send_request("m1", "m1", encode_frame(read), 5000,
                            [&](RpcResult result) {
                              REQUIRE(result.ok);
                              auto envelope = decode_frame(result.response);
                              REQUIRE(envelope.ok());
                              response = envelope.take();
                            });
  cluster.loop.run_until(cluster.loop.now_ms() + 1000);
  REQUIRE(response.has_value());
  REQUIRE(response_ok(*response));
  CHECK(response->body.at("count") == 1);
}

TEST_CASE("heal: first successful write within the reconnect backoff") {
  QuorumCluster cluster(3, DelayMatrix{}, 5000);
  REQUIRE(response_ok(*cluster.create_keygroup("kg0").first));

  cluster.net->apply_partition({{"m1"}, {"m2", "m3"}});
  // A failed write opens the breaker.
  auto failed = cluster.create_keygroup("kg1");
  CHECK(!response_ok(*failed.first));
  std::int64_t failure_time = cluster.loop.now_ms();

  // Requests during the open window fail fast.
  auto fast_fail = cluster.create_keygroup("kg2", 100);
  REQUIRE(fast_fail.first.has_value());
  CHECK(!response_ok(*fast_fail.first));
  CHECK(fast_fail.second == failure_time + 100 - 100);  // immediate

  cluster.net->heal();
  std::int64_t heal_time = cluster.loop.now_ms();

  // Probe again after the breaker closes: the write goes through, at most
  // one backoff after heal.
  bool succeeded = false;
  std::int64_t success_time = -1;
  for (int attempt = 0; attempt < 20 && !succeeded; ++attempt) {
    auto result = cluster.create_keygroup("kg-retry" + std::to_string(attempt),
                                          600);
    REQUIRE(result.first.has_value());
    if (response_ok(*result.first)) {
      succeeded = true;
      success_time = result.second;
    }
  }
  REQUIRE(succeeded);
  CHECK(success_time - heal_time <= cluster.config.retry_backoff_ms + 600);

  // Repeated heals are a no-op.
  cluster.net->heal();
  REQUIRE(response_ok(*cluster.create_keygroup("kg-after").first));
}

TEST_CASE("logs agree on the committed prefix after quiescence") {
  QuorumCluster cluster(3, DelayMatrix{}, 500);
  for (int i = 0; i < 5; ++i) {
    REQUIRE(response_ok(
        *cluster.create_keygroup("kg" + std::to_string(i)).first));
  }
  cluster.net->apply_partition({{"m1"}, {"m2", "m3"}});
  for (int i = 5; i < 8; ++i) {
    auto failed = cluster.create_keygroup("kg" + std::to_string(i), 1200);
    CHECK(!response_ok(*failed.first));
  }
  cluster.net->heal();
  for (int i = 8; i < 10; ++i) {
    bool committed = false;
    for (int attempt = 0; attempt < 20 && !committed; ++attempt) {
      auto result = cluster.create_keygroup(
          "kg" + std::to_string(i) + "-" + std::to_string(attempt), 600);
      committed = response_ok(*result.first);
    }
    REQUIRE(committed);
  }
  // Let the catch-up timer run.
  cluster.loop.run_until(cluster.loop.now_ms() + 5000);

  auto log0 = cluster.replicas[0]->log();
  for (const auto& replica : cluster.replicas) {
    REQUIRE(replica->committed_len() == cluster.replicas[0]->committed_len());
    REQUIRE(replica->log() == log0);
  }
  // Every committed write is a keygroup creation that succeeded: 5 + 2.
  CHECK(cluster.replicas[0]->committed_len() == 7);
}

TEST_CASE("follower counts trail the coordinator by at most one append") {
  QuorumCluster cluster(3);
  REQUIRE(response_ok(*cluster.create_keygroup("kg1").first));
  REQUIRE(response_ok(*cluster.create_keygroup("kg2").first));
  // Followers have applied everything the coordinator told them was
  // committed; the newest entry commits on the next message.
  CHECK(cluster.replicas[0]->keygroup_count() == 2);
  CHECK(cluster.replicas[1]->keygroup_count() >= 1);
  REQUIRE(response_ok(*cluster.create_keygroup("kg3").first));
  CHECK(cluster.replicas[1]->keygroup_count() >= 2);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fogconf/api.hpp"
#include "fogconf/node.hpp"
#include "fogconf/simnet.hpp"

using namespace fogconf;

namespace {

Envelope decode_or_fail(const Bytes& frame) {
  auto envelope = decode_frame(frame);
  REQUIRE(envelope.ok());
  return envelope.take();
}

struct TestReplica {
  EventLoop loop;
  SimNetwork net{loop, DelayMatrix{}};
  std::mt19937_64 rng{1};
  std::unique_ptr<Node> node;

  explicit TestReplica(const std::string& id = "m1") {
    NodeOptions options;
    options.node_id = id;
    options.address = id;
    node = std::make_unique<Node>(net, options, rng);
    bool ready = false;
    node->start([&](Status status) {
      REQUIRE(status.ok());
      ready = true;
    });
    loop.run_until(0);
    REQUIRE(ready);
  }

  Envelope call(const std::string& msg_type, Json body,
                const std::string& request_id = "r1") {
    Envelope request = make_request(msg_type, request_id, std::move(body));
    std::optional<Envelope> response;
    net.send_request("client", node->options().address, encode_frame(request),
                     1000, [&](RpcResult result) {
                       REQUIRE(result.ok);
                       response = decode_or_fail(result.response);
                     });
    loop.run_until(loop.now_ms() + 10);
    REQUIRE(response.has_value());
    return *response;
  }
};

}  // namespace

TEST_CASE("frame encoding: length prefix and canonical record") {
  Envelope envelope = make_request("KeygroupCount", "42", Json::object());
  Bytes frame = encode_frame(envelope);
  REQUIRE(frame.size() > 4);
  std::uint32_t length = (frame[0] << 24) | (frame[1] << 16) |
                         (frame[2] << 8) | frame[3];
  CHECK(length == frame.size() - 4);

  std::string record(frame.begin() + 4, frame.end());
  CHECK(record ==
        R"({"body":{},"msg_type":"KeygroupCount","request_id":"42","version":1})");

  Envelope back = decode_or_fail(frame);
  CHECK(back.msg_type == envelope.msg_type);
  CHECK(back.request_id == envelope.request_id);
  CHECK(back.body == envelope.body);
}

TEST_CASE("encode/decode round trip over generated envelopes") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> type_pick(0, 10);
  std::uniform_int_distribution<int> depth_pick(0, 3);
  const char* types[] = {
      msg::kCreateKeygroup, msg::kDeleteKeygroup,   msg::kJoinKeygroup,
      msg::kLeaveKeygroup,  msg::kRegisterNode,     msg::kSetPermission,
      msg::kRevokePermission, msg::kCheckPermission, msg::kGetReplicas,
      msg::kKeygroupCount,  msg::kStateExchange};

  for (int trial = 0; trial < 500; ++trial) {
    Json body{{"keygroup_id", "kg-" + std::to_string(trial)},
              {"nested", Json{{"n", trial}, {"flag", trial % 2 == 0}}}};
    if (depth_pick(rng) == 0) body["extra"] = Json::array({1, 2, 3});
    Envelope envelope = make_request(types[type_pick(rng)],
                                     "req-" + std::to_string(trial), body);
    Envelope back = decode_or_fail(encode_frame(envelope));
    REQUIRE(back.version == envelope.version);
    REQUIRE(back.msg_type == envelope.msg_type);
    REQUIRE(back.request_id == envelope.request_id);
    REQUIRE(back.body == envelope.body);
    // Canonical: re-encoding is byte-identical.
    REQUIRE(encode_frame(back) == encode_frame(envelope));
  }
}

TEST_CASE("truncated and corrupt frames are rejected") {
  Envelope envelope = make_request("KeygroupCount", "1", Json::object());
  Bytes frame = encode_frame(envelope);

  Bytes truncated(frame.begin(), frame.end() - 3);
  CHECK(!decode_frame(truncated).ok());

  Bytes short_prefix(frame.begin(), frame.begin() + 3);
  CHECK(!decode_frame(short_prefix).ok());

  Bytes garbage = frame;
  garbage[6] = 0x01;  // corrupt the record
  CHECK(!decode_frame(garbage).ok());

  Bytes oversized = frame;
  oversized[0] = 0xff;  // length prefix beyond the limit
  CHECK(!decode_frame(oversized).ok());
}

TEST_CASE("version mismatch is rejected") {
  Envelope envelope = make_request("KeygroupCount", "1", Json::object());
  envelope.version = 2;
  CHECK(!decode_frame(encode_frame(envelope)).ok());
}

TEST_CASE("endpoint dispatches client operations") {
  TestReplica replica;

  Envelope created = replica.call(
      msg::kCreateKeygroup,
      Json{{"creator", "alice"}, {"keygroup_id", "kg1"}});
  CHECK(response_ok(created));
  CHECK(created.msg_type == msg::kCreateKeygroup);
  CHECK(created.request_id == "r1");

  Envelope duplicate = replica.call(
      msg::kCreateKeygroup,
      Json{{"creator", "alice"}, {"keygroup_id", "kg1"}}, "r2");
  CHECK(!response_ok(duplicate));
  CHECK(response_error_code(duplicate) == ErrorCode::KeygroupExists);
  CHECK(duplicate.request_id == "r2");

  Envelope count = replica.call(msg::kKeygroupCount, Json::object());
  CHECK(response_ok(count));
  CHECK(count.body.at("count") == 1);

  Envelope registered = replica.call(
      msg::kRegisterNode, Json{{"address", "h:1"}, {"node_id", "nB"}});
  CHECK(response_ok(registered));
  Envelope joined = replica.call(
      msg::kJoinKeygroup, Json{{"keygroup_id", "kg1"}, {"node_id", "nB"}});
  CHECK(response_ok(joined));
  Envelope replicas = replica.call(msg::kGetReplicas,
                                   Json{{"keygroup_id", "kg1"}});
  CHECK(response_ok(replicas));
  REQUIRE(replicas.body.at("replicas").size() == 1);
  CHECK(replicas.body.at("replicas")[0].at("node_id") == "nB");

  Envelope perm = replica.call(
      msg::kSetPermission,
      Json{{"actions", Json::array({"Read"})},
           {"keygroup_id", "kg1"},
           {"user_id", "bob"}});
  CHECK(response_ok(perm));
  Envelope check = replica.call(
      msg::kCheckPermission,
      Json{{"action", "Read"}, {"keygroup_id", "kg1"}, {"user_id", "bob"}});
  CHECK(response_ok(check));
  CHECK(check.body.at("allowed") == true);
  Envelope check_update = replica.call(
      msg::kCheckPermission,
      Json{{"action", "Update"}, {"keygroup_id", "kg1"}, {"user_id", "bob"}});
  CHECK(check_update.body.at("allowed") == false);
}

TEST_CASE("unknown msg_type yields BadRequest and the endpoint stays usable") {
  TestReplica replica;
  Envelope bogus = replica.call("FlushEverything", Json::object());
  CHECK(!response_ok(bogus));
  CHECK(response_error_code(bogus) == ErrorCode::BadRequest);

  Envelope count = replica.call(msg::kKeygroupCount, Json::object(), "r9");
  CHECK(response_ok(count));
}

TEST_CASE("malformed frame yields an error response without state change") {
  TestReplica replica;
  Bytes garbage = {0x00, 0x00, 0x00, 0x03, 'x', 'y', 'z'};
  std::optional<Envelope> response;
  replica.net.send_request("client", "m1", garbage, 1000,
                           [&](RpcResult result) {
                             REQUIRE(result.ok);
                             response = decode_or_fail(result.response);
                           });
  replica.loop.run_until(replica.loop.now_ms() + 10);
  REQUIRE(response.has_value());
  CHECK(!response_ok(*response));
  CHECK(replica.node->keygroup_count() == 0);
}

TEST_CASE("state exchange answers with the pre-merge state and both converge") {
  TestReplica replica;
  // Local state: one keygroup.
  Envelope created = replica.call(msg::kCreateKeygroup,
                                  Json{{"keygroup_id", "kg-local"}});
  REQUIRE(response_ok(created));

  // Remote state: a different keygroup.
  Registry remote("m2");
  REQUIRE(remote.register_node("m2", "m2:1", 0).ok());
  REQUIRE(remote.create_keygroup("kg-remote", KeygroupConfig{}, "u", 1).ok());

  Envelope exchange = replica.call(
      msg::kStateExchange,
      Json{{"sender_address", "m2:1"},
           {"sender_id", "m2"},
           {"state", remote.state_json()}});
  REQUIRE(response_ok(exchange));

  // The response carries the receiver's pre-merge state.
  auto pre_merge = get_object(exchange.body, "state");
  REQUIRE(pre_merge.ok());
  Registry replay("check");
  REQUIRE(replay.merge_state_json(pre_merge.value()).ok());
  CHECK(replay.keygroup_live("kg-local"));
  CHECK(!replay.keygroup_live("kg-remote"));

  // The receiver merged the remote state.
  CHECK(replica.node->keygroup_count() == 2);

  // Completing the pull on the remote side converges both.
  remote.merge_state_json(pre_merge.value());
  CHECK(remote.keygroup_count() == 2);
  Registry local_now("check2");
  Envelope exchange2 = replica.call(
      msg::kStateExchange, Json{{"sender_address", "m2:1"},
                                {"sender_id", "m2"},
                                {"state", remote.state_json()}});
  auto state2 = get_object(exchange2.body, "state");
  REQUIRE(state2.ok());
  REQUIRE(local_now.merge_state_json(state2.value()).ok());
  CHECK(local_now.state_hash() == remote.state_hash());
}

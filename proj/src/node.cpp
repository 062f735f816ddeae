#include "fogconf/node.hpp"

#include <filesystem>

namespace fogconf {

Node::Node(Transport& transport, NodeOptions options, std::mt19937_64& rng)
    : transport_(transport),
      options_(std::move(options)),
      registry_(Registry(options_.node_id)),
      gossiper_(transport_, registry_, options_.node_id, options_.address,
                options_.gossip, rng) {}

void Node::start(std::function<void(Status)> on_ready) {
  if (options_.snapshot_path &&
      std::filesystem::exists(*options_.snapshot_path)) {
    auto loaded = Registry::load_snapshot(*options_.snapshot_path);
    if (!loaded) {
      on_ready(loaded.error());
      return;
    }
    // A stale snapshot is fine; gossip repairs it after bootstrap.
    registry_.replace(loaded.take());
  }

  transport_.bind(options_.address,
                  [this](const std::string& from, const Bytes& request,
                         std::function<void(Bytes)> respond) {
                    handle_request(from, request, std::move(respond));
                  });

  gossiper_.bootstrap(options_.seed_address,
                      [this, on_ready = std::move(on_ready)](Status status) {
                        if (status.ok()) gossiper_.start();
                        on_ready(status);
                      });
}

void Node::stop() {
  gossiper_.stop();
  transport_.unbind(options_.address);
}

void Node::handle_request(const std::string& from, const Bytes& request,
                          std::function<void(Bytes)> respond) {
  auto envelope = decode_frame(request);
  if (!envelope) {
    Envelope error{kProtocolVersion, "Error", "",
                   Json{{"code", to_string(envelope.error().code)},
                        {"message", envelope.error().message},
                        {"status", "Error"}}};
    respond(encode_frame(error));
    return;
  }
  (void)from;
  respond(encode_frame(dispatch(envelope.value())));
}

std::int64_t Node::keygroup_count() const {
  return registry_.with([](const Registry& r) { return r.keygroup_count(); });
}

std::string Node::state_hash() const {
  return registry_.with([](const Registry& r) { return r.state_hash(); });
}

Status Node::save_snapshot() const {
  if (!options_.snapshot_path) {
    return Error{ErrorCode::Internal, "no snapshot path configured"};
  }
  return registry_.with(
      [&](const Registry& r) { return r.save_snapshot(*options_.snapshot_path); });
}

namespace {

Envelope dispatch_error(const Envelope& request, const Error& error) {
  return make_error_response(request, error.code, error.message);
}

}  // namespace

Envelope Node::dispatch(const Envelope& request) {
  const std::int64_t now = transport_.now_ms();
  const std::string& type = request.msg_type;
  const Json& body = request.body;

  if (type == msg::kStateExchange) {
    auto state = get_object(body, "state");
    if (!state) return dispatch_error(request, state.error());
    auto sender_id = get_string(body, "sender_id");
    auto sender_address = get_string(body, "sender_address");
    Json pre_merge = gossiper_.handle_exchange(
        sender_id ? sender_id.value() : std::string{},
        sender_address ? sender_address.value() : std::string{},
        state.value());
    return make_ok_response(request, Json{{"responder_id", options_.node_id},
                                          {"state", std::move(pre_merge)}});
  }

  if (type == msg::kCreateKeygroup) {
    auto keygroup = get_string(body, "keygroup_id");
    if (!keygroup) return dispatch_error(request, keygroup.error());
    KeygroupConfig config;
    if (body.contains("mutable")) {
      auto m = get_bool(body, "mutable");
      if (!m) return dispatch_error(request, m.error());
      config.is_mutable = m.value();
    }
    if (body.contains("expiry_s")) {
      auto e = get_int(body, "expiry_s");
      if (!e) return dispatch_error(request, e.error());
      config.expiry_s = e.value();
    }
    std::string creator = "client";
    if (body.contains("creator")) {
      auto c = get_string(body, "creator");
      if (!c) return dispatch_error(request, c.error());
      creator = c.take();
    }
    Status status = registry_.with([&](Registry& r) {
      return r.create_keygroup(keygroup.value(), config, creator, now);
    });
    if (!status.ok()) return dispatch_error(request, status.error());
    return make_ok_response(request);
  }

  if (type == msg::kDeleteKeygroup) {
    auto keygroup = get_string(body, "keygroup_id");
    if (!keygroup) return dispatch_error(request, keygroup.error());
    Status status = registry_.with(
        [&](Registry& r) { return r.delete_keygroup(keygroup.value(), now); });
    if (!status.ok()) return dispatch_error(request, status.error());
    return make_ok_response(request);
  }

  if (type == msg::kJoinKeygroup || type == msg::kLeaveKeygroup) {
    auto keygroup = get_string(body, "keygroup_id");
    if (!keygroup) return dispatch_error(request, keygroup.error());
    auto node_id = get_string(body, "node_id");
    if (!node_id) return dispatch_error(request, node_id.error());
    Status status = registry_.with([&](Registry& r) {
      return type == msg::kJoinKeygroup
                 ? r.join_keygroup(keygroup.value(), node_id.value(), now)
                 : r.leave_keygroup(keygroup.value(), node_id.value(), now);
    });
    if (!status.ok()) return dispatch_error(request, status.error());
    return make_ok_response(request);
  }

  if (type == msg::kRegisterNode) {
    auto node_id = get_string(body, "node_id");
    if (!node_id) return dispatch_error(request, node_id.error());
    auto address = get_string(body, "address");
    if (!address) return dispatch_error(request, address.error());
    Status status = registry_.with([&](Registry& r) {
      return r.register_node(node_id.value(), address.value(), now);
    });
    if (!status.ok()) return dispatch_error(request, status.error());
    return make_ok_response(request);
  }

  if (type == msg::kSetPermission) {
    auto user = get_string(body, "user_id");
    if (!user) return dispatch_error(request, user.error());
    auto keygroup = get_string(body, "keygroup_id");
    if (!keygroup) return dispatch_error(request, keygroup.error());
    auto actions_json = get_array(body, "actions");
    if (!actions_json) return dispatch_error(request, actions_json.error());
    std::set<Action> actions;
    for (const auto& item : actions_json.value()) {
      if (!item.is_string()) {
        return make_error_response(request, ErrorCode::BadRequest,
                                   "actions must be strings");
      }
      auto action = action_from_string(item.get<std::string>());
      if (!action) {
        return make_error_response(request, ErrorCode::BadRequest,
                                   "unknown action: " + item.get<std::string>());
      }
      actions.insert(*action);
    }
    Status status = registry_.with([&](Registry& r) {
      return r.set_permission(user.value(), keygroup.value(), actions, now);
    });
    if (!status.ok()) return dispatch_error(request, status.error());
    return make_ok_response(request);
  }

  if (type == msg::kRevokePermission) {
    auto user = get_string(body, "user_id");
    if (!user) return dispatch_error(request, user.error());
    auto keygroup = get_string(body, "keygroup_id");
    if (!keygroup) return dispatch_error(request, keygroup.error());
    Status status = registry_.with([&](Registry& r) {
      return r.revoke_permission(user.value(), keygroup.value(), now);
    });
    if (!status.ok()) return dispatch_error(request, status.error());
    return make_ok_response(request);
  }

  if (type == msg::kCheckPermission) {
    auto user = get_string(body, "user_id");
    if (!user) return dispatch_error(request, user.error());
    auto keygroup = get_string(body, "keygroup_id");
    if (!keygroup) return dispatch_error(request, keygroup.error());
    auto action_name = get_string(body, "action");
    if (!action_name) return dispatch_error(request, action_name.error());
    auto action = action_from_string(action_name.value());
    if (!action) {
      return make_error_response(request, ErrorCode::BadRequest,
                                 "unknown action: " + action_name.value());
    }
    bool allowed = registry_.with([&](const Registry& r) {
      return r.check_permission(user.value(), keygroup.value(), *action);
    });
    return make_ok_response(request, Json{{"allowed", allowed}});
  }

  if (type == msg::kGetReplicas) {
    auto keygroup = get_string(body, "keygroup_id");
    if (!keygroup) return dispatch_error(request, keygroup.error());
    auto replicas = registry_.with(
        [&](const Registry& r) { return r.get_replicas(keygroup.value()); });
    if (!replicas) return dispatch_error(request, replicas.error());
    Json list = Json::array();
    for (const auto& node : replicas.value()) {
      list.push_back(
          Json{{"address", node.address}, {"node_id", node.node_id}});
    }
    return make_ok_response(request, Json{{"replicas", std::move(list)}});
  }

  if (type == msg::kKeygroupCount) {
    return make_ok_response(request, Json{{"count", keygroup_count()}});
  }

  return make_error_response(request, ErrorCode::BadRequest,
                             "unknown msg_type: " + type);
}

}  // namespace fogconf

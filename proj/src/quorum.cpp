#include "fogconf/quorum.hpp"

#include <algorithm>
#include <memory>
#include <set>

#include "fogconf/registry.hpp"

namespace fogconf {

namespace {

constexpr char kSep = '\x1f';
constexpr const char* kQAppend = "QAppend";
constexpr const char* kQSync = "QSync";
constexpr const char* kQBarrier = "QBarrier";

std::string kg_key(const std::string& id) { return std::string("kg") + kSep + id; }
std::string node_key(const std::string& id) {
  return std::string("node") + kSep + id;
}
std::string member_key(const std::string& kg, const std::string& node) {
  return std::string("member") + kSep + kg + kSep + node;
}
std::string perm_key(const std::string& user, const std::string& kg) {
  return std::string("perm") + kSep + user + kSep + kg;
}

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.size() >= prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
}

Json entry_to_json(const LogEntry& entry) {
  Json ops = Json::array();
  for (const auto& op : entry.ops) {
    Json item{{"key", hex_encode(op.key)}};
    if (op.value) {
      item["value"] = hex_encode(*op.value);
    } else {
      item["value"] = nullptr;
    }
    ops.push_back(std::move(item));
  }
  return Json{{"ops", std::move(ops)}};
}

Result<LogEntry> entry_from_json(const Json& j) {
  auto ops = get_array(j, "ops");
  if (!ops) return ops.error();
  LogEntry entry;
  for (const auto& item : ops.value()) {
    auto key_hex = get_string(item, "key");
    if (!key_hex) return key_hex.error();
    auto key = hex_decode(key_hex.value());
    if (!key) return Error{ErrorCode::BadRequest, "bad hex key"};
    KvOp op;
    op.key = to_string(*key);
    if (item.contains("value") && !item.at("value").is_null()) {
      if (!item.at("value").is_string()) {
        return Error{ErrorCode::BadRequest, "bad value"};
      }
      auto value = hex_decode(item.at("value").get<std::string>());
      if (!value) return Error{ErrorCode::BadRequest, "bad hex value"};
      op.value = to_string(*value);
    }
    entry.ops.push_back(std::move(op));
  }
  return entry;
}

}  // namespace

QuorumReplica::QuorumReplica(Transport& transport, std::string node_id,
                             QuorumConfig config)
    : transport_(transport),
      node_id_(std::move(node_id)),
      config_(std::move(config)) {}

std::string QuorumReplica::self_address() const {
  for (const auto& member : config_.members) {
    if (member.node_id == node_id_) return member.address;
  }
  return {};
}

std::vector<QuorumMember> QuorumReplica::other_members() const {
  std::vector<QuorumMember> out;
  for (const auto& member : config_.members) {
    if (member.node_id != node_id_) out.push_back(member);
  }
  return out;
}

Status QuorumReplica::start() {
  if (config_.members.size() < 3) {
    return Error{ErrorCode::BadRequest,
                 "quorum store needs at least three members"};
  }
  if (self_address().empty()) {
    return Error{ErrorCode::BadRequest,
                 "member list does not include this node"};
  }
  transport_.bind(self_address(),
                  [this](const std::string& from, const Bytes& request,
                         std::function<void(Bytes)> respond) {
                    handle_request(from, request, std::move(respond));
                  });
  {
    std::lock_guard<std::mutex> lock(mutex_);
    running_ = true;
  }
  transport_.schedule(config_.retry_backoff_ms, [this] { tick(); });
  return Status::ok_status();
}

void QuorumReplica::stop() {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    running_ = false;
  }
  transport_.unbind(self_address());
}

void QuorumReplica::tick() {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (!running_) return;
  }
  sync_lagging_members();
  std::lock_guard<std::mutex> lock(mutex_);
  if (running_) {
    transport_.schedule(config_.retry_backoff_ms, [this] { tick(); });
  }
}

void QuorumReplica::handle_request(const std::string& from,
                                   const Bytes& request,
                                   std::function<void(Bytes)> respond) {
  (void)from;
  auto envelope = decode_frame(request);
  if (!envelope) {
    Envelope error{kProtocolVersion, "Error", "",
                   Json{{"code", to_string(envelope.error().code)},
                        {"message", envelope.error().message},
                        {"status", "Error"}}};
    respond(encode_frame(error));
    return;
  }
  const Envelope& env = envelope.value();
  if (env.msg_type == kQAppend) {
    respond(encode_frame(handle_append(env)));
    return;
  }
  if (env.msg_type == kQSync) {
    respond(encode_frame(handle_sync(env)));
    return;
  }
  if (env.msg_type == kQBarrier) {
    std::lock_guard<std::mutex> lock(mutex_);
    respond(encode_frame(make_ok_response(
        env, Json{{"log_len", static_cast<std::int64_t>(log_.size())}})));
    return;
  }
  dispatch_async(env, [respond = std::move(respond)](Envelope response) {
    respond(encode_frame(response));
  });
}

Envelope QuorumReplica::handle_append(const Envelope& request) {
  auto index = get_int(request.body, "index");
  if (!index) return make_error_response(request, ErrorCode::BadRequest,
                                         index.error().message);
  auto committed = get_int(request.body, "committed_len");
  if (!committed) return make_error_response(request, ErrorCode::BadRequest,
                                             committed.error().message);
  auto entry_json = get_object(request.body, "entry");
  if (!entry_json) return make_error_response(request, ErrorCode::BadRequest,
                                              entry_json.error().message);
  auto entry = entry_from_json(entry_json.value());
  if (!entry) return make_error_response(request, ErrorCode::BadRequest,
                                         entry.error().message);

  std::lock_guard<std::mutex> lock(mutex_);
  bool applied = false;
  const auto idx = index.value();
  if (idx >= committed_len_ && idx <= static_cast<std::int64_t>(log_.size())) {
    // A shorter overwrite discards tentative entries of failed writes.
    log_.resize(static_cast<std::size_t>(idx));
    log_.push_back(entry.take());
    applied = true;
  }
  committed_len_ = std::max(
      committed_len_,
      std::min(committed.value(), static_cast<std::int64_t>(log_.size())));
  apply_committed_locked();
  return make_ok_response(
      request, Json{{"applied", applied},
                    {"log_len", static_cast<std::int64_t>(log_.size())}});
}

Envelope QuorumReplica::handle_sync(const Envelope& request) {
  auto from = get_int(request.body, "from");
  if (!from) return make_error_response(request, ErrorCode::BadRequest,
                                        from.error().message);
  auto committed = get_int(request.body, "committed_len");
  if (!committed) return make_error_response(request, ErrorCode::BadRequest,
                                             committed.error().message);
  auto total = get_int(request.body, "total_len");
  if (!total) return make_error_response(request, ErrorCode::BadRequest,
                                         total.error().message);
  auto entries_json = get_array(request.body, "entries");
  if (!entries_json) return make_error_response(request, ErrorCode::BadRequest,
                                                entries_json.error().message);

  std::lock_guard<std::mutex> lock(mutex_);
  if (from.value() >= committed_len_ &&
      from.value() <= static_cast<std::int64_t>(log_.size())) {
    log_.resize(static_cast<std::size_t>(from.value()));
    for (const auto& item : entries_json.value()) {
      auto entry = entry_from_json(item);
      if (!entry) {
        return make_error_response(request, ErrorCode::BadRequest,
                                   entry.error().message);
      }
      log_.push_back(entry.take());
    }
    // Trim orphaned tentative entries beyond the coordinator's log.
    if (static_cast<std::int64_t>(log_.size()) > total.value()) {
      log_.resize(static_cast<std::size_t>(total.value()));
    }
  }
  committed_len_ = std::max(
      committed_len_,
      std::min(committed.value(), static_cast<std::int64_t>(log_.size())));
  apply_committed_locked();
  return make_ok_response(
      request, Json{{"log_len", static_cast<std::int64_t>(log_.size())}});
}

void QuorumReplica::apply_committed_locked() {
  while (applied_len_ < committed_len_) {
    const LogEntry& entry = log_[static_cast<std::size_t>(applied_len_)];
    for (const auto& op : entry.ops) {
      if (op.value) {
        kv_[op.key] = *op.value;
      } else {
        kv_.erase(op.key);
      }
    }
    ++applied_len_;
  }
}

void QuorumReplica::replicate(std::int64_t index, const LogEntry& entry,
                              std::function<void(Status)> on_done) {
  struct ReplState {
    int acks = 1;  // self
    int fails = 0;
    int total = 0;
    int majority = 0;
    bool done = false;
    std::function<void(Status)> on_done;
  };
  auto state = std::make_shared<ReplState>();
  auto others = other_members();
  state->total = static_cast<int>(others.size()) + 1;
  state->majority = majority();
  state->on_done = std::move(on_done);

  Json body{{"committed_len", index},
            {"entry", entry_to_json(entry)},
            {"index", index},
            {"sender", node_id_}};
  Envelope request = make_request(
      kQAppend, node_id_ + "-a" + std::to_string(index), std::move(body));
  Bytes frame = encode_frame(request);

  for (const auto& member : others) {
    transport_.send_request(
        self_address(), member.address, frame, config_.rpc_timeout_ms,
        [this, state, member_id = member.node_id](RpcResult result) {
          std::function<void(Status)> fire;
          Status outcome = Status::ok_status();
          {
            std::lock_guard<std::mutex> lock(mutex_);
            bool acked = false;
            if (result.ok) {
              auto response = decode_frame(result.response);
              if (response && response_ok(response.value())) {
                if (auto len = get_int(response.value().body, "log_len")) {
                  match_len_[member_id] = len.value();
                }
                if (auto applied =
                        get_bool(response.value().body, "applied")) {
                  acked = applied.value();
                }
              }
            }
            if (acked) {
              ++state->acks;
            } else {
              ++state->fails;
            }
            if (!state->done && state->acks >= state->majority) {
              state->done = true;
              fire = state->on_done;
              outcome = Status::ok_status();
            } else if (!state->done &&
                       state->acks + state->fails == state->total) {
              state->done = true;
              fire = state->on_done;
              outcome = Error{ErrorCode::NoQuorum,
                              "no majority reachable"};
            }
          }
          if (fire) fire(outcome);
        });
  }
}

void QuorumReplica::submit_write(LogEntry entry,
                                 std::function<void(Status)> on_done) {
  std::lock_guard<std::mutex> lock(mutex_);
  write_queue_.push_back(PendingWrite{std::move(entry), std::move(on_done)});
  if (!write_in_flight_) {
    start_next_write_locked();
  }
}

void QuorumReplica::start_next_write_locked() {
  while (!write_queue_.empty()) {
    if (transport_.now_ms() < circuit_open_until_) {
      // Fail fast while the breaker is open.
      PendingWrite write = std::move(write_queue_.front());
      write_queue_.pop_front();
      auto on_done = std::move(write.on_done);
      transport_.schedule(0, [on_done = std::move(on_done)] {
        on_done(Error{ErrorCode::NoQuorum, "no majority reachable"});
      });
      continue;
    }
    PendingWrite write = std::move(write_queue_.front());
    write_queue_.pop_front();
    write_in_flight_ = true;
    const std::int64_t index = static_cast<std::int64_t>(log_.size());
    LogEntry entry = write.entry;
    auto on_done = std::move(write.on_done);
    replicate(index, entry,
              [this, entry, on_done = std::move(on_done)](Status status) {
                {
                  std::lock_guard<std::mutex> lock(mutex_);
                  if (status.ok()) {
                    log_.push_back(entry);
                    committed_len_ = static_cast<std::int64_t>(log_.size());
                    apply_committed_locked();
                  } else {
                    circuit_open_until_ =
                        transport_.now_ms() + config_.retry_backoff_ms;
                  }
                  write_in_flight_ = false;
                  start_next_write_locked();
                }
                on_done(status);
              });
    return;
  }
}

void QuorumReplica::run_barrier(std::function<void(Status)> on_done) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (transport_.now_ms() < circuit_open_until_) {
      transport_.schedule(0, [on_done = std::move(on_done)] {
        on_done(Error{ErrorCode::NoQuorum, "no majority reachable"});
      });
      return;
    }
  }
  struct BarrierState {
    int acks = 1;
    int fails = 0;
    int total = 0;
    int majority = 0;
    bool done = false;
    std::function<void(Status)> on_done;
  };
  auto state = std::make_shared<BarrierState>();
  auto others = other_members();
  state->total = static_cast<int>(others.size()) + 1;
  state->majority = majority();
  state->on_done = std::move(on_done);

  Json body{{"committed_len", committed_len()}, {"sender", node_id_}};
  Envelope request = make_request(
      kQBarrier, node_id_ + "-b" + std::to_string(transport_.now_ms()),
      std::move(body));
  Bytes frame = encode_frame(request);

  for (const auto& member : others) {
    transport_.send_request(
        self_address(), member.address, frame, config_.rpc_timeout_ms,
        [this, state](RpcResult result) {
          std::function<void(Status)> fire;
          Status outcome = Status::ok_status();
          {
            std::lock_guard<std::mutex> lock(mutex_);
            bool acked = false;
            if (result.ok) {
              auto response = decode_frame(result.response);
              acked = response && response_ok(response.value());
            }
            if (acked) {
              ++state->acks;
            } else {
              ++state->fails;
            }
            if (!state->done && state->acks >= state->majority) {
              state->done = true;
              fire = state->on_done;
            } else if (!state->done &&
                       state->acks + state->fails == state->total) {
              state->done = true;
              fire = state->on_done;
              outcome = Error{ErrorCode::NoQuorum, "no majority reachable"};
              circuit_open_until_ =
                  transport_.now_ms() + config_.retry_backoff_ms;
            }
          }
          if (fire) fire(outcome);
        });
  }
}

void QuorumReplica::sync_lagging_members() {
  std::vector<std::pair<QuorumMember, std::pair<std::int64_t, Json>>> work;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    for (const auto& member : other_members()) {
      auto it = match_len_.find(member.node_id);
      std::int64_t known = it == match_len_.end() ? -1 : it->second;
      if (known == committed_len_) continue;
      if (known < 0 && committed_len_ == 0) continue;
      std::int64_t from = known < 0 ? 0 : std::min(known, committed_len_);
      Json entries = Json::array();
      for (std::int64_t i = from; i < committed_len_; ++i) {
        entries.push_back(entry_to_json(log_[static_cast<std::size_t>(i)]));
      }
      Json body{{"committed_len", committed_len_},
                {"entries", std::move(entries)},
                {"from", from},
                {"sender", node_id_},
                {"total_len", committed_len_}};
      work.emplace_back(member, std::make_pair(from, std::move(body)));
    }
  }
  for (auto& [member, payload] : work) {
    Envelope request = make_request(
        kQSync, node_id_ + "-s" + std::to_string(transport_.now_ms()),
        std::move(payload.second));
    transport_.send_request(
        self_address(), member.address, encode_frame(request),
        config_.rpc_timeout_ms,
        [this, member_id = member.node_id](RpcResult result) {
          if (!result.ok) return;
          auto response = decode_frame(result.response);
          if (!response || !response_ok(response.value())) return;
          if (auto len = get_int(response.value().body, "log_len")) {
            std::lock_guard<std::mutex> lock(mutex_);
            match_len_[member_id] = len.value();
          }
        });
  }
}

std::int64_t QuorumReplica::keygroup_count() const {
  std::lock_guard<std::mutex> lock(mutex_);
  const std::string prefix = std::string("kg") + kSep;
  std::int64_t count = 0;
  for (auto it = kv_.lower_bound(prefix);
       it != kv_.end() && starts_with(it->first, prefix); ++it) {
    ++count;
  }
  return count;
}

std::vector<LogEntry> QuorumReplica::log() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return log_;
}

std::int64_t QuorumReplica::committed_len() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return committed_len_;
}

bool QuorumReplica::circuit_open() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return transport_.now_ms() < circuit_open_until_;
}

void QuorumReplica::dispatch_async(const Envelope& request,
                                   std::function<void(Envelope)> respond) {
  const std::string& type = request.msg_type;
  const Json& body = request.body;

  auto mutate = [this, request, respond](LogEntry entry) {
    submit_write(std::move(entry),
                 [request, respond](Status status) {
                   if (status.ok()) {
                     respond(make_ok_response(request));
                   } else {
                     respond(make_error_response(request, status.error().code,
                                                 status.error().message));
                   }
                 });
  };

  if (type == msg::kRegisterNode) {
    auto node_id = get_string(body, "node_id");
    auto address = get_string(body, "address");
    if (!node_id || !address) {
      respond(make_error_response(request, ErrorCode::BadRequest,
                                  "node_id and address required"));
      return;
    }
    if (!is_valid_address(address.value())) {
      respond(make_error_response(request, ErrorCode::MalformedAddress,
                                  "address must be host:port"));
      return;
    }
    mutate(LogEntry{{KvOp{node_key(node_id.value()), address.value()}}});
    return;
  }

  if (type == msg::kCreateKeygroup) {
    auto keygroup = get_string(body, "keygroup_id");
    if (!keygroup || keygroup.value().empty()) {
      respond(make_error_response(request, ErrorCode::BadRequest,
                                  "keygroup_id required"));
      return;
    }
    std::string creator = "client";
    if (body.contains("creator") && body.at("creator").is_string()) {
      creator = body.at("creator").get<std::string>();
    }
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (kv_.count(kg_key(keygroup.value())) != 0) {
        respond(make_error_response(request, ErrorCode::KeygroupExists,
                                    "keygroup already exists"));
        return;
      }
    }
    Json config{{"creator", creator},
                {"expiry_s", body.value("expiry_s", std::int64_t{0})},
                {"mutable", body.value("mutable", true)},
                {"v", 1}};
    Json actions = Json::array({"Configure", "Delete", "Read", "Update"});
    LogEntry entry{{KvOp{kg_key(keygroup.value()), canonical_dump(config)},
                    KvOp{perm_key(creator, keygroup.value()),
                         canonical_dump(Json{{"actions", actions}})}}};
    mutate(std::move(entry));
    return;
  }

  if (type == msg::kDeleteKeygroup) {
    auto keygroup = get_string(body, "keygroup_id");
    if (!keygroup) {
      respond(make_error_response(request, ErrorCode::BadRequest,
                                  "keygroup_id required"));
      return;
    }
    LogEntry entry;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (kv_.count(kg_key(keygroup.value())) == 0) {
        respond(make_error_response(request, ErrorCode::NoSuchKeygroup,
                                    "no such keygroup"));
        return;
      }
      entry.ops.push_back(KvOp{kg_key(keygroup.value()), std::nullopt});
      const std::string member_prefix =
          std::string("member") + kSep + keygroup.value() + kSep;
      for (auto it = kv_.lower_bound(member_prefix);
           it != kv_.end() && starts_with(it->first, member_prefix); ++it) {
        entry.ops.push_back(KvOp{it->first, std::nullopt});
      }
      const std::string perm_prefix = std::string("perm") + kSep;
      const std::string perm_suffix = kSep + keygroup.value();
      for (auto it = kv_.lower_bound(perm_prefix);
           it != kv_.end() && starts_with(it->first, perm_prefix); ++it) {
        if (it->first.size() >= perm_suffix.size() &&
            it->first.compare(it->first.size() - perm_suffix.size(),
                              perm_suffix.size(), perm_suffix) == 0) {
          entry.ops.push_back(KvOp{it->first, std::nullopt});
        }
      }
    }
    mutate(std::move(entry));
    return;
  }

  if (type == msg::kJoinKeygroup || type == msg::kLeaveKeygroup) {
    auto keygroup = get_string(body, "keygroup_id");
    auto node_id = get_string(body, "node_id");
    if (!keygroup || !node_id) {
      respond(make_error_response(request, ErrorCode::BadRequest,
                                  "keygroup_id and node_id required"));
      return;
    }
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (kv_.count(kg_key(keygroup.value())) == 0) {
        respond(make_error_response(request, ErrorCode::NoSuchKeygroup,
                                    "no such keygroup"));
        return;
      }
      if (kv_.count(node_key(node_id.value())) == 0) {
        respond(make_error_response(request, ErrorCode::NoSuchNode,
                                    "no such node"));
        return;
      }
    }
    if (type == msg::kJoinKeygroup) {
      mutate(LogEntry{{KvOp{member_key(keygroup.value(), node_id.value()),
                            std::string("replica")}}});
    } else {
      mutate(LogEntry{{KvOp{member_key(keygroup.value(), node_id.value()),
                            std::nullopt}}});
    }
    return;
  }

  if (type == msg::kSetPermission || type == msg::kRevokePermission) {
    auto user = get_string(body, "user_id");
    auto keygroup = get_string(body, "keygroup_id");
    if (!user || !keygroup) {
      respond(make_error_response(request, ErrorCode::BadRequest,
                                  "user_id and keygroup_id required"));
      return;
    }
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (kv_.count(kg_key(keygroup.value())) == 0) {
        respond(make_error_response(request, ErrorCode::NoSuchKeygroup,
                                    "no such keygroup"));
        return;
      }
    }
    if (type == msg::kSetPermission) {
      auto actions = get_array(body, "actions");
      if (!actions || actions.value().empty()) {
        respond(make_error_response(request, ErrorCode::BadRequest,
                                    "non-empty actions required"));
        return;
      }
      Json sorted = Json::array();
      {
        std::set<std::string> names;
        for (const auto& item : actions.value()) {
          if (!item.is_string() ||
              !action_from_string(item.get<std::string>())) {
            respond(make_error_response(request, ErrorCode::BadRequest,
                                        "unknown action"));
            return;
          }
          names.insert(item.get<std::string>());
        }
        for (const auto& name : names) sorted.push_back(name);
      }
      mutate(LogEntry{{KvOp{
          perm_key(user.value(), keygroup.value()),
          canonical_dump(Json{{"actions", std::move(sorted)}})}}});
    } else {
      mutate(LogEntry{
          {KvOp{perm_key(user.value(), keygroup.value()), std::nullopt}}});
    }
    return;
  }

  if (type == msg::kCheckPermission || type == msg::kGetReplicas ||
      type == msg::kKeygroupCount) {
    run_barrier([this, request, respond](Status status) {
      if (!status.ok()) {
        respond(make_error_response(request, status.error().code,
                                    status.error().message));
        return;
      }
      respond(serve_read(request));
    });
    return;
  }

  respond(make_error_response(request, ErrorCode::BadRequest,
                              "unknown msg_type: " + type));
}

Envelope QuorumReplica::serve_read(const Envelope& request) {
  const std::string& type = request.msg_type;
  const Json& body = request.body;
  std::lock_guard<std::mutex> lock(mutex_);

  if (type == msg::kKeygroupCount) {
    const std::string prefix = std::string("kg") + kSep;
    std::int64_t count = 0;
    for (auto it = kv_.lower_bound(prefix);
         it != kv_.end() && starts_with(it->first, prefix); ++it) {
      ++count;
    }
    return make_ok_response(request, Json{{"count", count}});
  }

  if (type == msg::kCheckPermission) {
    auto user = get_string(body, "user_id");
    auto keygroup = get_string(body, "keygroup_id");
    auto action = get_string(body, "action");
    if (!user || !keygroup || !action) {
      return make_error_response(request, ErrorCode::BadRequest,
                                 "user_id, keygroup_id, action required");
    }
    bool allowed = false;
    auto it = kv_.find(perm_key(user.value(), keygroup.value()));
    if (it != kv_.end()) {
      if (auto record = parse_json(it->second)) {
        if (auto actions = get_array(record.value(), "actions")) {
          for (const auto& item : actions.value()) {
            if (item.is_string() &&
                item.get<std::string>() == action.value()) {
              allowed = true;
            }
          }
        }
      }
    }
    return make_ok_response(request, Json{{"allowed", allowed}});
  }

  // GetReplicas
  auto keygroup = get_string(body, "keygroup_id");
  if (!keygroup) {
    return make_error_response(request, ErrorCode::BadRequest,
                               "keygroup_id required");
  }
  if (kv_.count(kg_key(keygroup.value())) == 0) {
    return make_error_response(request, ErrorCode::NoSuchKeygroup,
                               "no such keygroup");
  }
  Json list = Json::array();
  const std::string prefix =
      std::string("member") + kSep + keygroup.value() + kSep;
  for (auto it = kv_.lower_bound(prefix);
       it != kv_.end() && starts_with(it->first, prefix); ++it) {
    std::string node_id = it->first.substr(prefix.size());
    auto node_it = kv_.find(node_key(node_id));
    if (node_it == kv_.end()) continue;
    list.push_back(Json{{"address", node_it->second}, {"node_id", node_id}});
  }
  return make_ok_response(request, Json{{"replicas", std::move(list)}});
}

}  // namespace fogconf

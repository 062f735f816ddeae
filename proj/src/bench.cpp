#include "fogconf/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <memory>
#include <mutex>
#include <set>
#include <thread>

#include "fogconf/api.hpp"
#include "fogconf/node.hpp"
#include "fogconf/quorum.hpp"
#include "fogconf/shaped.hpp"
#include "fogconf/tcpnet.hpp"

namespace fogconf {

namespace {

constexpr const char* kLatencyHeader = "t_ms,op,latency_ms,status";
constexpr const char* kConvergenceHeader = "t_ms,replica_id,keygroup_count";

const std::set<std::string>& supported_workload_ops() {
  static const std::set<std::string> ops = {
      msg::kCreateKeygroup, msg::kKeygroupCount, msg::kCheckPermission,
      msg::kGetReplicas};
  return ops;
}

Json workload_body(const std::string& op, std::int64_t n) {
  if (op == msg::kCreateKeygroup) {
    return Json{{"creator", "bench"},
                {"keygroup_id", "kg-" + std::to_string(n)}};
  }
  if (op == msg::kCheckPermission) {
    return Json{{"action", "Read"},
                {"keygroup_id", "kg-1"},
                {"user_id", "bench"}};
  }
  if (op == msg::kGetReplicas) {
    return Json{{"keygroup_id", "kg-1"}};
  }
  return Json::object();  // KeygroupCount
}

std::string format_ms(double value) {
  double rounded = std::llround(value);
  if (std::fabs(value - rounded) < 1e-9) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%lld",
                  static_cast<long long>(rounded));
    return buffer;
  }
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.3f", value);
  return buffer;
}

Json json_number(double value) {
  double rounded = std::llround(value);
  if (std::fabs(value - rounded) < 1e-9) {
    return Json(static_cast<std::int64_t>(rounded));
  }
  return Json(value);
}

std::string build_latency_csv(const std::vector<LatencySample>& samples,
                              bool paper_zeros) {
  std::string out = kLatencyHeader;
  out.push_back('\n');
  for (const auto& sample : samples) {
    double latency = sample.latency_ms;
    if (!sample.ok && paper_zeros) latency = 0;
    out += std::to_string(sample.t_ms);
    out.push_back(',');
    out += sample.op;
    out.push_back(',');
    out += format_ms(latency);
    out.push_back(',');
    if (sample.ok) {
      out += "Ok";
    } else {
      out += "Error(" + sample.error_code + ")";
    }
    out.push_back('\n');
  }
  return out;
}

std::string build_convergence_csv(
    const std::vector<ConvergenceSample>& samples) {
  std::string out = kConvergenceHeader;
  out.push_back('\n');
  for (const auto& sample : samples) {
    out += std::to_string(sample.t_ms);
    out.push_back(',');
    out += sample.replica_id;
    out.push_back(',');
    out += std::to_string(sample.keygroup_count);
    out.push_back('\n');
  }
  return out;
}

}  // namespace

const char* to_string(Backend backend) {
  return backend == Backend::Crdt ? "crdt" : "quorum";
}

const char* to_string(TimeMode mode) {
  return mode == TimeMode::Virtual ? "virtual" : "real";
}

std::string latency_csv_header() { return kLatencyHeader; }
std::string convergence_csv_header() { return kConvergenceHeader; }

Json scenario_to_json(const Scenario& scenario) {
  Json delays = Json::array();
  for (const auto& entry : scenario.delays) {
    delays.push_back(Json{{"delay_ms", entry.delay_ms},
                          {"from", entry.from},
                          {"to", entry.to}});
  }
  Json schedule = Json::array();
  for (const auto& event : scenario.partition_schedule) {
    if (event.is_partition) {
      Json groups = Json::array();
      for (const auto& group : event.groups) {
        Json members = Json::array();
        for (const auto& node : group) members.push_back(node);
        groups.push_back(std::move(members));
      }
      schedule.push_back(Json{{"action", "Partition"},
                              {"at_ms", event.at_ms},
                              {"groups", std::move(groups)}});
    } else {
      schedule.push_back(Json{{"action", "Heal"}, {"at_ms", event.at_ms}});
    }
  }
  Json ops = Json::array();
  for (const auto& op : scenario.workload.ops) ops.push_back(op);

  return Json{
      {"backend", to_string(scenario.backend)},
      {"default_delay_ms", scenario.default_delay_ms},
      {"delays", std::move(delays)},
      {"gossip",
       Json{{"failure_threshold", scenario.gossip.failure_threshold},
            {"fanout", scenario.gossip.fanout},
            {"period_ms", scenario.gossip.period_ms},
            {"rpc_timeout_ms", scenario.gossip.rpc_timeout_ms}}},
      {"name", scenario.name},
      {"nodes", scenario.nodes},
      {"partition_schedule", std::move(schedule)},
      {"quorum_retry_backoff_ms", scenario.quorum_retry_backoff_ms},
      {"sample_period_ms", scenario.sample_period_ms},
      {"seed", scenario.seed},
      {"time_mode", to_string(scenario.time_mode)},
      {"workload", Json{{"duration_ms", scenario.workload.duration_ms},
                        {"interarrival_ms", scenario.workload.interarrival_ms},
                        {"ops", std::move(ops)}}}};
}

Result<Scenario> scenario_from_json(const Json& j) {
  if (!j.is_object()) {
    return Error{ErrorCode::BadRequest, "scenario must be an object"};
  }
  Scenario s;
  if (j.contains("name")) {
    auto name = get_string(j, "name");
    if (!name) return name.error();
    s.name = name.take();
  }
  if (j.contains("backend")) {
    auto backend = get_string(j, "backend");
    if (!backend) return backend.error();
    if (backend.value() == "crdt") {
      s.backend = Backend::Crdt;
    } else if (backend.value() == "quorum") {
      s.backend = Backend::Quorum;
    } else {
      return Error{ErrorCode::BadRequest,
                   "unknown backend: " + backend.value()};
    }
  }
  auto nodes = get_array(j, "nodes");
  if (!nodes) return nodes.error();
  for (const auto& node : nodes.value()) {
    if (!node.is_string()) {
      return Error{ErrorCode::BadRequest, "nodes must be strings"};
    }
    s.nodes.push_back(node.get<std::string>());
  }
  if (j.contains("default_delay_ms")) {
    auto v = get_int(j, "default_delay_ms");
    if (!v) return v.error();
    s.default_delay_ms = v.value();
  }
  if (j.contains("delays")) {
    auto delays = get_array(j, "delays");
    if (!delays) return delays.error();
    for (const auto& item : delays.value()) {
      auto from = get_string(item, "from");
      if (!from) return from.error();
      auto to = get_string(item, "to");
      if (!to) return to.error();
      auto ms = get_int(item, "delay_ms");
      if (!ms) return ms.error();
      s.delays.push_back(DelayEntry{from.take(), to.take(), ms.value()});
    }
  }
  if (j.contains("partition_schedule")) {
    auto schedule = get_array(j, "partition_schedule");
    if (!schedule) return schedule.error();
    for (const auto& item : schedule.value()) {
      auto at = get_int(item, "at_ms");
      if (!at) return at.error();
      auto action = get_string(item, "action");
      if (!action) return action.error();
      PartitionEvent event;
      event.at_ms = at.value();
      if (action.value() == "Partition") {
        event.is_partition = true;
        auto groups = get_array(item, "groups");
        if (!groups) return groups.error();
        for (const auto& group : groups.value()) {
          if (!group.is_array()) {
            return Error{ErrorCode::BadRequest, "groups must be arrays"};
          }
          std::vector<std::string> members;
          for (const auto& node : group) {
            if (!node.is_string()) {
              return Error{ErrorCode::BadRequest,
                           "group members must be strings"};
            }
            members.push_back(node.get<std::string>());
          }
          event.groups.push_back(std::move(members));
        }
      } else if (action.value() == "Heal") {
        event.is_partition = false;
      } else {
        return Error{ErrorCode::BadRequest,
                     "unknown schedule action: " + action.value()};
      }
      s.partition_schedule.push_back(std::move(event));
    }
  }
  if (j.contains("workload")) {
    auto workload = get_object(j, "workload");
    if (!workload) return workload.error();
    if (workload.value().contains("ops")) {
      auto ops = get_array(workload.value(), "ops");
      if (!ops) return ops.error();
      s.workload.ops.clear();
      for (const auto& op : ops.value()) {
        if (!op.is_string()) {
          return Error{ErrorCode::BadRequest, "workload ops must be strings"};
        }
        s.workload.ops.push_back(op.get<std::string>());
      }
    }
    if (workload.value().contains("interarrival_ms")) {
      auto v = get_int(workload.value(), "interarrival_ms");
      if (!v) return v.error();
      s.workload.interarrival_ms = v.value();
    }
    if (workload.value().contains("duration_ms")) {
      auto v = get_int(workload.value(), "duration_ms");
      if (!v) return v.error();
      s.workload.duration_ms = v.value();
    }
  }
  if (j.contains("gossip")) {
    auto gossip = get_object(j, "gossip");
    if (!gossip) return gossip.error();
    const Json& g = gossip.value();
    if (g.contains("period_ms")) {
      auto v = get_int(g, "period_ms");
      if (!v) return v.error();
      s.gossip.period_ms = v.value();
    }
    if (g.contains("fanout")) {
      auto v = get_int(g, "fanout");
      if (!v) return v.error();
      s.gossip.fanout = static_cast<int>(v.value());
    }
    if (g.contains("failure_threshold")) {
      auto v = get_int(g, "failure_threshold");
      if (!v) return v.error();
      s.gossip.failure_threshold = static_cast<int>(v.value());
    }
    if (g.contains("rpc_timeout_ms")) {
      auto v = get_int(g, "rpc_timeout_ms");
      if (!v) return v.error();
      s.gossip.rpc_timeout_ms = v.value();
    }
  }
  if (j.contains("quorum_retry_backoff_ms")) {
    auto v = get_int(j, "quorum_retry_backoff_ms");
    if (!v) return v.error();
    s.quorum_retry_backoff_ms = v.value();
  }
  if (j.contains("sample_period_ms")) {
    auto v = get_int(j, "sample_period_ms");
    if (!v) return v.error();
    s.sample_period_ms = v.value();
  }
  if (j.contains("time_mode")) {
    auto mode = get_string(j, "time_mode");
    if (!mode) return mode.error();
    if (mode.value() == "virtual") {
      s.time_mode = TimeMode::Virtual;
    } else if (mode.value() == "real") {
      s.time_mode = TimeMode::Real;
    } else {
      return Error{ErrorCode::BadRequest,
                   "unknown time_mode: " + mode.value()};
    }
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer() &&
        !j.at("seed").is_number_unsigned()) {
      return Error{ErrorCode::BadRequest, "seed must be an integer"};
    }
    if (j.at("seed").is_number_integer() &&
        j.at("seed").get<std::int64_t>() < 0) {
      return Error{ErrorCode::BadRequest, "seed must be non-negative"};
    }
    s.seed = j.at("seed").get<std::uint64_t>();
  } else if (s.time_mode == TimeMode::Virtual) {
    return Error{ErrorCode::BadRequest, "seed is mandatory in virtual mode"};
  }
  return s;
}

Status validate_scenario(const Scenario& s) {
  auto invalid = [](const std::string& message) {
    return Status(Error{ErrorCode::BadRequest, "invalid scenario: " + message});
  };
  if (s.nodes.empty()) return invalid("at least one node required");
  std::set<std::string> ids;
  for (const auto& node : s.nodes) {
    if (!is_valid_identifier(node)) return invalid("bad node id: " + node);
    if (!ids.insert(node).second) return invalid("duplicate node: " + node);
  }
  if (s.backend == Backend::Quorum && s.nodes.size() < 3) {
    return invalid("quorum backend needs at least three nodes");
  }
  if (s.default_delay_ms < 0) return invalid("negative default delay");
  for (const auto& entry : s.delays) {
    if (entry.delay_ms < 0) return invalid("negative delay");
    if (ids.count(entry.from) == 0 || ids.count(entry.to) == 0) {
      return invalid("delay references unknown node");
    }
    if (entry.from == entry.to) return invalid("self delay must stay zero");
  }
  std::int64_t last_at = -1;
  for (const auto& event : s.partition_schedule) {
    if (event.at_ms < 0) return invalid("negative schedule time");
    if (event.at_ms < last_at) return invalid("schedule not sorted by at_ms");
    last_at = event.at_ms;
    if (event.is_partition) {
      std::set<std::string> seen;
      for (const auto& group : event.groups) {
        for (const auto& node : group) {
          if (ids.count(node) == 0) {
            return invalid("partition references unknown node: " + node);
          }
          if (!seen.insert(node).second) {
            return invalid("partition groups must be disjoint");
          }
        }
      }
      if (seen.size() != ids.size()) {
        return invalid("partition groups must cover all nodes");
      }
    }
  }
  if (s.workload.ops.empty()) return invalid("workload needs at least one op");
  for (const auto& op : s.workload.ops) {
    if (supported_workload_ops().count(op) == 0) {
      return invalid("unsupported workload op: " + op);
    }
  }
  if (s.workload.interarrival_ms <= 0) return invalid("interarrival must be positive");
  if (s.workload.duration_ms <= 0) return invalid("duration must be positive");
  if (last_at >= 0 && s.workload.duration_ms < last_at) {
    return invalid("duration must cover the partition schedule");
  }
  if (s.gossip.period_ms <= 0) return invalid("gossip period must be positive");
  if (s.gossip.fanout < 1) return invalid("gossip fanout must be >= 1");
  if (s.gossip.failure_threshold < 1) {
    return invalid("failure threshold must be >= 1");
  }
  if (s.gossip.rpc_timeout_ms <= 0 ||
      s.gossip.rpc_timeout_ms >= s.gossip.period_ms) {
    return invalid("rpc timeout must be positive and below the gossip period");
  }
  if (s.quorum_retry_backoff_ms <= 0) return invalid("backoff must be positive");
  if (s.sample_period_ms <= 0) return invalid("sample period must be positive");
  return Status::ok_status();
}

std::map<std::string, Scenario> builtin_scenarios() {
  std::map<std::string, Scenario> out;

  Scenario baseline;
  baseline.name = "baseline";
  baseline.nodes = {"m1", "m2", "m3"};
  baseline.seed = 42;
  out["baseline"] = baseline;

  Scenario delay10 = baseline;
  delay10.name = "delay10";
  for (const auto& from : delay10.nodes) {
    for (const auto& to : delay10.nodes) {
      if (from != to) delay10.delays.push_back(DelayEntry{from, to, 10});
    }
  }
  out["delay10"] = delay10;

  Scenario partition = baseline;
  partition.name = "partition";
  partition.partition_schedule = {
      PartitionEvent{45000, true, {{"m1"}, {"m2", "m3"}}},
      PartitionEvent{80000, false, {}},
  };
  out["partition"] = partition;

  return out;
}

namespace {

struct SampleSink {
  std::mutex mutex;
  std::vector<LatencySample> latency;
  std::vector<ConvergenceSample> convergence;
  std::atomic<int> outstanding{0};

  void push_latency(LatencySample sample) {
    std::lock_guard<std::mutex> lock(mutex);
    latency.push_back(std::move(sample));
  }
  void push_convergence(ConvergenceSample sample) {
    std::lock_guard<std::mutex> lock(mutex);
    convergence.push_back(std::move(sample));
  }
};

LatencySample finish_sample(std::int64_t start_ms, const std::string& op,
                            double latency_ms, const RpcResult& result) {
  LatencySample sample;
  sample.t_ms = start_ms;
  sample.op = op;
  sample.latency_ms = latency_ms;
  if (result.ok) {
    auto envelope = decode_frame(result.response);
    if (envelope && response_ok(envelope.value())) {
      sample.ok = true;
    } else if (envelope) {
      sample.error_code = to_string(response_error_code(envelope.value()));
    } else {
      sample.error_code = to_string(ErrorCode::BadRequest);
    }
  } else {
    sample.error_code = to_string(result.error);
  }
  return sample;
}

RunResult assemble_result(SampleSink& sink, bool paper_zeros) {
  RunResult result;
  {
    std::lock_guard<std::mutex> lock(sink.mutex);
    result.latency = sink.latency;
    result.convergence = sink.convergence;
  }
  std::stable_sort(result.latency.begin(), result.latency.end(),
                   [](const LatencySample& a, const LatencySample& b) {
                     return a.t_ms < b.t_ms;
                   });
  std::stable_sort(result.convergence.begin(), result.convergence.end(),
                   [](const ConvergenceSample& a, const ConvergenceSample& b) {
                     return a.t_ms < b.t_ms;
                   });
  result.latency_csv = build_latency_csv(result.latency, paper_zeros);
  result.convergence_csv = build_convergence_csv(result.convergence);
  return result;
}

Result<RunResult> run_virtual(const Scenario& s, bool paper_zeros) {
  EventLoop loop;
  DelayMatrix delays;
  delays.default_delay_ms = s.default_delay_ms;
  for (const auto& entry : s.delays) {
    delays.set(entry.from, entry.to, entry.delay_ms);
  }
  SimNetwork net(loop, delays);
  net.apply_schedule(s.partition_schedule);

  std::mt19937_64 rng(s.seed);
  std::optional<Error> boot_error;

  std::vector<std::unique_ptr<Node>> nodes;
  std::vector<std::unique_ptr<QuorumReplica>> quorum;
  if (s.backend == Backend::Crdt) {
    for (std::size_t i = 0; i < s.nodes.size(); ++i) {
      NodeOptions options;
      options.node_id = s.nodes[i];
      options.address = s.nodes[i];
      options.gossip = s.gossip;
      if (i > 0) options.seed_address = s.nodes[0];
      nodes.push_back(std::make_unique<Node>(net, options, rng));
    }
    for (auto& node : nodes) {
      node->start([&boot_error](Status status) {
        if (!status.ok() && !boot_error) boot_error = status.error();
      });
    }
  } else {
    QuorumConfig config;
    for (const auto& id : s.nodes) config.members.push_back({id, id});
    config.rpc_timeout_ms = s.gossip.rpc_timeout_ms;
    config.retry_backoff_ms = s.quorum_retry_backoff_ms;
    for (const auto& id : s.nodes) {
      quorum.push_back(std::make_unique<QuorumReplica>(net, id, config));
    }
    for (auto& replica : quorum) {
      Status status = replica->start();
      if (!status.ok()) {
        return Error{ErrorCode::Internal,
                     "backend boot failure: " + status.error().message};
      }
    }
  }

  SampleSink sink;
  const std::string& target = s.nodes[0];
  const std::int64_t client_timeout_ms = s.gossip.rpc_timeout_ms * 2 + 2000;

  std::int64_t n = 0;
  for (std::int64_t t = 0; t < s.workload.duration_ms;
       t += s.workload.interarrival_ms) {
    ++n;
    const std::string op =
        s.workload.ops[static_cast<std::size_t>((n - 1)) %
                       s.workload.ops.size()];
    loop.schedule_at(t, [&net, &loop, &sink, &target, client_timeout_ms, op,
                         n, t] {
      Envelope request =
          make_request(op, "w" + std::to_string(n), workload_body(op, n));
      sink.outstanding.fetch_add(1);
      net.send_request(target, target, encode_frame(request),
                       client_timeout_ms,
                       [&sink, &loop, op, t](RpcResult result) {
                         double latency =
                             static_cast<double>(loop.now_ms() - t);
                         sink.push_latency(
                             finish_sample(t, op, latency, result));
                         sink.outstanding.fetch_sub(1);
                       });
    });
  }

  // Samples sit 1 ms after the gossip/workload tick grid so a sample never
  // lands in the middle of a same-millisecond exchange cascade.
  for (std::int64_t t = 1; t <= s.workload.duration_ms;
       t += s.sample_period_ms) {
    loop.schedule_at(t, [&s, &nodes, &quorum, &sink, t] {
      for (std::size_t i = 0; i < s.nodes.size(); ++i) {
        std::int64_t count = s.backend == Backend::Crdt
                                 ? nodes[i]->keygroup_count()
                                 : quorum[i]->keygroup_count();
        sink.push_convergence(ConvergenceSample{t, s.nodes[i], count});
      }
    });
  }

  loop.run_until(s.workload.duration_ms);
  const std::int64_t drain_deadline = s.workload.duration_ms + 60000;
  while (sink.outstanding.load() > 0 && loop.now_ms() < drain_deadline) {
    loop.run_until(loop.now_ms() + 100);
  }

  for (auto& node : nodes) node->stop();
  for (auto& replica : quorum) replica->stop();

  if (boot_error) {
    return Error{ErrorCode::Internal,
                 "backend boot failure: " + boot_error->message};
  }
  return assemble_result(sink, paper_zeros);
}

Result<RunResult> run_real(const Scenario& s, bool paper_zeros) {
  TcpTransport tcp;
  DelayMatrix delays;
  delays.default_delay_ms = s.default_delay_ms;
  for (const auto& entry : s.delays) {
    delays.set(entry.from, entry.to, entry.delay_ms);
  }
  ShapedTransport shaped(tcp, delays);

  std::map<std::string, std::string> address_of;
  for (const auto& id : s.nodes) {
    std::string address = reserve_loopback_address();
    if (address.empty()) {
      return Error{ErrorCode::Internal, "backend boot failure: no free port"};
    }
    address_of[id] = address;
    shaped.register_endpoint(id, address);
  }

  std::vector<std::unique_ptr<std::mt19937_64>> rngs;
  std::vector<std::unique_ptr<Node>> nodes;
  std::vector<std::unique_ptr<QuorumReplica>> quorum;

  if (s.backend == Backend::Crdt) {
    for (std::size_t i = 0; i < s.nodes.size(); ++i) {
      rngs.push_back(std::make_unique<std::mt19937_64>(
          s.seed ^ (0x9e3779b97f4a7c15ull * (i + 1))));
      NodeOptions options;
      options.node_id = s.nodes[i];
      options.address = address_of[s.nodes[i]];
      options.gossip = s.gossip;
      if (i > 0) options.seed_address = address_of[s.nodes[0]];
      nodes.push_back(std::make_unique<Node>(shaped, options, *rngs.back()));
    }
    for (auto& node : nodes) {
      std::promise<Status> ready;
      auto future = ready.get_future();
      node->start([&ready](Status status) { ready.set_value(status); });
      if (future.wait_for(std::chrono::seconds(15)) !=
          std::future_status::ready) {
        return Error{ErrorCode::Internal, "backend boot failure: timeout"};
      }
      Status status = future.get();
      if (!status.ok()) {
        return Error{ErrorCode::Internal,
                     "backend boot failure: " + status.error().message};
      }
      if (!tcp.is_bound(node->options().address)) {
        return Error{ErrorCode::Internal,
                     "backend boot failure: bind failed on " +
                         node->options().address};
      }
    }
  } else {
    QuorumConfig config;
    for (const auto& id : s.nodes) {
      config.members.push_back({id, address_of[id]});
    }
    config.rpc_timeout_ms = s.gossip.rpc_timeout_ms;
    config.retry_backoff_ms = s.quorum_retry_backoff_ms;
    for (const auto& id : s.nodes) {
      quorum.push_back(std::make_unique<QuorumReplica>(shaped, id, config));
    }
    for (auto& replica : quorum) {
      Status status = replica->start();
      if (!status.ok()) {
        return Error{ErrorCode::Internal,
                     "backend boot failure: " + status.error().message};
      }
    }
    for (const auto& id : s.nodes) {
      if (!tcp.is_bound(address_of[id])) {
        return Error{ErrorCode::Internal,
                     "backend boot failure: bind failed on " + address_of[id]};
      }
    }
  }

  SampleSink sink;
  const std::int64_t t0 = tcp.now_ms();
  const std::string target_address = address_of[s.nodes[0]];
  const std::int64_t client_timeout_ms = s.gossip.rpc_timeout_ms * 2 + 2000;

  for (const auto& event : s.partition_schedule) {
    std::int64_t delay = t0 + event.at_ms - tcp.now_ms();
    if (delay < 0) delay = 0;
    if (event.is_partition) {
      auto groups = event.groups;
      tcp.schedule(delay, [&shaped, groups] { shaped.apply_partition(groups); });
    } else {
      tcp.schedule(delay, [&shaped] { shaped.heal(); });
    }
  }

  std::int64_t n = 0;
  for (std::int64_t t = 0; t < s.workload.duration_ms;
       t += s.workload.interarrival_ms) {
    ++n;
    const std::string op =
        s.workload.ops[static_cast<std::size_t>((n - 1)) %
                       s.workload.ops.size()];
    tcp.schedule(t0 + t - tcp.now_ms(), [&shaped, &tcp, &sink, target_address,
                                         client_timeout_ms, op, n, t0] {
      const std::int64_t start = tcp.now_ms();
      Envelope request =
          make_request(op, "w" + std::to_string(n), workload_body(op, n));
      sink.outstanding.fetch_add(1);
      shaped.send_request(
          target_address, target_address, encode_frame(request),
          client_timeout_ms, [&sink, &tcp, op, start, t0](RpcResult result) {
            double latency = static_cast<double>(tcp.now_ms() - start);
            sink.push_latency(finish_sample(start - t0, op, latency, result));
            sink.outstanding.fetch_sub(1);
          });
    });
  }

  for (std::int64_t t = 1; t <= s.workload.duration_ms;
       t += s.sample_period_ms) {
    tcp.schedule(t0 + t - tcp.now_ms(), [&s, &nodes, &quorum, &sink, t] {
      for (std::size_t i = 0; i < s.nodes.size(); ++i) {
        std::int64_t count = s.backend == Backend::Crdt
                                 ? nodes[i]->keygroup_count()
                                 : quorum[i]->keygroup_count();
        sink.push_convergence(ConvergenceSample{t, s.nodes[i], count});
      }
    });
  }

  while (tcp.now_ms() - t0 < s.workload.duration_ms) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  const auto drain_deadline =
      std::chrono::steady_clock::now() + std::chrono::seconds(15);
  while (sink.outstanding.load() > 0 &&
         std::chrono::steady_clock::now() < drain_deadline) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }

  for (auto& node : nodes) node->stop();
  for (auto& replica : quorum) replica->stop();
  tcp.stop();

  return assemble_result(sink, paper_zeros);
}

}  // namespace

Result<RunResult> run_scenario(const Scenario& scenario, bool paper_zeros) {
  Status valid = validate_scenario(scenario);
  if (!valid.ok()) return valid.error();
  if (scenario.time_mode == TimeMode::Virtual) {
    return run_virtual(scenario, paper_zeros);
  }
  return run_real(scenario, paper_zeros);
}

Status write_run_result(const RunResult& result, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    return Error{ErrorCode::Internal, "cannot create " + out_dir};
  }
  auto write = [&](const std::string& name,
                   const std::string& text) -> Status {
    std::ofstream out(out_dir + "/" + name, std::ios::binary | std::ios::trunc);
    if (!out) {
      return Error{ErrorCode::Internal, "cannot write " + out_dir + "/" + name};
    }
    out << text;
    if (!out.flush()) {
      return Error{ErrorCode::Internal, "short write: " + name};
    }
    return Status::ok_status();
  };
  Status status = write("latency.csv", result.latency_csv);
  if (!status.ok()) return status;
  return write("convergence.csv", result.convergence_csv);
}

namespace {

bool parse_int64(const std::string& text, std::int64_t* out) {
  if (text.empty()) return false;
  char* end = nullptr;
  errno = 0;
  long long value = std::strtoll(text.c_str(), &end, 10);
  if (errno != 0 || end != text.c_str() + text.size()) return false;
  *out = value;
  return true;
}

bool parse_double(const std::string& text, double* out) {
  if (text.empty()) return false;
  char* end = nullptr;
  errno = 0;
  double value = std::strtod(text.c_str(), &end);
  if (errno != 0 || end != text.c_str() + text.size()) return false;
  *out = value;
  return true;
}

double nearest_rank(const std::vector<double>& sorted, int percentile) {
  std::size_t rank = static_cast<std::size_t>(std::ceil(
      static_cast<double>(percentile) / 100.0 *
      static_cast<double>(sorted.size())));
  if (rank == 0) rank = 1;
  return sorted[rank - 1];
}

}  // namespace

Result<Json> summarize_latency_csv(const std::string& csv_text) {
  auto malformed = [](const std::string& message) {
    return Error{ErrorCode::BadRequest, "malformed csv: " + message};
  };

  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos <= csv_text.size()) {
    auto next = csv_text.find('\n', pos);
    if (next == std::string::npos) {
      if (pos < csv_text.size()) lines.push_back(csv_text.substr(pos));
      break;
    }
    lines.push_back(csv_text.substr(pos, next - pos));
    pos = next + 1;
  }
  if (lines.empty()) return malformed("empty input");
  if (lines[0] != kLatencyHeader) return malformed("unexpected header");

  struct Bucket {
    std::int64_t count = 0;
    std::int64_t errors = 0;
    std::vector<double> ok_latencies;
  };
  std::map<std::int64_t, Bucket> buckets;
  std::int64_t count = 0;
  std::int64_t errors = 0;
  std::vector<double> ok_latencies;

  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t j = 0; j <= line.size(); ++j) {
      if (j == line.size() || line[j] == ',') {
        fields.push_back(line.substr(start, j - start));
        start = j + 1;
      }
    }
    if (fields.size() != 4) return malformed("line " + std::to_string(i + 1));
    std::int64_t t_ms = 0;
    double latency = 0;
    if (!parse_int64(fields[0], &t_ms) || !parse_double(fields[2], &latency)) {
      return malformed("line " + std::to_string(i + 1));
    }
    const std::string& status = fields[3];
    bool ok = status == "Ok";
    if (!ok && !(status.rfind("Error(", 0) == 0 && status.back() == ')')) {
      return malformed("bad status on line " + std::to_string(i + 1));
    }
    ++count;
    Bucket& bucket = buckets[t_ms / 10000];
    ++bucket.count;
    if (ok) {
      ok_latencies.push_back(latency);
      bucket.ok_latencies.push_back(latency);
    } else {
      ++errors;
      ++bucket.errors;
    }
  }

  Json summary{{"count", count}, {"errors", errors}};
  if (!ok_latencies.empty()) {
    std::sort(ok_latencies.begin(), ok_latencies.end());
    summary["p50_ms"] = json_number(nearest_rank(ok_latencies, 50));
    summary["p95_ms"] = json_number(nearest_rank(ok_latencies, 95));
    summary["p99_ms"] = json_number(nearest_rank(ok_latencies, 99));
  }
  Json bucket_list = Json::array();
  for (auto& [index, bucket] : buckets) {
    Json item{{"count", bucket.count},
              {"errors", bucket.errors},
              {"start_ms", index * 10000}};
    if (!bucket.ok_latencies.empty()) {
      std::sort(bucket.ok_latencies.begin(), bucket.ok_latencies.end());
      item["p50_ms"] = json_number(nearest_rank(bucket.ok_latencies, 50));
    }
    bucket_list.push_back(std::move(item));
  }
  summary["buckets"] = std::move(bucket_list);
  return summary;
}

}  // namespace fogconf

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "fogconf/api.hpp"
#include "fogconf/result.hpp"
#include "fogconf/transport.hpp"
#include "fogconf/wire.hpp"

namespace fogconf {

struct QuorumMember {
  std::string node_id;
  std::string address;
};

struct QuorumConfig {
  std::vector<QuorumMember> members;  // static membership, >= 3
  std::int64_t rpc_timeout_ms = 500;
  // After a quorum failure the coordinator fails fast for this long before
  // probing again; it also paces the log catch-up of lagging members. This
  // is the knob behind the post-heal recovery delay.
  std::int64_t retry_backoff_ms = 5000;
};

// One kv mutation; absent value means deletion. A log entry applies a batch
// of mutations atomically so cascading client operations stay single writes.
struct KvOp {
  std::string key;
  std::optional<std::string> value;

  bool operator==(const KvOp&) const = default;
};

struct LogEntry {
  std::vector<KvOp> ops;

  bool operator==(const LogEntry&) const = default;
};

// Majority-ack replicated configuration store, the strongly consistent
// stand-in baseline. Whichever member receives a client request coordinates
// it: mutations commit only once ceil((N+1)/2) members (counting the
// coordinator) hold them, reads serve locally after a majority barrier.
// Without a reachable majority every request fails; nothing stale is ever
// acknowledged. No leader election: tests drive one coordinator at a time.
class QuorumReplica {
 public:
  QuorumReplica(Transport& transport, std::string node_id,
                QuorumConfig config);

  Status start();
  void stop();

  // Serves the same client surface as the CRDT node, so scenarios can swap
  // backends without touching the workload. Mutations respond once a
  // majority holds them; reads respond after a majority barrier.
  void dispatch_async(const Envelope& request,
                      std::function<void(Envelope)> respond);

  // Pushes missing committed suffixes to lagging members and rolls back any
  // orphaned tentative entries they hold. Runs periodically; exposed for
  // quiescence in tests.
  void sync_lagging_members();

  std::int64_t keygroup_count() const;  // committed local view
  std::vector<LogEntry> log() const;
  std::int64_t committed_len() const;
  bool circuit_open() const;

  const QuorumConfig& config() const { return config_; }
  const std::string& node_id() const { return node_id_; }

 private:
  struct PendingWrite {
    LogEntry entry;
    std::function<void(Status)> on_done;
  };

  int majority() const {
    return static_cast<int>(config_.members.size()) / 2 + 1;
  }

  void handle_request(const std::string& from, const Bytes& request,
                      std::function<void(Bytes)> respond);
  Envelope handle_append(const Envelope& request);
  Envelope handle_sync(const Envelope& request);
  Envelope serve_read(const Envelope& request);

  void submit_write(LogEntry entry, std::function<void(Status)> on_done);
  void start_next_write_locked();
  void replicate(std::int64_t index, const LogEntry& entry,
                 std::function<void(Status)> on_done);
  void run_barrier(std::function<void(Status)> on_done);
  void apply_committed_locked();
  void tick();

  std::string self_address() const;
  std::vector<QuorumMember> other_members() const;

  Transport& transport_;
  std::string node_id_;
  QuorumConfig config_;

  mutable std::mutex mutex_;
  std::vector<LogEntry> log_;
  std::int64_t committed_len_ = 0;   // always == log_.size() on a coordinator
  std::int64_t applied_len_ = 0;
  std::map<std::string, std::string> kv_;
  std::map<std::string, std::int64_t> match_len_;  // per other member
  std::int64_t circuit_open_until_ = -1;
  bool write_in_flight_ = false;
  std::deque<PendingWrite> write_queue_;
  bool running_ = false;
};

}  // namespace fogconf

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <string>
#include <vector>

#include "fogconf/transport.hpp"

namespace fogconf {

// Single-threaded virtual-time event loop. Events fire in timestamp order;
// ties break by insertion sequence, which is what makes runs with the same
// seed bit-identical.
class EventLoop {
 public:
  std::int64_t now_ms() const { return now_ms_; }

  void schedule_at(std::int64_t at_ms, std::function<void()> fn);
  void schedule_in(std::int64_t delay_ms, std::function<void()> fn);

  // Processes every event with timestamp <= t_ms (including events scheduled
  // while draining), then advances the clock to t_ms.
  void run_until(std::int64_t t_ms);

  std::size_t pending() const { return queue_.size(); }

 private:
  struct Event {
    std::int64_t at_ms;
    std::uint64_t seq;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.at_ms != b.at_ms) return a.at_ms > b.at_ms;
      return a.seq > b.seq;
    }
  };

  std::int64_t now_ms_ = 0;
  std::uint64_t next_seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
};

// One-way link delays in milliseconds. Self-delay is always zero.
struct DelayMatrix {
  std::int64_t default_delay_ms = 0;
  std::map<std::pair<std::string, std::string>, std::int64_t> entries;

  std::int64_t delay(const std::string& from, const std::string& to) const;
  void set(const std::string& from, const std::string& to, std::int64_t ms);
  // Sets both directions.
  void set_symmetric(const std::string& a, const std::string& b,
                     std::int64_t ms);
};

struct PartitionEvent {
  std::int64_t at_ms = 0;
  bool is_partition = false;  // false: heal
  std::vector<std::vector<std::string>> groups;

  bool operator==(const PartitionEvent&) const = default;
};

using PartitionSchedule = std::vector<PartitionEvent>;

// In-process simulated network. Requests are delivered after the one-way
// link delay, responses after the reverse delay; each leg checks partition
// membership at delivery time, so anything in flight when a partition starts
// is dropped and surfaces as a caller timeout.
class SimNetwork : public Transport {
 public:
  SimNetwork(EventLoop& loop, DelayMatrix delays);

  void bind(const std::string& address, RequestHandler handler) override;
  void unbind(const std::string& address) override;
  void send_request(const std::string& from, const std::string& to,
                    Bytes request, std::int64_t timeout_ms,
                    ResponseCallback on_response) override;
  std::int64_t now_ms() const override { return loop_.now_ms(); }
  void schedule(std::int64_t delay_ms, std::function<void()> fn) override;

  // Nodes listed in `groups` can reach only their own group. Nodes not
  // listed are isolated entirely (the scenario validator requires schedules
  // to cover every node, so this is a belt for direct API use).
  void apply_partition(const std::vector<std::vector<std::string>>& groups);
  void heal();
  bool connected(const std::string& a, const std::string& b) const;

  // Schedules every event of the schedule onto the loop.
  void apply_schedule(const PartitionSchedule& schedule);

 private:
  struct Pending {
    bool settled = false;
    ResponseCallback on_response;
  };

  void settle(std::uint64_t id, RpcResult result);

  EventLoop& loop_;
  DelayMatrix delays_;
  std::map<std::string, RequestHandler> handlers_;
  std::map<std::string, int> partition_group_;  // empty: fully connected
  bool partitioned_ = false;
  std::map<std::uint64_t, Pending> pending_;
  std::uint64_t next_request_id_ = 0;
};

}  // namespace fogconf

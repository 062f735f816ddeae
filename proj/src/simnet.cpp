#include "fogconf/simnet.hpp"

#include <cassert>
#include <utility>

namespace fogconf {

void EventLoop::schedule_at(std::int64_t at_ms, std::function<void()> fn) {
  assert(at_ms >= now_ms_);
  queue_.push(Event{at_ms, next_seq_++, std::move(fn)});
}

void EventLoop::schedule_in(std::int64_t delay_ms, std::function<void()> fn) {
  schedule_at(now_ms_ + delay_ms, std::move(fn));
}

void EventLoop::run_until(std::int64_t t_ms) {
  while (!queue_.empty() && queue_.top().at_ms <= t_ms) {
    // Copy out before pop: fn may schedule new events.
    Event event = queue_.top();
    queue_.pop();
    now_ms_ = event.at_ms;
    event.fn();
  }
  if (t_ms > now_ms_) now_ms_ = t_ms;
}

std::int64_t DelayMatrix::delay(const std::string& from,
                                const std::string& to) const {
  if (from == to) return 0;
  auto it = entries.find({from, to});
  if (it != entries.end()) return it->second;
  return default_delay_ms;
}

void DelayMatrix::set(const std::string& from, const std::string& to,
                      std::int64_t ms) {
  entries[{from, to}] = ms;
}

void DelayMatrix::set_symmetric(const std::string& a, const std::string& b,
                                std::int64_t ms) {
  set(a, b, ms);
  set(b, a, ms);
}

SimNetwork::SimNetwork(EventLoop& loop, DelayMatrix delays)
    : loop_(loop), delays_(std::move(delays)) {}

void SimNetwork::bind(const std::string& address, RequestHandler handler) {
  handlers_[address] = std::move(handler);
}

void SimNetwork::unbind(const std::string& address) {
  handlers_.erase(address);
}

void SimNetwork::schedule(std::int64_t delay_ms, std::function<void()> fn) {
  loop_.schedule_in(delay_ms, std::move(fn));
}

void SimNetwork::apply_partition(
    const std::vector<std::vector<std::string>>& groups) {
  partition_group_.clear();
  int group = 1;
  for (const auto& members : groups) {
    for (const auto& node : members) partition_group_[node] = group;
    ++group;
  }
  partitioned_ = true;
}

void SimNetwork::heal() {
  partition_group_.clear();
  partitioned_ = false;
}

bool SimNetwork::connected(const std::string& a, const std::string& b) const {
  if (a == b) return true;
  if (!partitioned_) return true;
  auto ga = partition_group_.find(a);
  auto gb = partition_group_.find(b);
  // Unlisted nodes are isolated while a partition is active.
  if (ga == partition_group_.end() || gb == partition_group_.end()) {
    return false;
  }
  return ga->second == gb->second;
}

void SimNetwork::apply_schedule(const PartitionSchedule& schedule) {
  for (const auto& event : schedule) {
    if (event.is_partition) {
      auto groups = event.groups;
      loop_.schedule_at(event.at_ms,
                        [this, groups] { apply_partition(groups); });
    } else {
      loop_.schedule_at(event.at_ms, [this] { heal(); });
    }
  }
}

void SimNetwork::settle(std::uint64_t id, RpcResult result) {
  auto it = pending_.find(id);
  if (it == pending_.end() || it->second.settled) return;
  ResponseCallback cb = std::move(it->second.on_response);
  pending_.erase(it);
  cb(std::move(result));
}

void SimNetwork::send_request(const std::string& from, const std::string& to,
                              Bytes request, std::int64_t timeout_ms,
                              ResponseCallback on_response) {
  const std::uint64_t id = next_request_id_++;
  pending_[id] = Pending{false, std::move(on_response)};

  loop_.schedule_in(timeout_ms, [this, id] {
    settle(id, RpcResult::failure(ErrorCode::Timeout));
  });

  const std::int64_t forward_ms = delays_.delay(from, to);
  loop_.schedule_in(
      forward_ms, [this, id, from, to, request = std::move(request)] {
        if (!connected(from, to)) return;  // dropped; timeout fires later
        auto handler_it = handlers_.find(to);
        if (handler_it == handlers_.end()) {
          // Connection refused costs the round trip.
          loop_.schedule_in(delays_.delay(to, from), [this, id] {
            settle(id, RpcResult::failure(ErrorCode::Unreachable));
          });
          return;
        }
        handler_it->second(from, request, [this, id, from, to](Bytes reply) {
          loop_.schedule_in(
              delays_.delay(to, from),
              [this, id, from, to, reply = std::move(reply)]() mutable {
                if (!connected(to, from)) return;  // response leg dropped
                settle(id, RpcResult::success(std::move(reply)));
              });
        });
      });
}

}  // namespace fogconf

#include "fogconf/shaped.hpp"

#include <chrono>
#include <thread>

namespace fogconf {

ShapedTransport::ShapedTransport(Transport& inner, DelayMatrix delays)
    : inner_(inner), delays_(std::move(delays)) {}

void ShapedTransport::register_endpoint(const std::string& node_id,
                                        const std::string& address) {
  std::lock_guard<std::mutex> lock(mutex_);
  address_to_node_[address] = node_id;
}

std::string ShapedTransport::node_of(const std::string& address) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = address_to_node_.find(address);
  return it == address_to_node_.end() ? address : it->second;
}

void ShapedTransport::apply_partition(
    const std::vector<std::vector<std::string>>& groups) {
  std::lock_guard<std::mutex> lock(mutex_);
  partition_group_.clear();
  int group = 1;
  for (const auto& members : groups) {
    for (const auto& node : members) partition_group_[node] = group;
    ++group;
  }
  partitioned_ = true;
}

void ShapedTransport::heal() {
  std::lock_guard<std::mutex> lock(mutex_);
  partition_group_.clear();
  partitioned_ = false;
}

void ShapedTransport::apply_schedule(const PartitionSchedule& schedule) {
  for (const auto& event : schedule) {
    std::int64_t delay = event.at_ms - inner_.now_ms();
    if (delay < 0) delay = 0;
    if (event.is_partition) {
      auto groups = event.groups;
      inner_.schedule(delay, [this, groups] { apply_partition(groups); });
    } else {
      inner_.schedule(delay, [this] { heal(); });
    }
  }
}

bool ShapedTransport::connected(const std::string& a,
                                const std::string& b) const {
  if (a == b) return true;
  std::lock_guard<std::mutex> lock(mutex_);
  if (!partitioned_) return true;
  auto ga = partition_group_.find(a);
  auto gb = partition_group_.find(b);
  if (ga == partition_group_.end() || gb == partition_group_.end()) {
    return false;
  }
  return ga->second == gb->second;
}

void ShapedTransport::bind(const std::string& address,
                           RequestHandler handler) {
  inner_.bind(address, std::move(handler));
}

void ShapedTransport::unbind(const std::string& address) {
  inner_.unbind(address);
}

void ShapedTransport::send_request(const std::string& from,
                                   const std::string& to, Bytes request,
                                   std::int64_t timeout_ms,
                                   ResponseCallback on_response) {
  const std::string from_node = node_of(from);
  const std::string to_node = node_of(to);
  const std::int64_t forward_ms = delays_.delay(from_node, to_node);
  const std::int64_t return_ms = delays_.delay(to_node, from_node);

  // The forward delay runs as a timer so the caller never blocks; the return
  // delay sleeps on the inner transport's per-request worker.
  inner_.schedule(
      forward_ms,
      [this, from, to, from_node, to_node, return_ms,
       request = std::move(request), timeout_ms,
       on_response = std::move(on_response)]() mutable {
        if (!connected(from_node, to_node)) {
          // Dropped like a black-holed packet: the caller sees a timeout.
          inner_.schedule(std::max<std::int64_t>(0, timeout_ms - forward_ms_of(
                                                         from_node, to_node)),
                          [on_response = std::move(on_response)] {
                            on_response(
                                RpcResult::failure(ErrorCode::Timeout));
                          });
          return;
        }
        inner_.send_request(
            from, to, std::move(request), timeout_ms,
            [this, from_node, to_node, return_ms,
             on_response = std::move(on_response)](RpcResult result) {
              if (return_ms > 0) {
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(return_ms));
              }
              if (!connected(to_node, from_node)) {
                on_response(RpcResult::failure(ErrorCode::Timeout));
                return;
              }
              on_response(std::move(result));
            });
      });
}

std::int64_t ShapedTransport::forward_ms_of(const std::string& from_node,
                                            const std::string& to_node) const {
  return delays_.delay(from_node, to_node);
}

}  // namespace fogconf

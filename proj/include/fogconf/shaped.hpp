#pragma once

#include <map>
#include <mutex>
#include <string>

#include "fogconf/simnet.hpp"
#include "fogconf/transport.hpp"

namespace fogconf {

// Applies a DelayMatrix and PartitionSchedule on top of another transport,
// keyed by logical node ids mapped to transport addresses. Gives real-socket
// runs the same scenario semantics the simulated network has natively:
// one-way delays are slept before delivery, and requests or responses that
// would cross an active partition are dropped so the caller times out.
class ShapedTransport : public Transport {
 public:
  ShapedTransport(Transport& inner, DelayMatrix delays);

  // Maps a logical node id onto the inner transport address it serves.
  void register_endpoint(const std::string& node_id,
                         const std::string& address);

  void apply_partition(const std::vector<std::vector<std::string>>& groups);
  void heal();
  void apply_schedule(const PartitionSchedule& schedule);
  bool connected(const std::string& a, const std::string& b) const;

  void bind(const std::string& address, RequestHandler handler) override;
  void unbind(const std::string& address) override;
  void send_request(const std::string& from, const std::string& to,
                    Bytes request, std::int64_t timeout_ms,
                    ResponseCallback on_response) override;
  std::int64_t now_ms() const override { return inner_.now_ms(); }
  void schedule(std::int64_t delay_ms, std::function<void()> fn) override {
    inner_.schedule(delay_ms, std::move(fn));
  }

 private:
  std::string node_of(const std::string& address) const;
  std::int64_t forward_ms_of(const std::string& from_node,
                             const std::string& to_node) const;

  Transport& inner_;
  DelayMatrix delays_;
  mutable std::mutex mutex_;
  std::map<std::string, std::string> address_to_node_;
  std::map<std::string, int> partition_group_;
  bool partitioned_ = false;
};

}  // namespace fogconf

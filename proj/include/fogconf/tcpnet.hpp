#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <mutex>
#include <queue>
#include <thread>
#include <vector>

#include "fogconf/transport.hpp"

namespace fogconf {

// Plain-socket transport. bind() starts a listener on host:port and serves
// one request/response frame pair per iteration of each connection loop;
// send_request() runs connect/send/receive on a worker thread and invokes
// the callback there. Timers run on a dedicated scheduler thread. No delay
// or partition emulation here; wrap with ShapedTransport for that.
class TcpTransport : public Transport {
 public:
  TcpTransport();
  ~TcpTransport() override;

  TcpTransport(const TcpTransport&) = delete;
  TcpTransport& operator=(const TcpTransport&) = delete;

  void bind(const std::string& address, RequestHandler handler) override;
  void unbind(const std::string& address) override;
  void send_request(const std::string& from, const std::string& to,
                    Bytes request, std::int64_t timeout_ms,
                    ResponseCallback on_response) override;
  std::int64_t now_ms() const override;
  void schedule(std::int64_t delay_ms, std::function<void()> fn) override;

  // Binds on port 0 and returns the concrete "127.0.0.1:port" address.
  std::string bind_ephemeral(RequestHandler handler);

  bool is_bound(const std::string& address) const;

  void stop();

 private:
  struct Listener;

  struct TimerEvent {
    std::int64_t at_ms;
    std::uint64_t seq;
    std::function<void()> fn;
  };
  struct TimerLater {
    bool operator()(const TimerEvent& a, const TimerEvent& b) const {
      if (a.at_ms != b.at_ms) return a.at_ms > b.at_ms;
      return a.seq > b.seq;
    }
  };

  void timer_loop();
  void reap_workers();

  std::chrono::steady_clock::time_point epoch_;
  std::atomic<bool> stopping_{false};

  mutable std::mutex listeners_mutex_;
  std::map<std::string, std::shared_ptr<Listener>> listeners_;

  std::mutex workers_mutex_;
  std::vector<std::thread> workers_;

  std::mutex timer_mutex_;
  std::condition_variable timer_cv_;
  std::priority_queue<TimerEvent, std::vector<TimerEvent>, TimerLater>
      timer_queue_;
  std::uint64_t timer_seq_ = 0;
  std::thread timer_thread_;
};

// Picks a currently free 127.0.0.1 port and returns "127.0.0.1:port".
// Returns an empty string when none is available.
std::string reserve_loopback_address();

}  // namespace fogconf

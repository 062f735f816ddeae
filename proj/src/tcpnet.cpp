#include "fogconf/tcpnet.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <future>

#include "fogconf/api.hpp"

namespace fogconf {

namespace {

struct AddressParts {
  std::string host;
  std::uint16_t port = 0;
};

bool parse_address(const std::string& address, AddressParts* out) {
  auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0) return false;
  out->host = address.substr(0, colon);
  long port = 0;
  for (std::size_t i = colon + 1; i < address.size(); ++i) {
    char c = address[i];
    if (c < '0' || c > '9') return false;
    port = port * 10 + (c - '0');
    if (port > 65535) return false;
  }
  if (port < 0 || (port == 0 && address.substr(colon + 1) != "0")) return false;
  out->port = static_cast<std::uint16_t>(port);
  return true;
}

bool send_all(int fd, const std::uint8_t* data, std::size_t size) {
  std::size_t sent = 0;
  while (sent < size) {
    ssize_t n = ::send(fd, data + sent, size - sent, MSG_NOSIGNAL);
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

bool recv_all(int fd, std::uint8_t* data, std::size_t size) {
  std::size_t got = 0;
  while (got < size) {
    ssize_t n = ::recv(fd, data + got, size - got, 0);
    if (n <= 0) return false;
    got += static_cast<std::size_t>(n);
  }
  return true;
}

void set_socket_timeout(int fd, std::int64_t timeout_ms) {
  timeval tv{};
  tv.tv_sec = timeout_ms / 1000;
  tv.tv_usec = static_cast<suseconds_t>((timeout_ms % 1000) * 1000);
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
}

// Reads one length-prefixed frame; returns false to close the connection.
bool read_frame(int fd, Bytes* frame) {
  std::uint8_t prefix[4];
  if (!recv_all(fd, prefix, 4)) return false;
  auto length = decode_length_prefix(prefix, 4);
  if (!length) return false;
  frame->assign(prefix, prefix + 4);
  frame->resize(4 + length.value());
  if (length.value() > 0 && !recv_all(fd, frame->data() + 4, length.value())) {
    return false;
  }
  return true;
}

}  // namespace

struct TcpTransport::Listener {
  int fd = -1;
  std::thread accept_thread;
  std::atomic<bool> stopping{false};
  RequestHandler handler;
};

TcpTransport::TcpTransport() : epoch_(std::chrono::steady_clock::now()) {
  timer_thread_ = std::thread([this] { timer_loop(); });
}

TcpTransport::~TcpTransport() { stop(); }

std::int64_t TcpTransport::now_ms() const {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now() - epoch_)
      .count();
}

void TcpTransport::schedule(std::int64_t delay_ms, std::function<void()> fn) {
  std::lock_guard<std::mutex> lock(timer_mutex_);
  timer_queue_.push(TimerEvent{now_ms() + delay_ms, timer_seq_++, std::move(fn)});
  timer_cv_.notify_all();
}

void TcpTransport::timer_loop() {
  std::unique_lock<std::mutex> lock(timer_mutex_);
  while (!stopping_) {
    if (timer_queue_.empty()) {
      timer_cv_.wait_for(lock, std::chrono::milliseconds(50));
      continue;
    }
    std::int64_t wait = timer_queue_.top().at_ms - now_ms();
    if (wait > 0) {
      timer_cv_.wait_for(lock, std::chrono::milliseconds(std::min<std::int64_t>(wait, 50)));
      continue;
    }
    TimerEvent event = timer_queue_.top();
    timer_queue_.pop();
    lock.unlock();
    event.fn();
    lock.lock();
  }
}

void TcpTransport::bind(const std::string& address, RequestHandler handler) {
  AddressParts parts;
  if (!parse_address(address, &parts)) return;

  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return;
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(parts.port);
  if (::inet_pton(AF_INET, parts.host.c_str(), &addr.sin_addr) != 1) {
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  }
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(fd, 64) != 0) {
    ::close(fd);
    return;
  }

  auto listener = std::make_shared<Listener>();
  listener->fd = fd;
  listener->handler = std::move(handler);
  listener->accept_thread = std::thread([this, listener] {
    while (!listener->stopping && !stopping_) {
      pollfd pfd{listener->fd, POLLIN, 0};
      int ready = ::poll(&pfd, 1, 100);
      if (ready <= 0) continue;
      int conn = ::accept(listener->fd, nullptr, nullptr);
      if (conn < 0) continue;
      std::lock_guard<std::mutex> lock(workers_mutex_);
      workers_.emplace_back([this, listener, conn] {
        // Mid-frame stalls are bounded by the socket timeout; idle waits by
        // the poll interval, so shutdown stays prompt.
        set_socket_timeout(conn, 5000);
        Bytes frame;
        while (!listener->stopping && !stopping_) {
          pollfd cpfd{conn, POLLIN, 0};
          int cready = ::poll(&cpfd, 1, 100);
          if (cready < 0) break;
          if (cready == 0) continue;
          if (!read_frame(conn, &frame)) break;
          std::promise<Bytes> reply_promise;
          auto reply_future = reply_promise.get_future();
          listener->handler("", frame, [&reply_promise](Bytes reply) {
            reply_promise.set_value(std::move(reply));
          });
          Bytes reply = reply_future.get();
          if (!send_all(conn, reply.data(), reply.size())) break;
        }
        ::close(conn);
      });
    }
  });

  std::lock_guard<std::mutex> lock(listeners_mutex_);
  listeners_[address] = std::move(listener);
}

std::string TcpTransport::bind_ephemeral(RequestHandler handler) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return {};
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = 0;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    return {};
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  std::uint16_t port = ntohs(addr.sin_port);
  ::close(fd);
  std::string address = "127.0.0.1:" + std::to_string(port);
  bind(address, std::move(handler));
  return address;
}

void TcpTransport::unbind(const std::string& address) {
  std::shared_ptr<Listener> listener;
  {
    std::lock_guard<std::mutex> lock(listeners_mutex_);
    auto it = listeners_.find(address);
    if (it == listeners_.end()) return;
    listener = it->second;
    listeners_.erase(it);
  }
  listener->stopping = true;
  ::shutdown(listener->fd, SHUT_RDWR);
  if (listener->accept_thread.joinable()) listener->accept_thread.join();
  ::close(listener->fd);
}

void TcpTransport::send_request(const std::string& from, const std::string& to,
                                Bytes request, std::int64_t timeout_ms,
                                ResponseCallback on_response) {
  (void)from;
  if (stopping_) {
    on_response(RpcResult::failure(ErrorCode::Unreachable));
    return;
  }
  std::lock_guard<std::mutex> lock(workers_mutex_);
  workers_.emplace_back([to, request = std::move(request), timeout_ms,
                         on_response = std::move(on_response)]() mutable {
    AddressParts parts;
    if (!parse_address(to, &parts)) {
      on_response(RpcResult::failure(ErrorCode::Unreachable));
      return;
    }
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) {
      on_response(RpcResult::failure(ErrorCode::Unreachable));
      return;
    }
    set_socket_timeout(fd, timeout_ms);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(parts.port);
    if (::inet_pton(AF_INET, parts.host.c_str(), &addr.sin_addr) != 1) {
      ::close(fd);
      on_response(RpcResult::failure(ErrorCode::Unreachable));
      return;
    }
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      ::close(fd);
      on_response(RpcResult::failure(ErrorCode::Unreachable));
      return;
    }
    bool sent = send_all(fd, request.data(), request.size());
    Bytes reply;
    bool received = sent && read_frame(fd, &reply);
    ::close(fd);
    if (!received) {
      on_response(RpcResult::failure(ErrorCode::Timeout));
      return;
    }
    on_response(RpcResult::success(std::move(reply)));
  });
}

void TcpTransport::reap_workers() {
  std::vector<std::thread> workers;
  {
    std::lock_guard<std::mutex> lock(workers_mutex_);
    workers.swap(workers_);
  }
  for (auto& worker : workers) {
    if (worker.joinable()) worker.join();
  }
}

bool TcpTransport::is_bound(const std::string& address) const {
  std::lock_guard<std::mutex> lock(listeners_mutex_);
  return listeners_.count(address) != 0;
}

std::string reserve_loopback_address() {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return {};
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = 0;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    return {};
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  std::uint16_t port = ntohs(addr.sin_port);
  ::close(fd);
  return "127.0.0.1:" + std::to_string(port);
}

void TcpTransport::stop() {
  bool expected = false;
  if (!stopping_.compare_exchange_strong(expected, true)) return;
  timer_cv_.notify_all();
  if (timer_thread_.joinable()) timer_thread_.join();

  std::vector<std::string> addresses;
  {
    std::lock_guard<std::mutex> lock(listeners_mutex_);
    for (const auto& [address, listener] : listeners_) {
      addresses.push_back(address);
    }
  }
  for (const auto& address : addresses) unbind(address);
  reap_workers();
}

}  // namespace fogconf

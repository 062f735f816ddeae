#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "fogconf/bytes.hpp"
#include "fogconf/result.hpp"

namespace fogconf {

struct RpcResult {
  bool ok = false;
  Bytes response;
  ErrorCode error = ErrorCode::Timeout;

  static RpcResult success(Bytes response) {
    return RpcResult{true, std::move(response), ErrorCode::Internal};
  }
  static RpcResult failure(ErrorCode code) {
    return RpcResult{false, {}, code};
  }
};

// A bound endpoint's request handler. `respond` may be invoked inline or
// later (a coordinator that must fan out before answering); it must be
// invoked exactly once.
using RequestHandler = std::function<void(
    const std::string& from, const Bytes& request,
    std::function<void(Bytes)> respond)>;

using ResponseCallback = std::function<void(RpcResult)>;

// Request/response transport plus the clock and timer the protocols above it
// run on. Addresses are opaque strings: node ids on the simulated network,
// host:port on TCP.
class Transport {
 public:
  virtual ~Transport() = default;

  virtual void bind(const std::string& address, RequestHandler handler) = 0;
  virtual void unbind(const std::string& address) = 0;

  virtual void send_request(const std::string& from, const std::string& to,
                            Bytes request, std::int64_t timeout_ms,
                            ResponseCallback on_response) = 0;

  // Milliseconds of experiment time: virtual time on the simulated network,
  // steady-clock time elsewhere.
  virtual std::int64_t now_ms() const = 0;

  virtual void schedule(std::int64_t delay_ms, std::function<void()> fn) = 0;
};

}  // namespace fogconf

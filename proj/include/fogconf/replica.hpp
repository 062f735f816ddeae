#pragma once

#include <mutex>
#include <utility>

#include "fogconf/registry.hpp"

namespace fogconf {

// Exclusive-access guard around one replica's registry. Mutators and merges
// serialize here; the lock is held only for the local operation, never
// across a network wait.
class SharedRegistry {
 public:
  explicit SharedRegistry(Registry registry) : registry_(std::move(registry)) {}

  template <typename F>
  auto with(F&& f) {
    std::lock_guard<std::mutex> lock(mutex_);
    return f(registry_);
  }

  template <typename F>
  auto with(F&& f) const {
    std::lock_guard<std::mutex> lock(mutex_);
    return f(static_cast<const Registry&>(registry_));
  }

  void replace(Registry registry) {
    std::lock_guard<std::mutex> lock(mutex_);
    registry_ = std::move(registry);
  }

 private:
  mutable std::mutex mutex_;
  Registry registry_;
};

}  // namespace fogconf

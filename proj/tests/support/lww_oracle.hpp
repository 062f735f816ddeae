#pragma once

// Brute-force LWW oracle for tests. Retains the complete add/remove history
// and answers membership by scanning it, independently of the compacted
// representation under test.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fogconf/crdt.hpp"

namespace fogconf::testing {

struct LwwOp {
  enum class Kind { Add, Remove };
  Kind kind;
  std::string id;
  Bytes payload;  // adds only
  Timestamp stamp;
};

class LwwOracle {
 public:
  void apply(const LwwOp& op) { log_.push_back(op); }

  void add(const std::string& id, Bytes payload, const Timestamp& stamp) {
    log_.push_back({LwwOp::Kind::Add, id, std::move(payload), stamp});
  }

  void remove(const std::string& id, const Timestamp& stamp) {
    log_.push_back({LwwOp::Kind::Remove, id, {}, stamp});
  }

  // Union of histories; order is irrelevant to every query below.
  void merge(const LwwOracle& other) {
    log_.insert(log_.end(), other.log_.begin(), other.log_.end());
  }

  bool is_member(const std::string& id) const {
    return lookup(id).has_value();
  }

  std::optional<Bytes> lookup(const std::string& id) const {
    const LwwOp* newest_add = nullptr;
    const Timestamp* newest_remove = nullptr;
    for (const auto& op : log_) {
      if (op.id != id) continue;
      if (op.kind == LwwOp::Kind::Add) {
        if (newest_add == nullptr || op.stamp > newest_add->stamp ||
            (op.stamp == newest_add->stamp &&
             op.payload > newest_add->payload)) {
          newest_add = &op;
        }
      } else {
        if (newest_remove == nullptr || op.stamp > *newest_remove) {
          newest_remove = &op.stamp;
        }
      }
    }
    if (newest_add == nullptr) return std::nullopt;
    if (newest_remove != nullptr && !(newest_add->stamp > *newest_remove)) {
      return std::nullopt;
    }
    return newest_add->payload;
  }

  std::map<std::string, Bytes> members() const {
    std::map<std::string, Bytes> out;
    for (const auto& op : log_) {
      if (auto payload = lookup(op.id)) out[op.id] = *payload;
    }
    return out;
  }

  const std::vector<LwwOp>& log() const { return log_; }

 private:
  std::vector<LwwOp> log_;
};

}  // namespace fogconf::testing

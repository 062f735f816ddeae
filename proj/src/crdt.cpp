#include "fogconf/crdt.hpp"

#include <algorithm>

namespace fogconf {

namespace {

// Ordering used to pick the winning add entry. Stamps are unique by
// construction; the payload comparison only keeps the pick total (and the
// merge commutative) for inputs that violate that.
bool entry_less(const LwwEntry& a, const LwwEntry& b) {
  if (a.stamp != b.stamp) return a.stamp < b.stamp;
  return a.payload < b.payload;
}

}  // namespace

void LwwElementSet::add(const std::string& id, Bytes payload,
                        const Timestamp& stamp) {
  LwwEntry candidate{std::move(payload), stamp};
  auto it = adds_.find(id);
  if (it == adds_.end()) {
    adds_.emplace(id, std::move(candidate));
  } else if (entry_less(it->second, candidate)) {
    it->second = std::move(candidate);
  }
}

void LwwElementSet::remove(const std::string& id, const Timestamp& stamp) {
  auto it = removes_.find(id);
  if (it == removes_.end()) {
    removes_.emplace(id, stamp);
  } else if (it->second < stamp) {
    it->second = stamp;
  }
}

bool LwwElementSet::is_member(const std::string& id) const {
  auto add_it = adds_.find(id);
  if (add_it == adds_.end()) return false;
  auto rem_it = removes_.find(id);
  if (rem_it == removes_.end()) return true;
  return add_it->second.stamp > rem_it->second;
}

std::optional<Bytes> LwwElementSet::lookup(const std::string& id) const {
  if (!is_member(id)) return std::nullopt;
  return adds_.at(id).payload;
}

std::map<std::string, Bytes> LwwElementSet::members() const {
  std::map<std::string, Bytes> out;
  for (const auto& [id, entry] : adds_) {
    if (is_member(id)) out.emplace(id, entry.payload);
  }
  return out;
}

std::size_t LwwElementSet::live_count() const {
  std::size_t n = 0;
  for (const auto& [id, entry] : adds_) {
    if (is_member(id)) ++n;
  }
  return n;
}

void LwwElementSet::merge(const LwwElementSet& other) {
  for (const auto& [id, entry] : other.adds_) {
    add(id, entry.payload, entry.stamp);
  }
  for (const auto& [id, stamp] : other.removes_) {
    remove(id, stamp);
  }
}

LwwElementSet LwwElementSet::merged(const LwwElementSet& a,
                                    const LwwElementSet& b) {
  LwwElementSet out = a;
  out.merge(b);
  return out;
}

Timestamp ReplicaClock::next(std::int64_t now_ms) {
  std::int64_t t = std::max(now_ms, last_time_ms_);
  if (t == last_time_ms_) {
    ++last_seq_;
  } else {
    last_time_ms_ = t;
    last_seq_ = 0;
  }
  return Timestamp{last_time_ms_, last_seq_, replica_id_};
}

void ReplicaClock::observe(const Timestamp& seen) {
  if (seen.time_ms > last_time_ms_) {
    last_time_ms_ = seen.time_ms;
    last_seq_ = seen.seq;
  } else if (seen.time_ms == last_time_ms_ && seen.seq > last_seq_) {
    last_seq_ = seen.seq;
  }
}

}  // namespace fogconf

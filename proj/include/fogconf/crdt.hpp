#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "fogconf/bytes.hpp"

namespace fogconf {

// Totally ordered write stamp: (time_ms, seq, replica_id), compared
// lexicographically. seq disambiguates writes within one millisecond,
// replica_id makes stamps from different replicas unequal.
struct Timestamp {
  std::int64_t time_ms = 0;
  std::int64_t seq = 0;
  std::string replica_id;

  auto operator<=>(const Timestamp&) const = default;
};

struct LwwEntry {
  Bytes payload;
  Timestamp stamp;

  bool operator==(const LwwEntry&) const = default;
};

// Last-write-wins element set. Keeps only the newest add entry and the
// newest remove stamp per element; older entries for the same id are
// absorbed on insert and on merge, which is observationally equivalent to
// keeping the full add/remove histories. Tombstones are never dropped.
class LwwElementSet {
 public:
  // Keeps the entry with the greater (stamp, payload) among the existing
  // add entry and the new one. Payload participates only as a determinism
  // tie-break for the degenerate case of equal stamps.
  void add(const std::string& id, Bytes payload, const Timestamp& stamp);

  // Keeps the greater of the existing remove stamp and `stamp`. The add
  // entry is untouched: removal is a tombstone, not a deletion.
  void remove(const std::string& id, const Timestamp& stamp);

  // id is a member iff it has an add entry and either no remove stamp or
  // the add stamp is strictly newer than the remove stamp.
  bool is_member(const std::string& id) const;

  // Payload of the add entry iff the membership rule holds.
  std::optional<Bytes> lookup(const std::string& id) const;

  // All live ids with their payloads, bytewise-ordered by id.
  std::map<std::string, Bytes> members() const;

  std::size_t live_count() const;

  // Lattice join: per id, max-stamp add entry and max remove stamp across
  // both inputs. Commutative, associative, idempotent.
  void merge(const LwwElementSet& other);
  static LwwElementSet merged(const LwwElementSet& a, const LwwElementSet& b);

  const std::map<std::string, LwwEntry>& adds() const { return adds_; }
  const std::map<std::string, Timestamp>& removes() const { return removes_; }

  bool operator==(const LwwElementSet&) const = default;

 private:
  std::map<std::string, LwwEntry> adds_;
  std::map<std::string, Timestamp> removes_;
};

// Issues strictly increasing stamps for one replica even if the underlying
// clock stalls or runs backward. observe() is the receive rule: it advances
// the clock past any remote stamp already merged into local state, so new
// local writes cannot be shadowed by stamps this replica has already seen.
class ReplicaClock {
 public:
  explicit ReplicaClock(std::string replica_id)
      : replica_id_(std::move(replica_id)) {}
  ReplicaClock(std::string replica_id, std::int64_t last_time_ms,
               std::int64_t last_seq)
      : replica_id_(std::move(replica_id)),
        last_time_ms_(last_time_ms),
        last_seq_(last_seq) {}

  Timestamp next(std::int64_t now_ms);
  void observe(const Timestamp& seen);

  const std::string& replica_id() const { return replica_id_; }
  std::int64_t last_time_ms() const { return last_time_ms_; }
  std::int64_t last_seq() const { return last_seq_; }

 private:
  std::string replica_id_;
  std::int64_t last_time_ms_ = -1;
  std::int64_t last_seq_ = -1;
};

}  // namespace fogconf

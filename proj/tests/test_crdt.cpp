#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "fogconf/crdt.hpp"
#include "support/lww_oracle.hpp"

using namespace fogconf;
using fogconf::testing::LwwOp;
using fogconf::testing::LwwOracle;

namespace {

Timestamp ts(std::int64_t time_ms, std::int64_t seq, std::string replica) {
  return Timestamp{time_ms, seq, std::move(replica)};
}

Bytes payload(const std::string& s) { return to_bytes(s); }

// Random op-log generator shared by the property tests below.
std::vector<LwwOp> random_ops(std::mt19937_64& rng, int max_ops,
                              int id_space, int replicas) {
  std::uniform_int_distribution<int> n_ops(0, max_ops);
  std::uniform_int_distribution<int> id_pick(0, id_space - 1);
  std::uniform_int_distribution<int> replica_pick(0, replicas - 1);
  std::uniform_int_distribution<std::int64_t> time_pick(0, 40);
  std::uniform_int_distribution<int> kind_pick(0, 2);

  // Per-replica clocks guarantee the unique-timestamp invariant that real
  // replicas provide.
  std::vector<ReplicaClock> clocks;
  for (int r = 0; r < replicas; ++r) {
    clocks.emplace_back(std::string(1, static_cast<char>('A' + r)));
  }

  std::vector<LwwOp> ops;
  const int count = n_ops(rng);
  for (int i = 0; i < count; ++i) {
    int r = replica_pick(rng);
    Timestamp stamp = clocks[static_cast<std::size_t>(r)].next(time_pick(rng));
    std::string id = "e" + std::to_string(id_pick(rng));
    if (kind_pick(rng) < 2) {
      ops.push_back({LwwOp::Kind::Add, id,
                     payload(id + "@" + stamp.replica_id + ":" +
                             std::to_string(stamp.time_ms) + "." +
                             std::to_string(stamp.seq)),
                     stamp});
    } else {
      ops.push_back({LwwOp::Kind::Remove, id, {}, stamp});
    }
  }
  return ops;
}

LwwElementSet build_set(const std::vector<LwwOp>& ops) {
  LwwElementSet set;
  for (const auto& op : ops) {
    if (op.kind == LwwOp::Kind::Add) {
      set.add(op.id, op.payload, op.stamp);
    } else {
      set.remove(op.id, op.stamp);
    }
  }
  return set;
}

LwwOracle build_oracle(const std::vector<LwwOp>& ops) {
  LwwOracle oracle;
  for (const auto& op : ops) oracle.apply(op);
  return oracle;
}

bool same_membership(const LwwElementSet& set, const LwwOracle& oracle,
                     int id_space) {
  if (set.members() != oracle.members()) return false;
  for (int i = 0; i < id_space; ++i) {
    std::string id = "e" + std::to_string(i);
    if (set.lookup(id) != oracle.lookup(id)) return false;
    if (set.is_member(id) != oracle.is_member(id)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("clock stamps under stalled, advancing and backwards input") {
  ReplicaClock clock("A", 10, 3);

  SUBCASE("stalled clock bumps seq") {
    CHECK(clock.next(10) == ts(10, 4, "A"));
  }
  SUBCASE("advancing clock resets seq") {
    CHECK(clock.next(25) == ts(25, 0, "A"));
  }
  SUBCASE("backwards wall clock is clamped") {
    CHECK(clock.next(7) == ts(10, 4, "A"));
  }
}

TEST_CASE("clock is strictly increasing under adversarial inputs") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::int64_t> jump(-50, 50);
  ReplicaClock clock("A");
  std::int64_t now = 100;
  Timestamp prev = clock.next(now);
  for (int i = 0; i < 10000; ++i) {
    now += jump(rng);
    Timestamp cur = clock.next(now);
    REQUIRE(cur > prev);
    prev = cur;
  }
}

TEST_CASE("clock observe keeps local writes ahead of merged stamps") {
  ReplicaClock clock("A", 10, 3);
  clock.observe(ts(30, 5, "B"));
  CHECK(clock.next(12) > ts(30, 5, "B"));
  // Observing something older changes nothing.
  ReplicaClock clock2("A", 10, 3);
  clock2.observe(ts(4, 9, "B"));
  CHECK(clock2.next(10) == ts(10, 4, "A"));
}

TEST_CASE("add keeps the max-stamp entry") {
  LwwElementSet set;
  set.add("kg1", payload("p"), ts(5, 0, "A"));
  CHECK(set.lookup("kg1") == payload("p"));

  set.add("kg1", payload("q"), ts(9, 0, "B"));
  CHECK(set.lookup("kg1") == payload("q"));

  // Stale add is absorbed.
  set.add("kg1", payload("p"), ts(5, 0, "A"));
  CHECK(set.lookup("kg1") == payload("q"));
  CHECK(set.adds().at("kg1").stamp == ts(9, 0, "B"));
}

TEST_CASE("remove tombstones without deleting the add record") {
  LwwElementSet set;
  set.add("kg1", payload("p"), ts(5, 0, "A"));
  set.remove("kg1", ts(8, 0, "A"));
  CHECK(!set.is_member("kg1"));
  CHECK(set.adds().count("kg1") == 1);

  SUBCASE("remove before any add leaves a non-member") {
    LwwElementSet empty;
    empty.remove("kg1", ts(8, 0, "A"));
    CHECK(!empty.is_member("kg1"));
    CHECK(empty.removes().at("kg1") == ts(8, 0, "A"));
  }

  SUBCASE("a newer re-add revives the element") {
    set.add("kg1", payload("r"), ts(9, 0, "B"));
    CHECK(set.lookup("kg1") == payload("r"));
  }
}

TEST_CASE("membership rule covers the three cases") {
  LwwElementSet add_only;
  add_only.add("x", payload("p"), ts(5, 0, "A"));
  CHECK(add_only.lookup("x") == payload("p"));

  LwwElementSet removed_newer;
  removed_newer.add("x", payload("p"), ts(5, 0, "A"));
  removed_newer.remove("x", ts(8, 0, "A"));
  CHECK(removed_newer.lookup("x") == std::nullopt);

  LwwElementSet added_newer;
  added_newer.add("x", payload("p"), ts(9, 0, "B"));
  added_newer.remove("x", ts(8, 0, "A"));
  CHECK(added_newer.lookup("x") == payload("p"));
}

TEST_CASE("members lists exactly the live ids") {
  LwwElementSet set;
  CHECK(set.members().empty());

  set.add("a", payload("1"), ts(1, 0, "A"));
  set.add("b", payload("2"), ts(2, 0, "A"));
  set.add("c", payload("3"), ts(3, 0, "A"));
  set.remove("b", ts(4, 0, "A"));
  auto members = set.members();
  CHECK(members.size() == 2);
  CHECK(members.count("a") == 1);
  CHECK(members.count("c") == 1);
  CHECK(set.live_count() == 2);
}

TEST_CASE("merge identities") {
  std::mt19937_64 rng(11);
  auto ops = random_ops(rng, 20, 6, 3);
  LwwElementSet set = build_set(ops);

  CHECK(LwwElementSet::merged(set, set) == set);
  CHECK(LwwElementSet::merged(set, LwwElementSet{}) == set);
  CHECK(LwwElementSet::merged(LwwElementSet{}, set) == set);
}

TEST_CASE("merge matches replay over all interleavings of small op sets") {
  // Brute force: for every split of <=6 ops across two replicas and every
  // delivery order, merged membership equals the oracle over the full log.
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    auto ops = random_ops(rng, 6, 3, 2);
    std::vector<std::size_t> order(ops.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::uniform_int_distribution<int> split_pick(
        0, static_cast<int>(ops.size()));
    std::size_t split = static_cast<std::size_t>(split_pick(rng));
    auto expected = build_oracle(ops).members();

    do {
      LwwElementSet a, b;
      for (std::size_t pos = 0; pos < order.size(); ++pos) {
        const auto& op = ops[order[pos]];
        LwwElementSet& target = pos < split ? a : b;
        if (op.kind == LwwOp::Kind::Add) {
          target.add(op.id, op.payload, op.stamp);
        } else {
          target.remove(op.id, op.stamp);
        }
      }
      LwwElementSet ab = LwwElementSet::merged(a, b);
      LwwElementSet ba = LwwElementSet::merged(b, a);
      REQUIRE(ab == ba);
      REQUIRE(ab.members() == expected);
    } while (std::next_permutation(order.begin(), order.end()));
  }
}

TEST_CASE("merge is commutative, associative, idempotent") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 2000; ++trial) {
    LwwElementSet a = build_set(random_ops(rng, 12, 5, 3));
    LwwElementSet b = build_set(random_ops(rng, 12, 5, 3));
    LwwElementSet c = build_set(random_ops(rng, 12, 5, 3));

    REQUIRE(LwwElementSet::merged(a, b) == LwwElementSet::merged(b, a));
    REQUIRE(LwwElementSet::merged(LwwElementSet::merged(a, b), c) ==
            LwwElementSet::merged(a, LwwElementSet::merged(b, c)));
    REQUIRE(LwwElementSet::merged(a, a) == a);
  }
}

TEST_CASE("add and remove are inflationary") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 500; ++trial) {
    auto ops = random_ops(rng, 15, 5, 3);
    LwwElementSet before = build_set(ops);
    LwwElementSet after = before;
    auto extra = random_ops(rng, 3, 5, 3);
    for (const auto& op : extra) {
      if (op.kind == LwwOp::Kind::Add) {
        after.add(op.id, op.payload, op.stamp);
      } else {
        after.remove(op.id, op.stamp);
      }
      REQUIRE(LwwElementSet::merged(before, after) == after);
    }
  }
}

TEST_CASE("strong eventual consistency across replicas and orders") {
  // N replicas each apply a per-replica interleaving of the same multiset of
  // ops, then pairwise-merge to fixpoint; all must agree with the oracle.
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    auto ops = random_ops(rng, 30, 8, 4);
    std::uniform_int_distribution<int> n_replicas(3, 5);
    int n = n_replicas(rng);

    std::vector<LwwElementSet> replicas(static_cast<std::size_t>(n));
    for (auto& replica : replicas) {
      auto order = ops;
      std::shuffle(order.begin(), order.end(), rng);
      replica = build_set(order);
    }

    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t i = 0; i < replicas.size(); ++i) {
        for (std::size_t j = 0; j < replicas.size(); ++j) {
          if (i == j) continue;
          LwwElementSet merged = LwwElementSet::merged(replicas[i], replicas[j]);
          if (!(merged == replicas[i])) {
            replicas[i] = merged;
            changed = true;
          }
        }
      }
    }

    LwwOracle oracle = build_oracle(ops);
    for (const auto& replica : replicas) {
      REQUIRE(replica == replicas[0]);
      REQUIRE(same_membership(replica, oracle, 8));
    }
  }
}

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fogconf/gossip.hpp"
#include "fogconf/result.hpp"
#include "fogconf/simnet.hpp"
#include "fogconf/wire.hpp"

namespace fogconf {

enum class Backend { Crdt, Quorum };
enum class TimeMode { Virtual, Real };

struct DelayEntry {
  std::string from;
  std::string to;
  std::int64_t delay_ms = 0;

  bool operator==(const DelayEntry&) const = default;
};

struct Workload {
  std::vector<std::string> ops = {"CreateKeygroup"};  // cycled in order
  std::int64_t interarrival_ms = 250;
  std::int64_t duration_ms = 120000;
};

// Declarative experiment description; canonical JSON form is the scenario
// file format. The first node is the one the load generator drives.
struct Scenario {
  std::string name = "custom";
  Backend backend = Backend::Crdt;
  std::vector<std::string> nodes;
  std::int64_t default_delay_ms = 0;
  std::vector<DelayEntry> delays;
  PartitionSchedule partition_schedule;
  Workload workload;
  GossipConfig gossip;
  std::int64_t quorum_retry_backoff_ms = 5000;
  std::uint64_t seed = 0;
  TimeMode time_mode = TimeMode::Virtual;
  std::int64_t sample_period_ms = 500;
};

struct LatencySample {
  std::int64_t t_ms = 0;  // request start, experiment time
  std::string op;
  double latency_ms = 0;  // elapsed until completion, failed or not
  bool ok = false;
  std::string error_code;  // non-empty iff !ok
};

struct ConvergenceSample {
  std::int64_t t_ms = 0;
  std::string replica_id;
  std::int64_t keygroup_count = 0;
};

struct RunResult {
  std::string latency_csv;
  std::string convergence_csv;
  std::vector<LatencySample> latency;
  std::vector<ConvergenceSample> convergence;
};

// Scenario file round-trip (canonical records).
Json scenario_to_json(const Scenario& scenario);
Result<Scenario> scenario_from_json(const Json& j);

// ScenarioInvalid on any violated invariant.
Status validate_scenario(const Scenario& scenario);

// The three canonical experiments: baseline (no delays), delay10 (10 ms on
// every inter-machine link) and partition (cut {m1} from {m2,m3} at 45 s,
// heal at 80 s). Three machines, create-only workload.
std::map<std::string, Scenario> builtin_scenarios();

// Runs the scenario on the transport its time_mode selects and returns the
// two CSVs. paper_zeros renders failed requests as 0 ms in the latency CSV
// for figure parity with plots that draw failures at zero.
Result<RunResult> run_scenario(const Scenario& scenario,
                               bool paper_zeros = false);

// Writes latency.csv and convergence.csv under out_dir.
Status write_run_result(const RunResult& result, const std::string& out_dir);

std::string latency_csv_header();
std::string convergence_csv_header();

// Count, error count, nearest-rank percentiles over Ok samples, and per-10s
// buckets. MalformedCsv (BadRequest) if the text does not parse.
Result<Json> summarize_latency_csv(const std::string& csv_text);

const char* to_string(Backend backend);
const char* to_string(TimeMode mode);

}  // namespace fogconf

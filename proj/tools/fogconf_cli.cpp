#include <csignal>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "fogconf/bench.hpp"
#include "fogconf/node.hpp"
#include "fogconf/tcpnet.hpp"

namespace {

volatile std::sig_atomic_t g_stop_requested = 0;

void handle_signal(int) { g_stop_requested = 1; }

int run_command(const std::string& scenario_arg, const std::string& backend,
                std::uint64_t seed, bool seed_given, const std::string& out_dir,
                const std::string& time_mode, bool paper_zeros) {
  fogconf::Scenario scenario;
  auto builtins = fogconf::builtin_scenarios();
  auto it = builtins.find(scenario_arg);
  if (it != builtins.end()) {
    scenario = it->second;
  } else {
    std::ifstream in(scenario_arg, std::ios::binary);
    if (!in) {
      std::cerr << "invalid scenario: no builtin or file named '"
                << scenario_arg << "'\n";
      return 2;
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    auto parsed = fogconf::parse_json(buffer.str());
    if (!parsed) {
      std::cerr << "invalid scenario: " << parsed.error().message << "\n";
      return 2;
    }
    auto loaded = fogconf::scenario_from_json(parsed.value());
    if (!loaded) {
      std::cerr << "invalid scenario: " << loaded.error().message << "\n";
      return 2;
    }
    scenario = loaded.take();
  }

  if (!backend.empty()) {
    if (backend == "crdt") {
      scenario.backend = fogconf::Backend::Crdt;
    } else if (backend == "quorum") {
      scenario.backend = fogconf::Backend::Quorum;
    } else {
      std::cerr << "invalid scenario: unknown backend '" << backend << "'\n";
      return 2;
    }
  }
  if (seed_given) scenario.seed = seed;
  if (!time_mode.empty()) {
    if (time_mode == "virtual") {
      scenario.time_mode = fogconf::TimeMode::Virtual;
    } else if (time_mode == "real") {
      scenario.time_mode = fogconf::TimeMode::Real;
    } else {
      std::cerr << "invalid scenario: unknown time mode '" << time_mode
                << "'\n";
      return 2;
    }
  }

  fogconf::Status valid = fogconf::validate_scenario(scenario);
  if (!valid.ok()) {
    std::cerr << valid.error().message << "\n";
    return 2;
  }

  auto result = fogconf::run_scenario(scenario, paper_zeros);
  if (!result) {
    std::cerr << result.error().message << "\n";
    return 3;
  }
  fogconf::Status written = fogconf::write_run_result(result.value(), out_dir);
  if (!written.ok()) {
    std::cerr << written.error().message << "\n";
    return 3;
  }
  std::cout << "scenario " << scenario.name << " (" << to_string(scenario.backend)
            << ", " << to_string(scenario.time_mode) << ") -> " << out_dir
            << "/latency.csv, " << out_dir << "/convergence.csv\n";
  return 0;
}

int summarize_command(const std::string& in_path) {
  std::ifstream in(in_path, std::ios::binary);
  if (!in) {
    std::cerr << "cannot open " << in_path << "\n";
    return 2;
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto summary = fogconf::summarize_latency_csv(buffer.str());
  if (!summary) {
    std::cerr << summary.error().message << "\n";
    return 2;
  }
  std::cout << fogconf::canonical_dump(summary.value()) << "\n";
  return 0;
}

int serve_command(const std::string& node_id, const std::string& listen,
                  const std::string& seed_peer, const std::string& snapshot,
                  std::int64_t period_ms) {
  fogconf::TcpTransport transport;
  std::random_device rd;
  std::mt19937_64 rng((static_cast<std::uint64_t>(rd()) << 32) ^ rd());

  fogconf::NodeOptions options;
  options.node_id = node_id;
  options.address = listen;
  options.gossip.period_ms = period_ms;
  options.gossip.rpc_timeout_ms = std::min<std::int64_t>(500, period_ms / 2);
  if (!seed_peer.empty()) options.seed_address = seed_peer;
  if (!snapshot.empty()) options.snapshot_path = snapshot;

  fogconf::Node node(transport, options, rng);
  fogconf::Status boot = fogconf::Status::ok_status();
  bool ready = false;
  node.start([&](fogconf::Status status) {
    boot = status;
    ready = true;
  });
  while (!ready) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  if (!boot.ok()) {
    std::cerr << "boot failed: " << boot.error().message << "\n";
    return 3;
  }
  if (!transport.is_bound(listen)) {
    std::cerr << "boot failed: cannot listen on " << listen << "\n";
    return 3;
  }
  std::cerr << "serving " << node_id << " on " << listen
            << (seed_peer.empty() ? "" : " (seed " + seed_peer + ")") << "\n";

  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  while (!g_stop_requested) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  if (!snapshot.empty()) {
    fogconf::Status saved = node.save_snapshot();
    if (!saved.ok()) {
      std::cerr << "snapshot failed: " << saved.error().message << "\n";
    }
  }
  node.stop();
  transport.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Eventually consistent naming service: experiment runner and daemon"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a scenario and write CSV results");
  std::string scenario_arg;
  std::string backend;
  std::uint64_t seed = 0;
  std::string out_dir = "results";
  std::string time_mode;
  bool paper_zeros = false;
  run->add_option("--scenario", scenario_arg,
                  "Builtin name (baseline|delay10|partition) or scenario file")
      ->required();
  run->add_option("--backend", backend, "Override backend: crdt|quorum");
  auto* seed_opt = run->add_option("--seed", seed, "RNG seed");
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--time", time_mode, "Override time mode: virtual|real");
  run->add_flag("--paper-zeros", paper_zeros,
                "Render failed requests as 0 ms in latency.csv");

  auto* summarize = app.add_subcommand("summarize", "Summarize a latency CSV");
  std::string in_path;
  summarize->add_option("--in", in_path, "latency.csv path")->required();

  auto* serve = app.add_subcommand("serve", "Run one replica on TCP");
  std::string node_id = "node1";
  std::string listen = "127.0.0.1:7460";
  std::string seed_peer;
  std::string snapshot;
  std::int64_t period_ms = 1000;
  serve->add_option("--node-id", node_id, "Replica identifier");
  serve->add_option("--listen", listen, "host:port to listen on");
  serve->add_option("--seed-peer", seed_peer, "Address of an existing replica");
  serve->add_option("--snapshot", snapshot, "State snapshot file");
  serve->add_option("--period-ms", period_ms, "Gossip period");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    return run_command(scenario_arg, backend, seed, seed_opt->count() > 0,
                       out_dir, time_mode, paper_zeros);
  }
  if (summarize->parsed()) {
    return summarize_command(in_path);
  }
  return serve_command(node_id, listen, seed_peer, snapshot, period_ms);
}

#pragma once

#include "apdp/tournament.hpp"

namespace apdp {

// One run's worth of settings, shared by the CLI subcommands. Everything
// has a sensible default; a JSON config document and command-line flags
// both override it.
struct RunConfig {
  std::vector<std::string> topologies;  // names or paths; match mode uses the first
  std::uint64_t seed = 1;
  int seeds_per_topology = 3;
  int n_tasks = 50;
  double w_min = 3.0;
  double w_max = 30.0;
  std::int64_t t_bid_ms = 5000;
  std::int64_t t_plan_ms = 30000;
  std::uint64_t plan_iterations = 20000;
  int max_overruns = 3;
  std::vector<std::string> roster;
  std::vector<Company> companies;  // empty: derived from the topology
  bool fleets_visible = false;
  std::string out_dir;
};

// Strict loader: unknown fields are errors, format_version is required.
RunConfig config_from_json(const nlohmann::json& doc);
RunConfig load_config_file(const std::string& path);
nlohmann::json config_to_json(const RunConfig& cfg);

// Two-vehicle fleets with staggered homes and slightly asymmetric per-km
// costs, so the companies genuinely differ and the swap repair matters.
std::vector<Company> default_companies(const Topology& topo, int n_companies);

// Materializes the per-match slice of a run config against a loaded
// topology, deriving fleets when none were configured.
MatchConfig make_match_config(const RunConfig& cfg, const Topology& topo);

// Turns a roster entry into an agent factory: either a built-in agent name
// or "external:<command>" for a subprocess speaking the wire protocol.
AgentFactory make_factory(const std::string& roster_entry);

}  // namespace apdp

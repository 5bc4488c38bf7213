#pragma once

#include <array>
#include <functional>

#include "apdp/auction.hpp"

namespace apdp {

// Builds a fresh agent for one match; agents are never reused across
// matches.
struct AgentFactory {
  std::string name;
  std::function<std::unique_ptr<Agent>()> make;
};

AgentFactory builtin_factory(const std::string& name);

// Everything one match needs besides the agents. Companies are listed by
// company index; the seat-to-company assignment is the swap dimension.
struct MatchConfig {
  const Topology* topo = nullptr;
  int n_tasks = 50;
  double w_min = 3.0;
  double w_max = 30.0;
  std::int64_t t_bid_ms = 5000;
  std::int64_t t_plan_ms = 30000;
  std::uint64_t plan_iterations = 20000;
  int max_overruns = 3;
  std::vector<Company> companies;
  bool fleets_visible = false;
};

enum class ForfeitCause { None, Crash, Timeout, InvalidPlan };
std::string to_string(ForfeitCause cause);

struct MatchAgentOutcome {
  std::string name;
  int company = -1;  // company index this seat controlled
  double revenue = 0.0;
  double plan_cost = 0.0;
  double profit = 0.0;
  int tasks_won = 0;
  ForfeitCause forfeit = ForfeitCause::None;
};

struct MatchResult {
  std::uint64_t seed = 0;  // the pair seed; both swaps share it
  int swap = 0;
  std::string topology;
  std::vector<MatchAgentOutcome> agents;  // by seat
  int winner = -1;                        // seat index; -1 when all forfeit
  bool forfeit_decided = false;
  AuctionLedger ledger;  // kept in memory for replay checks and logging
};

// Seat i plays company `assignment[i]`. Derives every stream from `seed`:
// the task stream and tie coin are seat-independent, and each seat's agent
// stream is keyed by the company it controls — swapping assignments
// replays the mirror image of the same match. Any crash, deadline overrun,
// or invalid final plan forfeits that seat to the opponent; profit is
// revenue minus valid-plan cost.
MatchResult run_match(std::span<const AgentFactory> seats,
                      std::span<const int> assignment, const MatchConfig& cfg,
                      std::uint64_t seed, int swap);

// The two matches of one pairing: identical seed, swapped companies, so
// the company asymmetry is the only difference between them.
std::array<MatchResult, 2> run_pair(const AgentFactory& a, const AgentFactory& b,
                                    const MatchConfig& cfg, std::uint64_t seed);

struct TournamentTable {
  std::vector<std::string> agents;
  std::vector<int> wins;
  std::vector<int> losses;
};

struct TournamentResult {
  TournamentTable table;
  std::vector<MatchResult> matches;
};

// Double all-play-all: every unordered roster pair plays run_pair, so n
// agents produce n(n-1) matches, 2(n-1) per agent. A match without a
// winner (all seats forfeited) counts as a loss for both.
TournamentResult run_tournament(std::span<const AgentFactory> roster,
                                const MatchConfig& cfg, std::uint64_t seed);

struct AggregateRow {
  std::string agent;
  int tournaments = 0;
  double mean_wins = 0.0;
  double sd_wins = 0.0;  // population standard deviation over tournaments
  long total_wins = 0;
  long total_losses = 0;
  double win_rate = 0.0;
};

// Per-agent summary across tournaments, sorted by descending win rate
// (ties by name). All tables must list the same roster.
std::vector<AggregateRow> aggregate(std::span<const TournamentTable> tables);

}  // namespace apdp

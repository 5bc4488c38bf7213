#pragma once

#include "apdp/agents.hpp"

namespace apdp {

// Authoritative record of one auction: every round's observation plus the
// derived per-agent accounts. Revenue accumulates in round order — tasks
// are auctioned in ascending id order, so this is also the fixed
// task-id summation order that profit comparisons rely on.
struct AuctionLedger {
  std::vector<AuctionObservation> rounds;
  std::vector<double> revenue;
  std::vector<std::vector<Task>> won;
};

// Participation state the engine tracks per agent. An agent that crashes
// or exhausts its overrun allowance stops being consulted: it abstains
// from the remaining rounds and receives no further observations.
struct AgentStatus {
  bool crashed = false;
  int overruns = 0;
  bool timed_out = false;

  bool participating() const { return !crashed && !timed_out; }
};

struct AuctionConfig {
  std::int64_t t_bid_ms = 5000;
  // A bid arriving after t_bid is discarded as an abstention; more than
  // this many such overruns forfeits the agent.
  int max_overruns = 3;
};

// One sealed-bid round: collects every participating agent's bid under the
// deadline, picks the lowest (seeded uniform choice among exact ties), and
// charges the winner its own bid. The observation is built before anyone
// hears the outcome; callers broadcast it afterwards. The coin stream is
// consumed only when a tie actually occurs.
AuctionObservation run_auction_round(const Task& task, int round,
                                     std::span<Agent* const> agents,
                                     std::span<AgentStatus> status,
                                     const AuctionConfig& cfg, RngStream& coin);

// Auctions the tasks one by one in order, broadcasting each round's
// observation to every live agent strictly before the next round starts.
// Agents are never told how many tasks remain. `status` is caller-owned so
// agents already forfeited (e.g. during setup) sit the auction out; it is
// updated in place as the auction runs.
AuctionLedger run_auction(std::span<const Task> tasks,
                          std::span<Agent* const> agents,
                          std::span<AgentStatus> status,
                          const AuctionConfig& cfg, RngStream& coin);

}  // namespace apdp

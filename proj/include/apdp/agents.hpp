#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apdp/planning.hpp"

namespace apdp {

// Everything an agent may know at match start. Deliberately excludes the
// number of tasks that will be auctioned — participants must not see it.
struct AgentContext {
  const Topology* topo = nullptr;
  const TaskDistribution* dist = nullptr;
  int self_id = 0;
  Company own;
  // Vehicle counts per agent id (own included). Full opponent fleet specs
  // are withheld unless the match is configured to reveal them.
  std::vector<int> fleet_sizes;
  std::vector<Company> fleets;  // populated only when fleets_visible
  bool fleets_visible = false;
  std::int64_t t_bid_ms = 5000;
  std::int64_t t_plan_ms = 30000;
  std::uint64_t rng_seed = 0;
  // Deterministic iteration budget for final planning; the wall clock is
  // only a backstop.
  std::uint64_t plan_iterations = 20000;
};

// One auction round as every participant sees it after the winner is
// determined. Bids are indexed by agent id; nullopt is an open abstention.
struct AuctionObservation {
  Task task;
  int round = 0;  // 0-based
  std::vector<std::optional<double>> bids;
  int winner = -1;  // -1: every agent abstained, task discarded
  double price = 0.0;
};

nlohmann::json observation_to_json(const AuctionObservation& obs);
AuctionObservation observation_from_json(const nlohmann::json& doc);

// Match lifecycle contract. The engine calls setup once, then alternates
// ask_bid/observe for each auctioned task, then final_plan once. Throwing
// from any method counts as a crash; exceeding the configured deadline
// counts as an overrun. Implementations are single-match, single-threaded.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string name() const = 0;
  virtual void setup(const AgentContext& ctx) = 0;
  // A finite non-negative bid, or nullopt to abstain.
  virtual std::optional<double> ask_bid(const Task& task) = 0;
  virtual void observe(const AuctionObservation& obs) = 0;
  // Must cover exactly `won`. The deadline carries the engine's iteration
  // budget so anytime planners stay deterministic.
  virtual Plan final_plan(std::span<const Task> won, const Deadline& deadline) = 0;
};

// The opponent's estimated position: a stand-in fleet built from our own
// vehicle specs (their true specs are hidden; only the vehicle count is
// public), carrying every task they have won, replanned by cheapest
// insertion after each of their wins.
struct ShadowFleet {
  Company fleet;
  std::vector<Task> won;
  Plan plan;

  // Marginal cost of the task for this stand-in, nullopt when it fits
  // nowhere.
  std::optional<double> marginal(const Task& task, const Topology& topo) const;
  // Record a win by this opponent. Tasks the stand-in cannot fit are
  // dropped from tracking rather than corrupting the plan.
  void record_win(const Task& task, const Topology& topo);
};

ShadowFleet make_shadow(const Company& own, int opponent_vehicles);

// Factory for every agent shipped with the engine.
//
// Bidding strategies:
//   naive            single vehicle, bids direct service distance at cost
//                    plus up to 5% noise, serves tasks one after another
//   expcost-fixed    bids one constant: the mean marginal cost of ten
//                    synthetic tasks inserted into its empty fleet
//   honest           bids its exact marginal insertion cost
//   model-opponent   bids max(own marginal, opponent stand-in's marginal)
//   risk-seeking     like model-opponent but blends both marginals with the
//                    expected-cost prior, weight decaying as gamma^round
//
// Planner showcases:
//   reactive         city-hopping policy from value iteration gates which
//                    tasks it bids on; serves sequentially
//   deliberative     bids marginal cost; final plan via exact per-vehicle
//                    search when small enough, local search otherwise
//   centralized      bids marginal cost against a plan it periodically
//                    re-optimizes from scratch mid-match
//
// Diagnostics:
//   abstain          never bids, returns an empty plan
//   slowpoke         never bids, oversleeps the planning deadline
//   crasher          throws on the third bid request
//   bad-planner      bids like honest but omits a won task from its plan
std::unique_ptr<Agent> make_builtin_agent(const std::string& name);

std::vector<std::string> builtin_agent_names();

}  // namespace apdp

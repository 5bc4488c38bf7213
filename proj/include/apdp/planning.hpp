#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "apdp/model.hpp"

namespace apdp {

// Budget for anytime algorithms. The iteration cap is the deterministic
// stopping rule — two runs with the same seed and cap return bit-identical
// plans. The wall clock is a backstop so a match never hangs; configured
// budgets are sized to finish well inside it.
struct Deadline {
  std::chrono::steady_clock::time_point wall =
      std::chrono::steady_clock::time_point::max();
  std::uint64_t max_iterations = UINT64_MAX;

  static Deadline unlimited() { return {}; }

  static Deadline iteration_budget(std::uint64_t n) {
    Deadline d;
    d.max_iterations = n;
    return d;
  }

  static Deadline within_ms(std::int64_t ms) {
    Deadline d;
    d.wall = std::chrono::steady_clock::now() + std::chrono::milliseconds(ms);
    return d;
  }

  static Deadline budget(std::uint64_t n, std::int64_t ms) {
    Deadline d = within_ms(ms);
    d.max_iterations = n;
    return d;
  }

  bool wall_expired() const { return std::chrono::steady_clock::now() >= wall; }
};

// Where and how cheaply a task fits into an existing plan. Positions index
// the post-insertion route of `vehicle`.
struct InsertionResult {
  int vehicle = -1;
  int pickup_pos = -1;
  int delivery_pos = -1;
  double marginal_cost = 0.0;  // currency; equals cost(after) - cost(before)
  Plan plan;                   // the plan with the task inserted
};

// Cheapest feasible insertion of `task` into `plan`, keeping every existing
// action in place: minimizes the cost delta over all vehicles and ordered
// slot pairs, subject to capacity along the carried stretch. Ties resolve
// to the first candidate in (vehicle, pickup slot, delivery slot) scan
// order, which the exhaustive test oracle reproduces. Returns nullopt when
// no capacity-feasible slot pair exists.
std::optional<InsertionResult> cheapest_insertion(const Task& task,
                                                  const Plan& plan,
                                                  const Company& fleet,
                                                  const Topology& topo);

struct SlsParams {
  // Probability of adopting the best neighbour; otherwise keep the current
  // solution and re-sample. Restarts alternate between the id-order start
  // and a freshly randomized assignment after `restart_after` iterations
  // without improving the best plan found.
  double accept_p = 0.35;
  // Probability of instead moving the drawn task to a uniformly random
  // feasible slot, possibly worsening the plan. Best-slot moves alone are
  // pure descent and cannot cross barriers where two tasks must move
  // together; a little wandering can.
  double walk_p = 0.15;
  std::uint64_t restart_after = 2000;
  // When set, receives the best cost seen so far after every iteration;
  // the recorded sequence is non-increasing by construction.
  std::vector<double>* best_trace = nullptr;
};

struct SlsResult {
  Plan plan;
  double cost = 0.0;
  std::uint64_t iterations = 0;
  std::uint64_t restarts = 0;
};

// Stochastic local search over complete assignments. Starts from all tasks
// on the largest vehicle in task-id order; one iteration draws a random
// task and relocates it — to the best slot pair over every vehicle (with
// probability accept_p), to a uniformly random feasible slot (walk_p), or
// not at all. Stream draws depend only on the iteration's own coin flips,
// so a fixed seed and iteration budget reproduce the run exactly. Never
// returns worse than the initial assignment; throws when a task fits no
// vehicle.
SlsResult sls_optimize(std::span<const Task> won, const Company& fleet,
                       const Topology& topo, const Deadline& deadline,
                       RngStream& rng, const SlsParams& params = {});

enum class AstarHeuristic { Zero, Mst };

// Single-vehicle optimal search state: what the vehicle carries and what it
// has not yet touched, as index masks over the instance's task array.
struct SearchState {
  int city = 0;
  std::uint32_t carried = 0;
  std::uint32_t remaining = 0;
};

// Admissible lower bound on the remaining cost from `state`: per-km cost
// times the weight of a minimum spanning tree over the current city, the
// delivery cities of carried tasks, and both endpoints of untouched tasks.
// Every remaining route visits all those cities, and a route is a spanning
// walk, so the MST can never exceed it.
double mst_heuristic(const SearchState& state, std::span<const Task> tasks,
                     const Vehicle& vehicle, const Topology& topo);

struct AstarResult {
  std::vector<Action> route;
  double km = 0.0;
  double cost = 0.0;            // km x cost_per_km
  std::uint64_t expanded = 0;   // states actually expanded (stale pops excluded)
};

// Exact best-first search for one vehicle over (city, carried, remaining)
// states. With the zero heuristic this is uniform-cost search; both
// heuristics return minimum-cost routes. Supports up to 20 tasks; throws
// when a task exceeds the vehicle's capacity.
AstarResult astar_optimal(std::span<const Task> tasks, const Vehicle& vehicle,
                          const Topology& topo,
                          AstarHeuristic heuristic = AstarHeuristic::Mst);

// Parameters of the single-vehicle pickup market the reactive policy is
// trained on: at each city a task offer appears with probability
// `presence`, its destination uniform over the other cities; accepting one
// pays beta x distance x cost_per_km and moves the vehicle there; moving
// without a task costs the edge driven.
struct MdpParams {
  double beta = 1.3;
  double cost_per_km = 1.0;
  double presence = 0.8;
};

struct MdpAction {
  bool accept = false;
  int move_to = -1;  // meaningful when !accept

  bool operator==(const MdpAction&) const = default;
};

// Converged value table and greedy policy over states (city, offered
// destination | none). `offer` = -1 denotes the no-offer state.
struct MdpPolicy {
  int n_cities = 0;
  std::vector<double> values;
  std::vector<MdpAction> actions;
  double final_residual = 0.0;
  std::uint64_t sweeps = 0;

  std::size_t index(int city, int offer) const {
    const auto n = static_cast<std::size_t>(n_cities);
    const auto o = offer < 0 ? n : static_cast<std::size_t>(offer);
    return static_cast<std::size_t>(city) * (n + 1) + o;
  }
  double value(int city, int offer) const { return values[index(city, offer)]; }
  MdpAction action(int city, int offer) const { return actions[index(city, offer)]; }
};

// Value iteration with Bellman sweeps until the max residual drops below
// epsilon. The action table is greedy with respect to the final values,
// ties resolved Accept first, then lowest destination city.
MdpPolicy value_iteration(const Topology& topo, const MdpParams& params,
                          double discount, double epsilon);

}  // namespace apdp

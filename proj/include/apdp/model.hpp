#pragma once

#include <span>
#include <string>
#include <vector>

#include "apdp/rng.hpp"
#include "apdp/topology.hpp"
#include "json.hpp"

namespace apdp {

// A delivery request: move `weight` kg from `pickup` to `delivery`.
struct Task {
  int id = 0;
  int pickup = 0;
  int delivery = 0;
  double weight = 0.0;

  bool operator==(const Task&) const = default;
};

nlohmann::json task_to_json(const Task& t);
Task task_from_json(const nlohmann::json& doc);

// Uniform sampler over (pickup, delivery, weight) with pickup != delivery.
// Agents receive the distribution itself, not the sampled sequence: the
// environment is common knowledge, the draws are not.
class TaskDistribution {
 public:
  TaskDistribution(const Topology& topo, double w_min, double w_max);

  // Consumes exactly three draws from the stream, so sampling is
  // reproducible by position.
  Task sample(RngStream& rng, int id) const;

  const Topology& topology() const { return *topo_; }
  double w_min() const { return w_min_; }
  double w_max() const { return w_max_; }

 private:
  const Topology* topo_;
  double w_min_;
  double w_max_;
};

struct Vehicle {
  int id = 0;
  int home = 0;
  double capacity = 0.0;      // kg
  double cost_per_km = 0.0;   // currency per km

  bool operator==(const Vehicle&) const = default;
};

struct Company {
  int id = 0;
  std::vector<Vehicle> vehicles;
};

// Throws if the fleet is empty, a vehicle id repeats, or a capacity or
// per-km cost is non-positive.
void check_company(const Company& fleet);

nlohmann::json company_to_json(const Company& c);
Company company_from_json(const nlohmann::json& doc);

enum class ActionKind { Pickup, Deliver };

// One stop in a route. Carries a full task copy so plans are self-contained;
// the engine always builds actions from its own authoritative task objects.
struct Action {
  ActionKind kind = ActionKind::Pickup;
  Task task;

  static Action pickup(const Task& t) { return {ActionKind::Pickup, t}; }
  static Action deliver(const Task& t) { return {ActionKind::Deliver, t}; }

  int city() const { return kind == ActionKind::Pickup ? task.pickup : task.delivery; }

  bool operator==(const Action&) const = default;
};

// One action list per vehicle, indexed like Company::vehicles. Between
// consecutive stops the vehicle drives the shortest path, so a route's
// length is fully determined by the city sequence.
struct Plan {
  std::vector<std::vector<Action>> routes;

  static Plan empty(std::size_t n_vehicles) {
    Plan p;
    p.routes.resize(n_vehicles);
    return p;
  }

  std::size_t n_actions() const {
    std::size_t n = 0;
    for (const auto& r : routes) n += r.size();
    return n;
  }

  bool operator==(const Plan&) const = default;
};

// Serialized form stores task ids only; decoding resolves them against the
// authoritative task list and rejects unknown ids.
nlohmann::json plan_to_json(const Plan& plan);
Plan plan_from_json(const nlohmann::json& doc, std::span<const Task> tasks);

// Everything that can be wrong with a plan. UnknownTask is structural (the
// action references no assigned task); the rest map to the four delivery
// constraints: coverage (Missing*/Duplicate*), same-vehicle pairing,
// pickup-before-delivery precedence, and vehicle capacity.
enum class ViolationKind {
  UnknownTask,
  DuplicatePickup,
  DuplicateDelivery,
  MissingPickup,
  MissingDelivery,
  Pairing,
  Precedence,
  Capacity,
};

std::string to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind = ViolationKind::UnknownTask;
  int vehicle = -1;   // -1 for Missing* (no placement exists)
  int task = -1;
  int position = -1;  // index into the vehicle's action list, -1 for Missing*

  bool operator==(const Violation&) const = default;
  auto operator<=>(const Violation&) const = default;
};

struct Verdict {
  bool ok = false;
  std::vector<Violation> violations;
};

// Checks a plan against the assigned task set. Conventions, which the
// independent replay oracle in the test suite mirrors exactly:
//   - actions whose task id is not in `won` yield UnknownTask and are
//     excluded from every other check;
//   - the primary pickup/delivery of a task is the first in (vehicle,
//     position) scan order; later copies are Duplicate*;
//   - Pairing is reported at the primary delivery when its vehicle differs
//     from the primary pickup's; Precedence when the vehicles match but the
//     delivery comes first;
//   - capacity is replayed per vehicle with an on-board set (weight added at
//     a pickup of a task not yet on board, removed at a delivery of one that
//     is) and checked after every pickup, using weights from `won`;
//   - violations are sorted by (kind, vehicle, task, position).
// Throws std::invalid_argument on shape errors: route count != fleet size,
// or duplicate ids inside `won`.
Verdict validate_plan(const Plan& plan, std::span<const Task> won,
                      const Company& fleet);

// Kilometres driven by one route: home, then every action city in order,
// shortest path between consecutive stops. Empty routes drive nothing.
double route_km(std::span<const Action> route, int home, const Topology& topo);

// Sum over vehicles of route_km x the vehicle's per-km cost. Summation
// order is fixed (vehicle 0, 1, ...) so repeated evaluations are
// bit-identical.
double plan_cost(const Plan& plan, const Company& fleet, const Topology& topo);

inline double company_profit(double revenue, double cost) { return revenue - cost; }

// The city a vehicle would occupy after executing its tentative route: the
// last action's city, or home when the route is empty.
int route_end_city(std::span<const Action> route, int home);

}  // namespace apdp

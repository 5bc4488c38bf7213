#include "apdp/planning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <unordered_map>

namespace apdp {

namespace {

// Load before each action of a route, index 0..L inclusive; entry L is the
// load after the final action. Assumes a structurally valid route.
std::vector<double> loads_before(std::span<const Action> route) {
  std::vector<double> before(route.size() + 1, 0.0);
  for (std::size_t k = 0; k < route.size(); ++k) {
    const Action& a = route[k];
    before[k + 1] =
        before[k] + (a.kind == ActionKind::Pickup ? a.task.weight : -a.task.weight);
  }
  return before;
}

// Enumerates every capacity-feasible way to thread `task` through `route`
// without disturbing existing actions: pickup into slot i, delivery into
// slot j >= i (slots index the original route; the pair ends up at
// post-insertion indices i and j+1). Calls fn(i, j, delta_km).
//
// Feasibility: the extra weight rides across original actions i..j-1, so
// the peak load on that stretch is max(before[i..j]) + w — a running max
// that only grows with j, letting the inner loop stop at the first
// violation. The km delta touches at most four legs, computed closed-form.
template <typename Fn>
void scan_insertions(std::span<const Action> route, int home, double capacity,
                     const Task& task, const Topology& topo, Fn&& fn) {
  const int L = static_cast<int>(route.size());
  const std::vector<double> before = loads_before(route);
  const auto city = [&](int k) { return route[static_cast<std::size_t>(k)].city(); };
  const int p = task.pickup;
  const int d = task.delivery;

  for (int i = 0; i <= L; ++i) {
    const int prev_i = i == 0 ? home : city(i - 1);
    double peak = before[static_cast<std::size_t>(i)];
    for (int j = i; j <= L; ++j) {
      if (j > i) peak = std::max(peak, before[static_cast<std::size_t>(j)]);
      if (peak + task.weight > capacity) break;
      double delta;
      if (j == i) {
        delta = topo.dist(prev_i, p) + topo.dist(p, d);
        if (i < L) delta += topo.dist(d, city(i)) - topo.dist(prev_i, city(i));
      } else {
        delta = topo.dist(prev_i, p) + topo.dist(p, city(i)) - topo.dist(prev_i, city(i));
        delta += topo.dist(city(j - 1), d);
        if (j < L) delta += topo.dist(d, city(j)) - topo.dist(city(j - 1), city(j));
      }
      fn(i, j, delta);
    }
  }
}

std::vector<Action> insert_pair(std::span<const Action> route, int i, int j,
                                const Task& task) {
  std::vector<Action> out;
  out.reserve(route.size() + 2);
  out.insert(out.end(), route.begin(), route.begin() + i);
  out.push_back(Action::pickup(task));
  out.insert(out.end(), route.begin() + i, route.begin() + j);
  out.push_back(Action::deliver(task));
  out.insert(out.end(), route.begin() + j, route.end());
  return out;
}

}  // namespace

std::optional<InsertionResult> cheapest_insertion(const Task& task,
                                                  const Plan& plan,
                                                  const Company& fleet,
                                                  const Topology& topo) {
  struct Best {
    double cost;
    int vehicle, i, j;
  };
  std::optional<Best> best;
  for (int v = 0; v < static_cast<int>(fleet.vehicles.size()); ++v) {
    const Vehicle& veh = fleet.vehicles[static_cast<std::size_t>(v)];
    scan_insertions(plan.routes[static_cast<std::size_t>(v)], veh.home,
                    veh.capacity, task, topo, [&](int i, int j, double delta_km) {
                      const double c = delta_km * veh.cost_per_km;
                      if (!best || c < best->cost) best = Best{c, v, i, j};
                    });
  }
  if (!best) return std::nullopt;

  InsertionResult r;
  r.vehicle = best->vehicle;
  r.pickup_pos = best->i;
  r.delivery_pos = best->j + 1;
  r.marginal_cost = best->cost;
  r.plan = plan;
  auto& route = r.plan.routes[static_cast<std::size_t>(best->vehicle)];
  route = insert_pair(route, best->i, best->j, task);
  return r;
}

SlsResult sls_optimize(std::span<const Task> won, const Company& fleet,
                       const Topology& topo, const Deadline& deadline,
                       RngStream& rng, const SlsParams& params) {
  check_company(fleet);
  const int n_vehicles = static_cast<int>(fleet.vehicles.size());

  int largest = 0;
  for (int v = 1; v < n_vehicles; ++v) {
    if (fleet.vehicles[static_cast<std::size_t>(v)].capacity >
        fleet.vehicles[static_cast<std::size_t>(largest)].capacity) {
      largest = v;
    }
  }
  const double max_cap = fleet.vehicles[static_cast<std::size_t>(largest)].capacity;

  std::vector<Task> ordered(won.begin(), won.end());
  std::sort(ordered.begin(), ordered.end(),
            [](const Task& a, const Task& b) { return a.id < b.id; });
  for (const Task& t : ordered) {
    if (t.weight > max_cap) {
      throw std::runtime_error("task " + std::to_string(t.id) + " weighs " +
                               std::to_string(t.weight) +
                               " kg, more than any vehicle can carry");
    }
  }

  Plan initial = Plan::empty(static_cast<std::size_t>(n_vehicles));
  for (const Task& t : ordered) {
    auto& r = initial.routes[static_cast<std::size_t>(largest)];
    r.push_back(Action::pickup(t));
    r.push_back(Action::deliver(t));
  }
  const double initial_cost = plan_cost(initial, fleet, topo);

  SlsResult out;
  out.plan = initial;
  out.cost = initial_cost;
  if (ordered.empty()) return out;

  Plan cur = initial;
  double cur_cost = initial_cost;
  std::uint64_t stagnant = 0;

  while (out.iterations < deadline.max_iterations && !deadline.wall_expired()) {
    ++out.iterations;
    const Task& t = ordered[rng.pick(ordered.size())];
    const double coin = rng.next_double();
    const bool exploit = coin < params.accept_p;
    const bool wander = !exploit && coin < params.accept_p + params.walk_p;
    if (!exploit && !wander) {
      // The scan's outcome would be discarded anyway; skip it. The stream
      // sees the same two values either way.
      ++stagnant;
    } else {
      int v_cur = -1;
      for (int v = 0; v < n_vehicles && v_cur < 0; ++v) {
        for (const Action& a : cur.routes[static_cast<std::size_t>(v)]) {
          if (a.task.id == t.id) {
            v_cur = v;
            break;
          }
        }
      }
      std::vector<Action> reduced;
      for (const Action& a : cur.routes[static_cast<std::size_t>(v_cur)]) {
        if (a.task.id != t.id) reduced.push_back(a);
      }
      const Vehicle& veh_cur = fleet.vehicles[static_cast<std::size_t>(v_cur)];
      const double removal_saving =
          (route_km(cur.routes[static_cast<std::size_t>(v_cur)], veh_cur.home, topo) -
           route_km(reduced, veh_cur.home, topo)) *
          veh_cur.cost_per_km;

      struct Cand {
        double cost;
        int vehicle, i, j;
      };
      std::optional<Cand> chosen;
      std::vector<Cand> pool;  // every feasible slot, for wandering moves
      for (int v = 0; v < n_vehicles; ++v) {
        const Vehicle& veh = fleet.vehicles[static_cast<std::size_t>(v)];
        const auto& base =
            v == v_cur ? reduced : cur.routes[static_cast<std::size_t>(v)];
        scan_insertions(base, veh.home, veh.capacity, t, topo,
                        [&](int i, int j, double delta_km) {
                          const double c =
                              cur_cost - removal_saving + delta_km * veh.cost_per_km;
                          if (exploit) {
                            if (!chosen || c < chosen->cost) chosen = Cand{c, v, i, j};
                          } else {
                            pool.push_back(Cand{c, v, i, j});
                          }
                        });
      }
      // The task's previous slots are always feasible, so there is always
      // at least one candidate.
      if (wander) chosen = pool[rng.pick(pool.size())];
      std::vector<Action> target = chosen->vehicle == v_cur
                                       ? reduced
                                       : cur.routes[static_cast<std::size_t>(chosen->vehicle)];
      cur.routes[static_cast<std::size_t>(v_cur)] = std::move(reduced);
      cur.routes[static_cast<std::size_t>(chosen->vehicle)] =
          insert_pair(target, chosen->i, chosen->j, t);
      // Full-fold recompute on adoption keeps incremental rounding from
      // drifting into the reported costs.
      cur_cost = plan_cost(cur, fleet, topo);
      if (cur_cost < out.cost) {
        out.plan = cur;
        out.cost = cur_cost;
        stagnant = 0;
      } else {
        ++stagnant;
      }
    }
    if (stagnant >= params.restart_after) {
      // Best-slot relocation is pure descent, so a stagnant walk sits in a
      // basin it cannot leave. Re-descending the dense id-order start with
      // fresh task draws explores that strong basin's many fixed points;
      // every other restart instead descends from a randomized assignment,
      // for instances whose optimum the id-order basin never reaches.
      if (out.restarts % 2 == 0) {
        cur = initial;
      } else {
        Plan fresh = Plan::empty(static_cast<std::size_t>(n_vehicles));
        std::vector<std::size_t> order(ordered.size());
        for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
        for (std::size_t k = order.size(); k > 1; --k) {
          std::swap(order[k - 1], order[rng.pick(k)]);
        }
        for (const std::size_t idx : order) {
          const Task& task = ordered[idx];
          std::vector<int> capable;
          for (int v = 0; v < n_vehicles; ++v) {
            if (fleet.vehicles[static_cast<std::size_t>(v)].capacity >=
                task.weight) {
              capable.push_back(v);
            }
          }
          auto& r = fresh.routes[static_cast<std::size_t>(
              capable[rng.pick(capable.size())])];
          r.push_back(Action::pickup(task));
          r.push_back(Action::deliver(task));
        }
        cur = std::move(fresh);
      }
      cur_cost = plan_cost(cur, fleet, topo);
      stagnant = 0;
      ++out.restarts;
    }
    if (params.best_trace) params.best_trace->push_back(out.cost);
  }
  return out;
}

namespace {

using StateKey = std::uint64_t;

StateKey state_key(int city, std::uint32_t carried, std::uint32_t remaining) {
  return (static_cast<StateKey>(static_cast<std::uint32_t>(city)) << 40) |
         (static_cast<StateKey>(carried) << 20) | remaining;
}

// MST lower bound in km over every city the vehicle still has to stand in.
double mst_km(int city, std::uint32_t carried, std::uint32_t remaining,
              std::span<const Task> tasks, const Topology& topo) {
  std::vector<int> cities{city};
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto bit = std::uint32_t{1} << i;
    if (carried & bit) cities.push_back(tasks[i].delivery);
    if (remaining & bit) {
      cities.push_back(tasks[i].pickup);
      cities.push_back(tasks[i].delivery);
    }
  }
  std::sort(cities.begin(), cities.end());
  cities.erase(std::unique(cities.begin(), cities.end()), cities.end());
  return mst_weight(cities, topo);
}

}  // namespace

double mst_heuristic(const SearchState& state, std::span<const Task> tasks,
                     const Vehicle& vehicle, const Topology& topo) {
  return vehicle.cost_per_km *
         mst_km(state.city, state.carried, state.remaining, tasks, topo);
}

AstarResult astar_optimal(std::span<const Task> tasks, const Vehicle& vehicle,
                          const Topology& topo, AstarHeuristic heuristic) {
  const std::size_t n = tasks.size();
  if (n > 20) {
    throw std::invalid_argument("astar_optimal handles at most 20 tasks");
  }
  for (const Task& t : tasks) {
    if (t.weight > vehicle.capacity) {
      throw std::runtime_error("task " + std::to_string(t.id) + " weighs " +
                               std::to_string(t.weight) + " kg, more than vehicle " +
                               std::to_string(vehicle.id) + " can carry");
    }
  }

  struct Node {
    double g = 0.0;
    StateKey parent = 0;
    Action via;
    bool has_parent = false;
  };
  std::unordered_map<StateKey, Node> nodes;

  struct Entry {
    double f;
    std::uint64_t seq;  // push order; makes pop order total and reproducible
    StateKey key;
    double g;
  };
  const auto worse = [](const Entry& a, const Entry& b) {
    return a.f != b.f ? a.f > b.f : a.seq > b.seq;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> open(worse);

  const auto h = [&](int city, std::uint32_t carried, std::uint32_t remaining) {
    return heuristic == AstarHeuristic::Zero
               ? 0.0
               : mst_km(city, carried, remaining, tasks, topo);
  };

  const auto full = static_cast<std::uint32_t>((std::uint64_t{1} << n) - 1);
  const StateKey start = state_key(vehicle.home, 0, full);
  nodes[start] = Node{};
  std::uint64_t seq = 0;
  open.push({h(vehicle.home, 0, full), seq++, start, 0.0});

  AstarResult result;
  while (!open.empty()) {
    const Entry e = open.top();
    open.pop();
    if (e.g > nodes[e.key].g) continue;  // superseded by a cheaper path

    const int city = static_cast<int>(e.key >> 40);
    const auto carried = static_cast<std::uint32_t>((e.key >> 20) & 0xFFFFF);
    const auto remaining = static_cast<std::uint32_t>(e.key & 0xFFFFF);

    if (carried == 0 && remaining == 0) {
      std::vector<Action> route;
      for (StateKey k = e.key; nodes[k].has_parent; k = nodes[k].parent) {
        route.push_back(nodes[k].via);
      }
      std::reverse(route.begin(), route.end());
      // Recompute the total with the canonical leg fold so the result is
      // bit-identical to plan_cost over the same route.
      result.km = route_km(route, vehicle.home, topo);
      result.cost = result.km * vehicle.cost_per_km;
      result.route = std::move(route);
      return result;
    }
    ++result.expanded;

    double load = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (carried & (std::uint32_t{1} << i)) load += tasks[i].weight;
    }

    const auto relax = [&](StateKey nk, double ng, const Action& via, int ncity,
                           std::uint32_t ncarried, std::uint32_t nremaining) {
      const auto it = nodes.find(nk);
      if (it != nodes.end() && ng >= it->second.g) return;
      nodes[nk] = Node{ng, e.key, via, true};
      open.push({ng + h(ncity, ncarried, nremaining), seq++, nk, ng});
    };

    for (std::size_t i = 0; i < n; ++i) {
      const auto bit = std::uint32_t{1} << i;
      const Task& t = tasks[i];
      if ((remaining & bit) && load + t.weight <= vehicle.capacity) {
        relax(state_key(t.pickup, carried | bit, remaining & ~bit),
              e.g + topo.dist(city, t.pickup), Action::pickup(t), t.pickup,
              carried | bit, remaining & ~bit);
      }
      if (carried & bit) {
        relax(state_key(t.delivery, carried & ~bit, remaining),
              e.g + topo.dist(city, t.delivery), Action::deliver(t), t.delivery,
              carried & ~bit, remaining);
      }
    }
  }
  // Connected topology + per-task capacity check make the goal reachable.
  throw std::logic_error("astar_optimal: search space exhausted");
}

MdpPolicy value_iteration(const Topology& topo, const MdpParams& params,
                          double discount, double epsilon) {
  if (!(discount >= 0.0) || discount >= 1.0) {
    throw std::invalid_argument("value_iteration: need 0 <= discount < 1");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("value_iteration: epsilon must be positive");
  if (params.presence < 0.0 || params.presence > 1.0) {
    throw std::invalid_argument("value_iteration: presence must lie in [0, 1]");
  }
  const int n = topo.n_cities();
  if (n < 2) throw std::invalid_argument("value_iteration: need at least two cities");

  const double rho = params.presence;
  const double cpk = params.cost_per_km;
  const double offer_p = rho / static_cast<double>(n - 1);

  MdpPolicy policy;
  policy.n_cities = n;
  const std::size_t n_states = static_cast<std::size_t>(n) * (static_cast<std::size_t>(n) + 1);
  std::vector<double> v(n_states, 0.0), next(n_states, 0.0);
  const auto idx = [&](int c, int o) { return policy.index(c, o); };

  // Expected value of standing in city x before the next offer resolves.
  const auto continuation = [&](const std::vector<double>& val, int x) {
    double s = (1.0 - rho) * val[idx(x, -1)];
    for (int d = 0; d < n; ++d) {
      if (d != x) s += offer_p * val[idx(x, d)];
    }
    return s;
  };

  std::vector<double> w(static_cast<std::size_t>(n));
  double residual;
  do {
    for (int x = 0; x < n; ++x) w[static_cast<std::size_t>(x)] = continuation(v, x);
    residual = 0.0;
    for (int c = 0; c < n; ++c) {
      double best_move = -std::numeric_limits<double>::infinity();
      for (const auto& [nb, km] : topo.neighbours(c)) {
        best_move = std::max(best_move,
                             -km * cpk + discount * w[static_cast<std::size_t>(nb)]);
      }
      next[idx(c, -1)] = best_move;
      residual = std::max(residual, std::abs(best_move - v[idx(c, -1)]));
      for (int d = 0; d < n; ++d) {
        if (d == c) continue;
        const double accept = (params.beta - 1.0) * topo.dist(c, d) * cpk +
                              discount * w[static_cast<std::size_t>(d)];
        const double q = std::max(accept, best_move);
        residual = std::max(residual, std::abs(q - v[idx(c, d)]));
        next[idx(c, d)] = q;
      }
    }
    v.swap(next);
    ++policy.sweeps;
  } while (residual >= epsilon);
  policy.final_residual = residual;
  policy.values = v;

  // Greedy extraction from the converged table: Accept wins ties, then the
  // lowest-numbered destination (neighbours are sorted by city id).
  policy.actions.assign(n_states, MdpAction{});
  for (int x = 0; x < n; ++x) w[static_cast<std::size_t>(x)] = continuation(v, x);
  for (int c = 0; c < n; ++c) {
    MdpAction best_move{false, -1};
    double best_move_q = -std::numeric_limits<double>::infinity();
    for (const auto& [nb, km] : topo.neighbours(c)) {
      const double q = -km * cpk + discount * w[static_cast<std::size_t>(nb)];
      if (q > best_move_q) {
        best_move_q = q;
        best_move = MdpAction{false, nb};
      }
    }
    policy.actions[idx(c, -1)] = best_move;
    for (int d = 0; d < n; ++d) {
      if (d == c) continue;
      const double accept = (params.beta - 1.0) * topo.dist(c, d) * cpk +
                            discount * w[static_cast<std::size_t>(d)];
      policy.actions[idx(c, d)] =
          accept >= best_move_q ? MdpAction{true, -1} : best_move;
    }
  }
  return policy;
}

}  // namespace apdp

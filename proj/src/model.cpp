#include "apdp/model.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

namespace apdp {

nlohmann::json task_to_json(const Task& t) {
  return {{"id", t.id}, {"pickup", t.pickup}, {"delivery", t.delivery},
          {"weight", t.weight}};
}

Task task_from_json(const nlohmann::json& doc) {
  Task t{doc.at("id").get<int>(), doc.at("pickup").get<int>(),
         doc.at("delivery").get<int>(), doc.at("weight").get<double>()};
  if (t.id < 0) throw std::runtime_error("task document: negative id");
  if (t.pickup == t.delivery) {
    throw std::runtime_error("task document: pickup equals delivery for task " +
                             std::to_string(t.id));
  }
  if (!(t.weight > 0.0)) {
    throw std::runtime_error("task document: non-positive weight for task " +
                             std::to_string(t.id));
  }
  return t;
}

TaskDistribution::TaskDistribution(const Topology& topo, double w_min, double w_max)
    : topo_(&topo), w_min_(w_min), w_max_(w_max) {
  if (topo.n_cities() < 2) {
    throw std::invalid_argument("task distribution needs at least two cities");
  }
  if (!(w_min > 0.0) || w_min > w_max) {
    throw std::invalid_argument("task distribution: need 0 < w_min <= w_max");
  }
}

Task TaskDistribution::sample(RngStream& rng, int id) const {
  const auto n = static_cast<std::uint64_t>(topo_->n_cities());
  const int pickup = static_cast<int>(rng.uniform_int(n));
  // Uniform over the other n-1 cities, giving each ordered pair equal mass.
  int delivery = static_cast<int>(rng.uniform_int(n - 1));
  if (delivery >= pickup) ++delivery;
  const double weight = rng.uniform(w_min_, w_max_);
  return Task{id, pickup, delivery, weight};
}

void check_company(const Company& fleet) {
  if (fleet.vehicles.empty()) {
    throw std::invalid_argument("company " + std::to_string(fleet.id) +
                                ": empty fleet");
  }
  std::set<int> ids;
  for (const Vehicle& v : fleet.vehicles) {
    if (!ids.insert(v.id).second) {
      throw std::invalid_argument("company " + std::to_string(fleet.id) +
                                  ": duplicate vehicle id " + std::to_string(v.id));
    }
    if (!(v.capacity > 0.0) || !(v.cost_per_km > 0.0)) {
      throw std::invalid_argument("company " + std::to_string(fleet.id) +
                                  ": vehicle " + std::to_string(v.id) +
                                  " needs positive capacity and cost per km");
    }
  }
}

nlohmann::json company_to_json(const Company& c) {
  nlohmann::json vehicles = nlohmann::json::array();
  for (const Vehicle& v : c.vehicles) {
    vehicles.push_back({{"id", v.id}, {"home", v.home}, {"capacity", v.capacity},
                        {"cost_per_km", v.cost_per_km}});
  }
  return {{"id", c.id}, {"vehicles", std::move(vehicles)}};
}

Company company_from_json(const nlohmann::json& doc) {
  Company c;
  c.id = doc.at("id").get<int>();
  for (const auto& v : doc.at("vehicles")) {
    c.vehicles.push_back(Vehicle{v.at("id").get<int>(), v.at("home").get<int>(),
                                 v.at("capacity").get<double>(),
                                 v.at("cost_per_km").get<double>()});
  }
  check_company(c);
  return c;
}

nlohmann::json plan_to_json(const Plan& plan) {
  nlohmann::json routes = nlohmann::json::array();
  for (const auto& route : plan.routes) {
    nlohmann::json r = nlohmann::json::array();
    for (const Action& a : route) {
      r.push_back({{"kind", a.kind == ActionKind::Pickup ? "pickup" : "deliver"},
                   {"task", a.task.id}});
    }
    routes.push_back(std::move(r));
  }
  return {{"routes", std::move(routes)}};
}

Plan plan_from_json(const nlohmann::json& doc, std::span<const Task> tasks) {
  std::map<int, const Task*> by_id;
  for (const Task& t : tasks) by_id[t.id] = &t;

  const auto& routes = doc.at("routes");
  if (!routes.is_array()) throw std::runtime_error("plan document: 'routes' must be an array");
  Plan plan;
  for (const auto& route : routes) {
    if (!route.is_array()) throw std::runtime_error("plan document: route must be an array");
    std::vector<Action> r;
    for (const auto& a : route) {
      const std::string kind = a.at("kind").get<std::string>();
      const int task_id = a.at("task").get<int>();
      const auto it = by_id.find(task_id);
      if (it == by_id.end()) {
        throw std::runtime_error("plan document: unknown task id " +
                                 std::to_string(task_id));
      }
      if (kind == "pickup") {
        r.push_back(Action::pickup(*it->second));
      } else if (kind == "deliver") {
        r.push_back(Action::deliver(*it->second));
      } else {
        throw std::runtime_error("plan document: bad action kind '" + kind + "'");
      }
    }
    plan.routes.push_back(std::move(r));
  }
  return plan;
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::UnknownTask: return "unknown-task";
    case ViolationKind::DuplicatePickup: return "duplicate-pickup";
    case ViolationKind::DuplicateDelivery: return "duplicate-delivery";
    case ViolationKind::MissingPickup: return "missing-pickup";
    case ViolationKind::MissingDelivery: return "missing-delivery";
    case ViolationKind::Pairing: return "pairing";
    case ViolationKind::Precedence: return "precedence";
    case ViolationKind::Capacity: return "capacity";
  }
  return "?";
}

Verdict validate_plan(const Plan& plan, std::span<const Task> won,
                      const Company& fleet) {
  if (plan.routes.size() != fleet.vehicles.size()) {
    throw std::invalid_argument("plan has " + std::to_string(plan.routes.size()) +
                                " routes for a fleet of " +
                                std::to_string(fleet.vehicles.size()));
  }
  std::map<int, const Task*> assigned;
  for (const Task& t : won) {
    if (!assigned.emplace(t.id, &t).second) {
      throw std::invalid_argument("duplicate task id " + std::to_string(t.id) +
                                  " in the assigned set");
    }
  }

  std::vector<Violation> out;
  struct Placement {
    int vehicle = -1;
    int position = -1;
  };
  std::map<int, Placement> first_pickup, first_delivery;

  // Pass 1: structural scan in (vehicle, position) order. Records the
  // primary placement of each known task and flags strays.
  for (int v = 0; v < static_cast<int>(plan.routes.size()); ++v) {
    const auto& route = plan.routes[static_cast<std::size_t>(v)];
    for (int pos = 0; pos < static_cast<int>(route.size()); ++pos) {
      const Action& a = route[static_cast<std::size_t>(pos)];
      if (!assigned.contains(a.task.id)) {
        out.push_back({ViolationKind::UnknownTask, v, a.task.id, pos});
        continue;
      }
      auto& table = a.kind == ActionKind::Pickup ? first_pickup : first_delivery;
      const auto [it, fresh] = table.emplace(a.task.id, Placement{v, pos});
      if (!fresh) {
        out.push_back({a.kind == ActionKind::Pickup
                           ? ViolationKind::DuplicatePickup
                           : ViolationKind::DuplicateDelivery,
                       v, a.task.id, pos});
      }
    }
  }

  // Pass 2: coverage, pairing, and precedence per assigned task.
  for (const auto& [id, task] : assigned) {
    (void)task;
    const auto pu = first_pickup.find(id);
    const auto de = first_delivery.find(id);
    if (pu == first_pickup.end()) {
      out.push_back({ViolationKind::MissingPickup, -1, id, -1});
    }
    if (de == first_delivery.end()) {
      out.push_back({ViolationKind::MissingDelivery, -1, id, -1});
    }
    if (pu != first_pickup.end() && de != first_delivery.end()) {
      if (pu->second.vehicle != de->second.vehicle) {
        out.push_back({ViolationKind::Pairing, de->second.vehicle, id,
                       de->second.position});
      } else if (de->second.position < pu->second.position) {
        out.push_back({ViolationKind::Precedence, de->second.vehicle, id,
                       de->second.position});
      }
    }
  }

  // Pass 3: per-vehicle load replay over known tasks. Load only rises at
  // pickups, so checking there covers every prefix.
  for (int v = 0; v < static_cast<int>(plan.routes.size()); ++v) {
    const auto& route = plan.routes[static_cast<std::size_t>(v)];
    const double cap = fleet.vehicles[static_cast<std::size_t>(v)].capacity;
    std::set<int> on_board;
    double load = 0.0;
    for (int pos = 0; pos < static_cast<int>(route.size()); ++pos) {
      const Action& a = route[static_cast<std::size_t>(pos)];
      const auto it = assigned.find(a.task.id);
      if (it == assigned.end()) continue;
      const double w = it->second->weight;
      if (a.kind == ActionKind::Pickup) {
        if (on_board.insert(a.task.id).second) load += w;
        if (load > cap) {
          out.push_back({ViolationKind::Capacity, v, a.task.id, pos});
        }
      } else if (on_board.erase(a.task.id) > 0) {
        load -= w;
      }
    }
  }

  std::sort(out.begin(), out.end());
  return Verdict{out.empty(), std::move(out)};
}

double route_km(std::span<const Action> route, int home, const Topology& topo) {
  double km = 0.0;
  int at = home;
  for (const Action& a : route) {
    km += topo.dist(at, a.city());
    at = a.city();
  }
  return km;
}

double plan_cost(const Plan& plan, const Company& fleet, const Topology& topo) {
  double total = 0.0;
  for (std::size_t v = 0; v < plan.routes.size(); ++v) {
    const Vehicle& veh = fleet.vehicles[v];
    total += route_km(plan.routes[v], veh.home, topo) * veh.cost_per_km;
  }
  return total;
}

int route_end_city(std::span<const Action> route, int home) {
  return route.empty() ? home : route.back().city();
}

}  // namespace apdp

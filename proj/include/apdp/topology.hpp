#pragma once

#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"

namespace apdp {

struct City {
  int id = 0;
  std::string name;
  double x_km = 0.0;
  double y_km = 0.0;
};

struct Edge {
  int a = 0;
  int b = 0;
  double km = 0.0;
};

// Computes the full shortest-path distance matrix (n x n, row-major) for a
// connected undirected graph with positive edge lengths. Unreachable pairs
// are left at +infinity; callers decide whether that is an error.
std::vector<double> all_pairs_shortest(int n_cities, std::span<const Edge> edges);

// Immutable road-network abstraction: cities, weighted edges, and the
// precomputed shortest-distance matrix every cost computation queries.
// Safe to share read-only across concurrent matches.
class Topology {
 public:
  Topology(std::string name, std::vector<City> cities, std::vector<Edge> edges);

  static Topology from_json(const nlohmann::json& doc);
  static Topology load_file(const std::string& path);

  const std::string& name() const { return name_; }
  int n_cities() const { return static_cast<int>(cities_.size()); }
  const std::vector<City>& cities() const { return cities_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const City& city(int id) const { return cities_[static_cast<std::size_t>(id)]; }

  double dist(int u, int v) const {
    return dist_[static_cast<std::size_t>(u) * cities_.size() +
                 static_cast<std::size_t>(v)];
  }

  // Graph neighbours of a city: (city id, edge length).
  const std::vector<std::pair<int, double>>& neighbours(int id) const {
    return adjacency_[static_cast<std::size_t>(id)];
  }

  // Checks the metric invariants of the distance matrix: zero diagonal,
  // symmetry, triangle inequality, and dist <= every direct edge. Throws
  // std::runtime_error naming the offending entries on violation.
  void verify() const;

  nlohmann::json to_json() const;

 private:
  std::string name_;
  std::vector<City> cities_;
  std::vector<Edge> edges_;
  std::vector<double> dist_;
  std::vector<std::vector<std::pair<int, double>>> adjacency_;
};

// Total weight of a minimum spanning tree over the given cities under the
// topology's shortest-path metric. Singletons weigh 0; empty sets are an
// error.
double mst_weight(std::span<const int> cities, const Topology& topo);

// The MST itself, as (city, city, km) edges. Used by diagnostics and tests.
std::vector<std::tuple<int, int, double>> mst_edges(std::span<const int> cities,
                                                    const Topology& topo);

// Resolves a topology reference that is either a path to a JSON document or
// the name of a bundled map (searched in APDP_DATA_DIR, then the built-in
// data directory).
Topology resolve_topology(const std::string& name_or_path);

}  // namespace apdp

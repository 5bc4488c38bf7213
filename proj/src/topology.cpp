#include "apdp/topology.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#ifndef APDP_DATA_DIR
#define APDP_DATA_DIR ""
#endif

namespace apdp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

}  // namespace

std::vector<double> all_pairs_shortest(int n_cities, std::span<const Edge> edges) {
  const auto n = static_cast<std::size_t>(n_cities);
  std::vector<double> d(n * n, kInf);
  for (std::size_t i = 0; i < n; ++i) d[i * n + i] = 0.0;
  for (const Edge& e : edges) {
    const auto a = static_cast<std::size_t>(e.a);
    const auto b = static_cast<std::size_t>(e.b);
    // Parallel edges: keep the shortest.
    d[a * n + b] = std::min(d[a * n + b], e.km);
    d[b * n + a] = std::min(d[b * n + a], e.km);
  }
  // Floyd-Warshall. |V| is a few hundred at most in this domain.
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const double dik = d[i * n + k];
      if (dik == kInf) continue;
      for (std::size_t j = 0; j < n; ++j) {
        const double via = dik + d[k * n + j];
        if (via < d[i * n + j]) d[i * n + j] = via;
      }
    }
  }
  return d;
}

Topology::Topology(std::string name, std::vector<City> cities,
                   std::vector<Edge> edges)
    : name_(std::move(name)), cities_(std::move(cities)), edges_(std::move(edges)) {
  const int n = static_cast<int>(cities_.size());
  if (n == 0) fail("topology '" + name_ + "': no cities");

  std::set<std::string> seen_names;
  for (int i = 0; i < n; ++i) {
    const City& c = cities_[static_cast<std::size_t>(i)];
    if (c.id != i) {
      fail("topology '" + name_ + "': city ids must be dense 0..n-1, got id " +
           std::to_string(c.id) + " at position " + std::to_string(i));
    }
    if (!seen_names.insert(c.name).second) {
      fail("topology '" + name_ + "': duplicate city name '" + c.name + "'");
    }
  }
  for (const Edge& e : edges_) {
    if (e.a < 0 || e.a >= n || e.b < 0 || e.b >= n) {
      fail("topology '" + name_ + "': edge (" + std::to_string(e.a) + ", " +
           std::to_string(e.b) + ") references an undeclared city");
    }
    if (e.a == e.b) {
      fail("topology '" + name_ + "': self-loop edge at city " +
           std::to_string(e.a));
    }
    if (!(e.km > 0.0)) {
      fail("topology '" + name_ + "': edge (" + std::to_string(e.a) + ", " +
           std::to_string(e.b) + ") has non-positive length " +
           std::to_string(e.km));
    }
  }

  adjacency_.assign(static_cast<std::size_t>(n), {});
  for (const Edge& e : edges_) {
    adjacency_[static_cast<std::size_t>(e.a)].emplace_back(e.b, e.km);
    adjacency_[static_cast<std::size_t>(e.b)].emplace_back(e.a, e.km);
  }
  for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());

  dist_ = all_pairs_shortest(n, edges_);
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      if (dist(u, v) == kInf) {
        fail("topology '" + name_ + "': disconnected graph, city '" +
             cities_[static_cast<std::size_t>(v)].name + "' unreachable from '" +
             cities_[static_cast<std::size_t>(u)].name + "'");
      }
    }
  }
  verify();
}

void Topology::verify() const {
  const int n = n_cities();
  for (int u = 0; u < n; ++u) {
    if (dist(u, u) != 0.0) fail("dist diagonal not zero at city " + std::to_string(u));
    for (int v = 0; v < n; ++v) {
      if (dist(u, v) != dist(v, u)) {
        fail("dist not symmetric at (" + std::to_string(u) + ", " +
             std::to_string(v) + ")");
      }
    }
  }
  for (const Edge& e : edges_) {
    if (dist(e.a, e.b) > e.km) {
      fail("dist(" + std::to_string(e.a) + ", " + std::to_string(e.b) +
           ") exceeds direct edge length");
    }
  }
  // Shortest-path closure: the triangle inequality must hold everywhere.
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      for (int w = 0; w < n; ++w) {
        if (dist(u, w) > dist(u, v) + dist(v, w) + 1e-12) {
          fail("triangle inequality violated at (" + std::to_string(u) + ", " +
               std::to_string(v) + ", " + std::to_string(w) + ")");
        }
      }
    }
  }
}

namespace {

void reject_unknown_fields(const nlohmann::json& obj,
                           std::initializer_list<const char*> allowed,
                           const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) fail("topology document: unknown field '" + it.key() + "' in " + where);
  }
}

}  // namespace

Topology Topology::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) fail("topology document: root must be an object");
  reject_unknown_fields(doc, {"format_version", "name", "cities", "edges"}, "root");
  if (!doc.contains("name") || !doc["name"].is_string()) {
    fail("topology document: missing string field 'name'");
  }
  if (!doc.contains("cities") || !doc["cities"].is_array()) {
    fail("topology document: missing array field 'cities'");
  }
  if (!doc.contains("edges") || !doc["edges"].is_array()) {
    fail("topology document: missing array field 'edges'");
  }

  std::vector<City> cities;
  for (const auto& c : doc["cities"]) {
    reject_unknown_fields(c, {"id", "name", "x_km", "y_km"}, "city");
    for (const char* k : {"id", "name", "x_km", "y_km"}) {
      if (!c.contains(k)) fail(std::string("topology document: city missing '") + k + "'");
    }
    cities.push_back(City{c["id"].get<int>(), c["name"].get<std::string>(),
                          c["x_km"].get<double>(), c["y_km"].get<double>()});
  }
  std::vector<Edge> edges;
  for (const auto& e : doc["edges"]) {
    reject_unknown_fields(e, {"a", "b", "km"}, "edge");
    for (const char* k : {"a", "b", "km"}) {
      if (!e.contains(k)) fail(std::string("topology document: edge missing '") + k + "'");
    }
    edges.push_back(Edge{e["a"].get<int>(), e["b"].get<int>(), e["km"].get<double>()});
  }
  return Topology(doc["name"].get<std::string>(), std::move(cities), std::move(edges));
}

Topology Topology::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open topology document '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    fail("malformed topology document '" + path + "': " + e.what());
  }
  return from_json(doc);
}

nlohmann::json Topology::to_json() const {
  nlohmann::json doc;
  doc["format_version"] = 1;
  doc["name"] = name_;
  doc["cities"] = nlohmann::json::array();
  for (const City& c : cities_) {
    doc["cities"].push_back(
        {{"id", c.id}, {"name", c.name}, {"x_km", c.x_km}, {"y_km", c.y_km}});
  }
  doc["edges"] = nlohmann::json::array();
  for (const Edge& e : edges_) {
    doc["edges"].push_back({{"a", e.a}, {"b", e.b}, {"km", e.km}});
  }
  return doc;
}

std::vector<std::tuple<int, int, double>> mst_edges(std::span<const int> cities,
                                                    const Topology& topo) {
  if (cities.empty()) fail("mst_weight: empty city set");
  // Prim's algorithm over the dense shortest-path metric.
  const std::size_t k = cities.size();
  std::vector<bool> in_tree(k, false);
  std::vector<double> best(k, kInf);
  std::vector<std::size_t> best_from(k, 0);
  std::vector<std::tuple<int, int, double>> out;
  in_tree[0] = true;
  for (std::size_t i = 1; i < k; ++i) {
    best[i] = topo.dist(cities[0], cities[i]);
    best_from[i] = 0;
  }
  for (std::size_t added = 1; added < k; ++added) {
    std::size_t pick = k;
    for (std::size_t i = 0; i < k; ++i) {
      if (!in_tree[i] && (pick == k || best[i] < best[pick])) pick = i;
    }
    in_tree[pick] = true;
    out.emplace_back(cities[best_from[pick]], cities[pick], best[pick]);
    for (std::size_t i = 0; i < k; ++i) {
      if (in_tree[i]) continue;
      const double d = topo.dist(cities[pick], cities[i]);
      if (d < best[i]) {
        best[i] = d;
        best_from[i] = pick;
      }
    }
  }
  return out;
}

double mst_weight(std::span<const int> cities, const Topology& topo) {
  double total = 0.0;
  for (const auto& [a, b, km] : mst_edges(cities, topo)) total += km;
  return total;
}

Topology resolve_topology(const std::string& name_or_path) {
  namespace fs = std::filesystem;
  if (fs::exists(name_or_path)) return Topology::load_file(name_or_path);

  std::vector<std::string> roots;
  if (const char* env = std::getenv("APDP_DATA_DIR")) roots.push_back(env);
  if (APDP_DATA_DIR[0] != '\0') roots.push_back(APDP_DATA_DIR);
  for (const auto& root : roots) {
    const fs::path p = fs::path(root) / "topologies" / (name_or_path + ".json");
    if (fs::exists(p)) return Topology::load_file(p.string());
  }
  fail("topology '" + name_or_path +
       "' is neither a readable file nor a bundled map name");
}

}  // namespace apdp

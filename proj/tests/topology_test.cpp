#include <cmath>
#include <set>

#include "apdp/topology.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace apdp;

namespace {

Topology triangle() {
  return Topology("tri",
                  {{0, "A", 0.0, 0.0}, {1, "B", 3.0, 0.0}, {2, "C", 3.0, 4.0}},
                  {{0, 1, 3.0}, {1, 2, 4.0}, {0, 2, 10.0}});
}

}  // namespace

TEST_CASE("shortest path beats a longer direct edge") {
  const Topology t = triangle();
  CHECK(t.dist(0, 1) == 3.0);
  CHECK(t.dist(1, 2) == 4.0);
  // A->C directly is 10; via B it is 3 + 4 = 7.
  CHECK(t.dist(0, 2) == 7.0);
  CHECK(t.dist(2, 0) == 7.0);
  CHECK(t.dist(0, 0) == 0.0);
}

TEST_CASE("parallel edges keep the shorter length") {
  const std::vector<Edge> edges{{0, 1, 5.0}, {0, 1, 3.0}};
  const auto d = all_pairs_shortest(2, edges);
  CHECK(d[1] == 3.0);
  CHECK(d[2] == 3.0);
}

TEST_CASE("neighbours are sorted by city id with edge lengths attached") {
  const Topology t = triangle();
  const auto& nb = t.neighbours(2);
  REQUIRE(nb.size() == 2);
  CHECK(nb[0] == std::pair<int, double>{0, 10.0});
  CHECK(nb[1] == std::pair<int, double>{1, 4.0});
}

TEST_CASE("distance matrix matches single-source recomputation on random graphs") {
  RngStream rng(2026);
  for (int rep = 0; rep < 12; ++rep) {
    const Topology t = testutil::make_random_topology(rng, 4 + rep, rep % 4);
    for (int src = 0; src < t.n_cities(); ++src) {
      const auto row = oracle::dijkstra_row(src, t.n_cities(), t.edges());
      for (int v = 0; v < t.n_cities(); ++v) {
        CHECK(t.dist(src, v) ==
              doctest::Approx(row[static_cast<std::size_t>(v)]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("constructor rejects malformed inputs") {
  const std::vector<City> ab{{0, "A", 0, 0}, {1, "B", 1, 0}};
  CHECK_THROWS_AS(Topology("x", {}, {}), std::runtime_error);
  CHECK_THROWS_AS(Topology("x", {{1, "A", 0, 0}}, {}), std::runtime_error);  // ids not dense
  CHECK_THROWS_AS(Topology("x", {{0, "A", 0, 0}, {1, "A", 1, 0}}, {{0, 1, 1.0}}),
                  std::runtime_error);  // duplicate name
  CHECK_THROWS_AS(Topology("x", ab, {{0, 2, 1.0}}), std::runtime_error);  // unknown city
  CHECK_THROWS_AS(Topology("x", ab, {{0, 0, 1.0}, {0, 1, 1.0}}),
                  std::runtime_error);  // self-loop
  CHECK_THROWS_AS(Topology("x", ab, {{0, 1, 0.0}}), std::runtime_error);  // zero length
  CHECK_THROWS_AS(Topology("x", ab, {{0, 1, -2.0}}), std::runtime_error);
  CHECK_THROWS_AS(Topology("x", ab, {}), std::runtime_error);  // disconnected
  CHECK_THROWS_AS(
      Topology("x", {{0, "A", 0, 0}, {1, "B", 1, 0}, {2, "C", 2, 0}}, {{0, 1, 1.0}}),
      std::runtime_error);  // C unreachable
}

TEST_CASE("document parser enforces its schema") {
  const Topology t = triangle();
  nlohmann::json good = t.to_json();
  CHECK(Topology::from_json(good).dist(0, 2) == 7.0);

  SUBCASE("unknown root field") {
    nlohmann::json doc = good;
    doc["speed"] = 3;
    CHECK_THROWS_AS(Topology::from_json(doc), std::runtime_error);
  }
  SUBCASE("unknown city field") {
    nlohmann::json doc = good;
    doc["cities"][0]["population"] = 12;
    CHECK_THROWS_AS(Topology::from_json(doc), std::runtime_error);
  }
  SUBCASE("unknown edge field") {
    nlohmann::json doc = good;
    doc["edges"][0]["lanes"] = 2;
    CHECK_THROWS_AS(Topology::from_json(doc), std::runtime_error);
  }
  SUBCASE("missing fields") {
    nlohmann::json doc = good;
    doc.erase("name");
    CHECK_THROWS_AS(Topology::from_json(doc), std::runtime_error);
    doc = good;
    doc["cities"][1].erase("x_km");
    CHECK_THROWS_AS(Topology::from_json(doc), std::runtime_error);
    doc = good;
    doc["edges"][0].erase("km");
    CHECK_THROWS_AS(Topology::from_json(doc), std::runtime_error);
  }
  SUBCASE("non-object root") {
    CHECK_THROWS_AS(Topology::from_json(nlohmann::json::array()), std::runtime_error);
  }
}

TEST_CASE("serialization round-trips bit-exactly") {
  RngStream rng(7);
  const Topology t = testutil::make_random_topology(rng, 9, 4);
  const Topology back = Topology::from_json(t.to_json());
  REQUIRE(back.n_cities() == t.n_cities());
  for (int i = 0; i < t.n_cities(); ++i) {
    CHECK(back.city(i).name == t.city(i).name);
    CHECK(back.city(i).x_km == t.city(i).x_km);
    CHECK(back.city(i).y_km == t.city(i).y_km);
    for (int j = 0; j < t.n_cities(); ++j) {
      CHECK(back.dist(i, j) == t.dist(i, j));  // exact: same inputs, same fold
    }
  }
  REQUIRE(back.edges().size() == t.edges().size());
  for (std::size_t e = 0; e < t.edges().size(); ++e) {
    CHECK(back.edges()[e].km == t.edges()[e].km);
  }
}

TEST_CASE("bundled maps load, are connected, and pass metric checks") {
  const std::pair<const char*, int> maps[] = {
      {"switzerland", 16}, {"france", 20}, {"great_britain", 19}, {"netherlands", 18}};
  for (const auto& [name, n] : maps) {
    const Topology t = resolve_topology(name);
    CHECK(t.name() == name);
    CHECK(t.n_cities() == n);
    CHECK_NOTHROW(t.verify());
    std::set<std::string> names;
    for (const City& c : t.cities()) names.insert(c.name);
    CHECK(static_cast<int>(names.size()) == n);
  }
}

TEST_CASE("topology resolution falls back from path to bundled name") {
  CHECK_THROWS_AS(resolve_topology("no-such-map"), std::runtime_error);
  CHECK_THROWS_AS(Topology::load_file("/nonexistent/file.json"), std::runtime_error);
}

TEST_CASE("spanning tree weight matches exhaustive tree enumeration") {
  RngStream rng(99);
  for (int rep = 0; rep < 10; ++rep) {
    const Topology t = testutil::make_random_topology(rng, 7, 3);
    std::vector<int> cities;
    for (int i = 0; i < t.n_cities(); ++i) cities.push_back(i);
    // whole set and a few strict subsets
    for (int take = 3; take <= 7; ++take) {
      std::vector<int> subset(cities.begin(), cities.begin() + take);
      CHECK(mst_weight(subset, t) ==
            doctest::Approx(oracle::enumerate_mst(subset, t)).epsilon(1e-12));
    }
  }
}

TEST_CASE("spanning tree edge cases") {
  const Topology t = triangle();
  const std::vector<int> one{2};
  CHECK(mst_weight(one, t) == 0.0);
  const std::vector<int> two{0, 2};
  CHECK(mst_weight(two, t) == 7.0);  // shortest-path metric, not raw edge
  const std::vector<int> all{0, 1, 2};
  CHECK(mst_weight(all, t) == 7.0);  // A-B (3) + B-C (4)
  CHECK(mst_edges(all, t).size() == 2);
  CHECK_THROWS_AS(mst_weight(std::span<const int>{}, t), std::runtime_error);
}

#include "apdp/config.hpp"

#include <fstream>
#include <stdexcept>

#include "apdp/protocol.hpp"

namespace apdp {

namespace {

const char* const kConfigFields[] = {
    "format_version", "topologies",      "seed",          "seeds_per_topology",
    "n_tasks",        "w_min",           "w_max",         "t_bid_ms",
    "t_plan_ms",      "plan_iterations", "max_overruns",  "roster",
    "companies",      "fleets_visible",  "out_dir",
};

}  // namespace

RunConfig config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw std::runtime_error("config document: root must be an object");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    bool known = false;
    for (const char* f : kConfigFields) {
      if (it.key() == f) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw std::runtime_error("config document: unknown field '" + it.key() + "'");
    }
  }
  RunConfig cfg;
  if (doc.contains("topologies")) {
    cfg.topologies = doc["topologies"].get<std::vector<std::string>>();
  }
  if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("seeds_per_topology")) {
    cfg.seeds_per_topology = doc["seeds_per_topology"].get<int>();
  }
  if (doc.contains("n_tasks")) cfg.n_tasks = doc["n_tasks"].get<int>();
  if (doc.contains("w_min")) cfg.w_min = doc["w_min"].get<double>();
  if (doc.contains("w_max")) cfg.w_max = doc["w_max"].get<double>();
  if (doc.contains("t_bid_ms")) cfg.t_bid_ms = doc["t_bid_ms"].get<std::int64_t>();
  if (doc.contains("t_plan_ms")) cfg.t_plan_ms = doc["t_plan_ms"].get<std::int64_t>();
  if (doc.contains("plan_iterations")) {
    cfg.plan_iterations = doc["plan_iterations"].get<std::uint64_t>();
  }
  if (doc.contains("max_overruns")) cfg.max_overruns = doc["max_overruns"].get<int>();
  if (doc.contains("roster")) cfg.roster = doc["roster"].get<std::vector<std::string>>();
  if (doc.contains("companies")) {
    for (const auto& c : doc["companies"]) cfg.companies.push_back(company_from_json(c));
  }
  if (doc.contains("fleets_visible")) cfg.fleets_visible = doc["fleets_visible"].get<bool>();
  if (doc.contains("out_dir")) cfg.out_dir = doc["out_dir"].get<std::string>();

  if (cfg.n_tasks < 0) throw std::runtime_error("config document: n_tasks must be >= 0");
  if (cfg.t_bid_ms <= 0 || cfg.t_plan_ms <= 0) {
    throw std::runtime_error("config document: deadlines must be positive");
  }
  if (!(cfg.w_min > 0.0) || cfg.w_min > cfg.w_max) {
    throw std::runtime_error("config document: need 0 < w_min <= w_max");
  }
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config document '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    throw std::runtime_error("malformed config document '" + path + "': " + e.what());
  }
  return config_from_json(doc);
}

nlohmann::json config_to_json(const RunConfig& cfg) {
  nlohmann::json companies = nlohmann::json::array();
  for (const Company& c : cfg.companies) companies.push_back(company_to_json(c));
  return {{"format_version", 1},
          {"topologies", cfg.topologies},
          {"seed", cfg.seed},
          {"seeds_per_topology", cfg.seeds_per_topology},
          {"n_tasks", cfg.n_tasks},
          {"w_min", cfg.w_min},
          {"w_max", cfg.w_max},
          {"t_bid_ms", cfg.t_bid_ms},
          {"t_plan_ms", cfg.t_plan_ms},
          {"plan_iterations", cfg.plan_iterations},
          {"max_overruns", cfg.max_overruns},
          {"roster", cfg.roster},
          {"companies", std::move(companies)},
          {"fleets_visible", cfg.fleets_visible},
          {"out_dir", cfg.out_dir}};
}

std::vector<Company> default_companies(const Topology& topo, int n_companies) {
  // Capacities let two mid-weight tasks share the small truck and several
  // the large one; per-km costs differ slightly across companies so the
  // two seats are genuinely asymmetric.
  static constexpr double kCapacities[2] = {30.0, 54.0};
  static constexpr double kCosts[2][2] = {{4.0, 3.0}, {3.8, 3.2}};
  const int n = topo.n_cities();
  std::vector<Company> out;
  for (int c = 0; c < n_companies; ++c) {
    Company company;
    company.id = c;
    for (int j = 0; j < 2; ++j) {
      Vehicle v;
      v.id = j;
      v.home = ((c * 2 + j) * n) / (n_companies * 2);
      v.capacity = kCapacities[j];
      v.cost_per_km = kCosts[c % 2][j];
      company.vehicles.push_back(v);
    }
    out.push_back(std::move(company));
  }
  return out;
}

MatchConfig make_match_config(const RunConfig& cfg, const Topology& topo) {
  MatchConfig m;
  m.topo = &topo;
  m.n_tasks = cfg.n_tasks;
  m.w_min = cfg.w_min;
  m.w_max = cfg.w_max;
  m.t_bid_ms = cfg.t_bid_ms;
  m.t_plan_ms = cfg.t_plan_ms;
  m.plan_iterations = cfg.plan_iterations;
  m.max_overruns = cfg.max_overruns;
  m.fleets_visible = cfg.fleets_visible;
  m.companies = cfg.companies.empty() ? default_companies(topo, 2) : cfg.companies;
  return m;
}

AgentFactory make_factory(const std::string& roster_entry) {
  constexpr const char* kExternal = "external:";
  if (roster_entry.rfind(kExternal, 0) == 0) {
    const std::string command = roster_entry.substr(std::string(kExternal).size());
    if (command.empty()) {
      throw std::runtime_error("roster entry '" + roster_entry + "' names no command");
    }
    return make_external_factory(command);
  }
  (void)make_builtin_agent(roster_entry);  // fail fast on unknown names
  return builtin_factory(roster_entry);
}

}  // namespace apdp

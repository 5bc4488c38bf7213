// Command-line front end: single pairings, tournaments, stand-alone
// planning and validation, record replay, and instance sampling.
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "apdp/config.hpp"
#include "apdp/protocol.hpp"

namespace fs = std::filesystem;

namespace {

using nlohmann::json;

json match_to_json(const apdp::MatchResult& m) {
  json agents = json::array();
  for (const apdp::MatchAgentOutcome& a : m.agents) {
    agents.push_back({{"name", a.name},
                      {"company", a.company},
                      {"revenue", a.revenue},
                      {"plan_cost", a.plan_cost},
                      {"profit", a.profit},
                      {"tasks_won", a.tasks_won},
                      {"forfeit", apdp::to_string(a.forfeit)}});
  }
  return {{"type", "match"},
          {"topology", m.topology},
          {"seed", m.seed},
          {"swap", m.swap},
          {"winner", m.winner},
          {"forfeit_decided", m.forfeit_decided},
          {"agents", std::move(agents)}};
}

void print_match(const apdp::MatchResult& m, std::ostream& out) {
  out << "match topology=" << m.topology << " seed=" << m.seed
      << " swap=" << m.swap << "\n";
  for (std::size_t i = 0; i < m.agents.size(); ++i) {
    const apdp::MatchAgentOutcome& a = m.agents[i];
    out << "  seat " << i << "  " << std::left << std::setw(24) << a.name
        << std::right << "  company " << a.company << "  revenue " << std::fixed
        << std::setprecision(2) << std::setw(10) << a.revenue << "  cost "
        << std::setw(10) << a.plan_cost << "  profit " << std::setw(10)
        << a.profit << "  tasks " << std::setw(3) << a.tasks_won;
    if (a.forfeit != apdp::ForfeitCause::None) {
      out << "  FORFEIT(" << apdp::to_string(a.forfeit) << ")";
    }
    out << "\n";
  }
  out.unsetf(std::ios::fixed);
  if (m.winner >= 0) {
    out << "  winner: seat " << m.winner << " ("
        << m.agents[static_cast<std::size_t>(m.winner)].name << ")\n";
  } else {
    out << "  winner: none (every seat forfeited)\n";
  }
}

void print_aggregate(std::span<const apdp::AggregateRow> rows, std::ostream& out) {
  out << std::left << std::setw(24) << "agent" << std::right << std::setw(8)
      << "tourns" << std::setw(12) << "mean_wins" << std::setw(10) << "sd_wins"
      << std::setw(8) << "wins" << std::setw(8) << "losses" << std::setw(10)
      << "win_rate" << "\n";
  for (const apdp::AggregateRow& r : rows) {
    out << std::left << std::setw(24) << r.agent << std::right << std::setw(8)
        << r.tournaments << std::setw(12) << std::fixed << std::setprecision(2)
        << r.mean_wins << std::setw(10) << r.sd_wins << std::setw(8)
        << r.total_wins << std::setw(8) << r.total_losses << std::setw(10)
        << std::setprecision(4) << r.win_rate << "\n";
  }
  out.unsetf(std::ios::fixed);
}

struct Instance {
  apdp::Topology topo;
  std::vector<apdp::Task> tasks;
  std::vector<apdp::Company> companies;
};

Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance document '" + path + "'");
  json doc;
  in >> doc;
  Instance inst{apdp::Topology::from_json(doc.at("topology")), {}, {}};
  for (const auto& t : doc.at("tasks")) inst.tasks.push_back(apdp::task_from_json(t));
  for (const auto& c : doc.at("companies")) {
    inst.companies.push_back(apdp::company_from_json(c));
  }
  if (inst.companies.empty()) {
    throw std::runtime_error("instance document lists no companies");
  }
  return inst;
}

const apdp::Company& pick_company(const Instance& inst, int index) {
  if (index < 0 || static_cast<std::size_t>(index) >= inst.companies.size()) {
    throw std::runtime_error("no company with index " + std::to_string(index));
  }
  return inst.companies[static_cast<std::size_t>(index)];
}

void emit(const json& doc, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << doc.dump(2) << "\n";
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
  out << doc.dump(2) << "\n";
}

int cmd_match(const apdp::RunConfig& cfg, const std::string& agent_a,
              const std::string& agent_b, const std::string& auction_log) {
  const apdp::Topology topo = apdp::resolve_topology(
      cfg.topologies.empty() ? "switzerland" : cfg.topologies.front());
  const apdp::MatchConfig mcfg = apdp::make_match_config(cfg, topo);
  const auto results = apdp::run_pair(apdp::make_factory(agent_a),
                                      apdp::make_factory(agent_b), mcfg, cfg.seed);
  std::optional<std::ofstream> log;
  if (!auction_log.empty()) {
    log.emplace(auction_log);
    if (!*log) throw std::runtime_error("cannot write '" + auction_log + "'");
  }
  for (const apdp::MatchResult& m : results) {
    print_match(m, std::cout);
    if (log) {
      for (const apdp::AuctionObservation& obs : m.ledger.rounds) {
        json line = apdp::observation_to_json(obs);
        line["type"] = "round";
        line["swap"] = m.swap;
        *log << line.dump() << "\n";
      }
      *log << match_to_json(m).dump() << "\n";
    }
  }
  return 0;
}

int cmd_tournament(apdp::RunConfig cfg) {
  if (cfg.topologies.empty()) {
    cfg.topologies = {"switzerland", "france", "great_britain", "netherlands"};
  }
  if (cfg.roster.empty()) {
    cfg.roster = {"naive", "expcost-fixed", "honest", "model-opponent",
                  "risk-seeking"};
  }
  if (cfg.out_dir.empty()) cfg.out_dir = "out";
  fs::create_directories(cfg.out_dir);

  std::vector<apdp::AgentFactory> roster;
  for (const std::string& entry : cfg.roster) {
    roster.push_back(apdp::make_factory(entry));
  }

  std::vector<apdp::Topology> topos;
  for (const std::string& t : cfg.topologies) {
    topos.push_back(apdp::resolve_topology(t));
  }

  std::ofstream rec(fs::path(cfg.out_dir) / "records.jsonl");
  if (!rec) throw std::runtime_error("cannot write records in '" + cfg.out_dir + "'");
  json topo_docs = json::array();
  for (const apdp::Topology& t : topos) topo_docs.push_back(t.to_json());
  rec << json{{"type", "header"},
              {"format_version", 1},
              {"config", apdp::config_to_json(cfg)},
              {"topologies", std::move(topo_docs)}}
             .dump()
      << "\n";

  std::vector<apdp::TournamentTable> tables;
  for (std::size_t ti = 0; ti < topos.size(); ++ti) {
    const apdp::MatchConfig mcfg = apdp::make_match_config(cfg, topos[ti]);
    for (int k = 0; k < cfg.seeds_per_topology; ++k) {
      const std::uint64_t tseed =
          apdp::derive_seed(cfg.seed, {ti, static_cast<std::uint64_t>(k)});
      apdp::TournamentResult result = apdp::run_tournament(roster, mcfg, tseed);
      std::cout << "tournament " << topos[ti].name() << " seed#" << k << " ("
                << result.matches.size() << " matches)\n";
      for (const apdp::MatchResult& m : result.matches) {
        rec << match_to_json(m).dump() << "\n";
      }
      tables.push_back(std::move(result.table));
    }
  }

  const std::vector<apdp::AggregateRow> rows = apdp::aggregate(tables);
  std::ofstream csv(fs::path(cfg.out_dir) / "aggregate.csv");
  csv << "agent,tournaments,mean_wins,sd_wins,total_wins,total_losses,win_rate\n";
  for (const apdp::AggregateRow& r : rows) {
    csv << r.agent << "," << r.tournaments << "," << r.mean_wins << ","
        << r.sd_wins << "," << r.total_wins << "," << r.total_losses << ","
        << r.win_rate << "\n";
  }
  std::cout << "\n";
  print_aggregate(rows, std::cout);
  std::cout << "\nrecords: " << (fs::path(cfg.out_dir) / "records.jsonl").string()
            << "\naggregate: " << (fs::path(cfg.out_dir) / "aggregate.csv").string()
            << "\n";
  return 0;
}

int cmd_replay(const std::string& records_path, long limit) {
  std::ifstream in(records_path);
  if (!in) throw std::runtime_error("cannot open '" + records_path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty record file");
  const json header = json::parse(line);
  if (header.value("type", "") != "header") {
    throw std::runtime_error("record file does not start with a header line");
  }
  const apdp::RunConfig cfg = apdp::config_from_json(header.at("config"));
  std::map<std::string, apdp::Topology> topos;
  for (const auto& doc : header.at("topologies")) {
    apdp::Topology t = apdp::Topology::from_json(doc);
    const std::string name = t.name();
    topos.emplace(name, std::move(t));
  }

  long replayed = 0;
  long mismatches = 0;
  while (std::getline(in, line) && (limit <= 0 || replayed < limit)) {
    if (line.empty()) continue;
    const json m = json::parse(line);
    if (m.value("type", "") != "match") continue;

    const auto it = topos.find(m.at("topology").get<std::string>());
    if (it == topos.end()) {
      throw std::runtime_error("record references topology '" +
                               m.at("topology").get<std::string>() +
                               "' missing from the header");
    }
    const apdp::MatchConfig mcfg = apdp::make_match_config(cfg, it->second);
    const auto& agents = m.at("agents");
    std::vector<apdp::AgentFactory> seats;
    for (const auto& a : agents) {
      seats.push_back(apdp::make_factory(a.at("name").get<std::string>()));
    }
    std::vector<int> assignment;
    for (const auto& a : agents) assignment.push_back(a.at("company").get<int>());

    const apdp::MatchResult rerun =
        apdp::run_match(seats, assignment, mcfg, m.at("seed").get<std::uint64_t>(),
                        m.at("swap").get<int>());
    ++replayed;

    std::vector<std::string> diffs;
    if (rerun.winner != m.at("winner").get<int>()) diffs.push_back("winner");
    if (rerun.forfeit_decided != m.at("forfeit_decided").get<bool>()) {
      diffs.push_back("forfeit_decided");
    }
    for (std::size_t i = 0; i < rerun.agents.size(); ++i) {
      const apdp::MatchAgentOutcome& a = rerun.agents[i];
      const auto& rec = agents.at(i);
      if (a.revenue != rec.at("revenue").get<double>()) diffs.push_back("revenue");
      if (a.plan_cost != rec.at("plan_cost").get<double>()) diffs.push_back("plan_cost");
      if (a.profit != rec.at("profit").get<double>()) diffs.push_back("profit");
      if (a.tasks_won != rec.at("tasks_won").get<int>()) diffs.push_back("tasks_won");
      if (apdp::to_string(a.forfeit) != rec.at("forfeit").get<std::string>()) {
        diffs.push_back("forfeit");
      }
    }
    if (!diffs.empty()) {
      ++mismatches;
      std::cout << "MISMATCH seed=" << m.at("seed").get<std::uint64_t>()
                << " swap=" << m.at("swap").get<int>() << " fields:";
      for (const std::string& d : diffs) std::cout << " " << d;
      std::cout << "\n";
    }
  }
  std::cout << "replayed " << replayed << " matches, " << mismatches
            << " mismatches\n";
  return mismatches == 0 ? 0 : 1;
}

int cmd_plan(const std::string& instance_path, int company_index,
             const std::string& method, std::uint64_t iterations,
             std::uint64_t seed, const std::string& out_path) {
  const Instance inst = load_instance(instance_path);
  const apdp::Company& fleet = pick_company(inst, company_index);
  json result;
  result["method"] = method;
  result["company"] = company_index;

  if (method == "sls") {
    apdp::RngStream rng(seed);
    const apdp::SlsResult sls = apdp::sls_optimize(
        inst.tasks, fleet, inst.topo, apdp::Deadline::iteration_budget(iterations),
        rng);
    result["cost"] = sls.cost;
    result["iterations"] = sls.iterations;
    result["restarts"] = sls.restarts;
    result["plan"] = apdp::plan_to_json(sls.plan);
  } else if (method == "insertion") {
    apdp::Plan plan = apdp::Plan::empty(fleet.vehicles.size());
    for (const apdp::Task& t : inst.tasks) {
      auto ins = apdp::cheapest_insertion(t, plan, fleet, inst.topo);
      if (!ins) {
        throw std::runtime_error("task " + std::to_string(t.id) +
                                 " fits no vehicle");
      }
      plan = std::move(ins->plan);
    }
    result["cost"] = apdp::plan_cost(plan, fleet, inst.topo);
    result["plan"] = apdp::plan_to_json(plan);
  } else if (method == "astar") {
    if (fleet.vehicles.size() != 1) {
      throw std::runtime_error(
          "astar plans one vehicle; pick a single-vehicle company or use sls");
    }
    const apdp::AstarResult best = apdp::astar_optimal(
        inst.tasks, fleet.vehicles.front(), inst.topo, apdp::AstarHeuristic::Mst);
    apdp::Plan plan = apdp::Plan::empty(1);
    plan.routes[0] = best.route;
    result["cost"] = best.cost;
    result["km"] = best.km;
    result["expanded"] = best.expanded;
    result["plan"] = apdp::plan_to_json(plan);
  } else {
    throw std::runtime_error("unknown method '" + method +
                             "' (expected sls, insertion, or astar)");
  }
  emit(result, out_path);
  return 0;
}

int cmd_validate(const std::string& instance_path, const std::string& plan_path,
                 int company_index) {
  const Instance inst = load_instance(instance_path);
  const apdp::Company& fleet = pick_company(inst, company_index);
  std::ifstream in(plan_path);
  if (!in) throw std::runtime_error("cannot open plan document '" + plan_path + "'");
  json doc;
  in >> doc;
  const apdp::Plan plan = apdp::plan_from_json(doc, inst.tasks);

  const apdp::Verdict verdict = apdp::validate_plan(plan, inst.tasks, fleet);
  json out;
  out["ok"] = verdict.ok;
  out["violations"] = json::array();
  for (const apdp::Violation& v : verdict.violations) {
    out["violations"].push_back({{"kind", apdp::to_string(v.kind)},
                                 {"vehicle", v.vehicle},
                                 {"task", v.task},
                                 {"position", v.position}});
  }
  if (verdict.ok) out["cost"] = apdp::plan_cost(plan, fleet, inst.topo);
  std::cout << out.dump(2) << "\n";
  return verdict.ok ? 0 : 1;
}

int cmd_sample(const std::string& topology, int n_tasks, std::uint64_t seed,
               double w_min, double w_max, int n_companies,
               const std::string& out_path) {
  const apdp::Topology topo = apdp::resolve_topology(topology);
  const apdp::TaskDistribution dist(topo, w_min, w_max);
  // Same keying as a match: a pair seeded with `seed` auctions exactly
  // this task sequence.
  apdp::RngStream rng(apdp::derive_seed(seed, {0}));
  json tasks = json::array();
  for (int k = 0; k < n_tasks; ++k) {
    tasks.push_back(apdp::task_to_json(dist.sample(rng, k)));
  }
  json companies = json::array();
  for (const apdp::Company& c : apdp::default_companies(topo, n_companies)) {
    companies.push_back(apdp::company_to_json(c));
  }
  emit({{"format_version", 1},
        {"topology", topo.to_json()},
        {"tasks", std::move(tasks)},
        {"companies", std::move(companies)}},
       out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Auction-based delivery: matches, tournaments, planning"};
  app.require_subcommand(1);

  apdp::RunConfig cfg;
  std::string config_path;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config document (flags override it)");
    sub->add_option("--seed", cfg.seed, "Master seed");
    sub->add_option("--tasks", cfg.n_tasks, "Tasks auctioned per match");
    sub->add_option("--t-bid", cfg.t_bid_ms, "Bid deadline, ms");
    sub->add_option("--t-plan", cfg.t_plan_ms, "Setup and final-plan deadline, ms");
    sub->add_option("--plan-iterations", cfg.plan_iterations,
                    "Deterministic planning budget");
    sub->add_flag("--fleets-visible", cfg.fleets_visible,
                  "Reveal full opponent fleets to agents");
  };

  // match
  auto* match = app.add_subcommand("match", "Run one pairing (both swaps)");
  std::string agent_a, agent_b, auction_log;
  std::string match_topology = "switzerland";
  match->add_option("agent_a", agent_a, "First seat")->required();
  match->add_option("agent_b", agent_b, "Second seat")->required();
  match->add_option("--topology", match_topology, "Bundled map name or JSON path")
      ->capture_default_str();
  match->add_option("--auction-log", auction_log,
                    "Write every round and outcome as JSON lines");
  add_common(match);

  // tournament
  auto* tour = app.add_subcommand("tournament", "Double all-play-all tournaments");
  std::vector<std::string> tour_topologies, tour_roster;
  tour->add_option("--topology", tour_topologies,
                   "Map to run on (repeatable; default: all bundled)");
  tour->add_option("--agent", tour_roster,
                   "Roster entry (repeatable; default: the five bidders)");
  tour->add_option("--seeds-per-topology", cfg.seeds_per_topology,
                   "Tournaments per map");
  tour->add_option("--out", cfg.out_dir, "Output directory (default: out)");
  add_common(tour);

  // replay
  auto* replay = app.add_subcommand("replay", "Re-run recorded matches and compare");
  std::string records_path;
  long replay_limit = 0;
  replay->add_option("records", records_path, "records.jsonl from a tournament run")
      ->required();
  replay->add_option("--limit", replay_limit, "Replay at most this many matches");

  // plan
  auto* plan = app.add_subcommand("plan", "Plan an instance document");
  std::string inst_path, plan_method = "sls", plan_out;
  int plan_company = 0;
  std::uint64_t plan_iters = 20000, plan_seed = 1;
  plan->add_option("instance", inst_path, "Instance document")->required();
  plan->add_option("--company", plan_company, "Company index")->capture_default_str();
  plan->add_option("--method", plan_method, "sls | insertion | astar")
      ->capture_default_str();
  plan->add_option("--iterations", plan_iters, "Search budget")->capture_default_str();
  plan->add_option("--seed", plan_seed, "Search seed")->capture_default_str();
  plan->add_option("--out", plan_out, "Write JSON here instead of stdout");

  // validate
  auto* val = app.add_subcommand("validate", "Check a plan against an instance");
  std::string val_inst, val_plan;
  int val_company = 0;
  val->add_option("instance", val_inst, "Instance document")->required();
  val->add_option("plan", val_plan, "Plan document")->required();
  val->add_option("--company", val_company, "Company index")->capture_default_str();

  // sample-tasks
  auto* sample = app.add_subcommand("sample-tasks", "Emit a sampled instance document");
  std::string sample_topology = "switzerland", sample_out;
  int sample_n = 10, sample_companies = 2;
  std::uint64_t sample_seed = 1;
  double sample_wmin = 3.0, sample_wmax = 30.0;
  sample->add_option("--topology", sample_topology, "Bundled map name or JSON path")
      ->capture_default_str();
  sample->add_option("--tasks", sample_n, "Number of tasks")->capture_default_str();
  sample->add_option("--seed", sample_seed, "Task stream seed")->capture_default_str();
  sample->add_option("--w-min", sample_wmin, "Minimum weight, kg")->capture_default_str();
  sample->add_option("--w-max", sample_wmax, "Maximum weight, kg")->capture_default_str();
  sample->add_option("--companies", sample_companies, "Derived fleets to include")
      ->capture_default_str();
  sample->add_option("--out", sample_out, "Write JSON here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) {
      apdp::RunConfig loaded = apdp::load_config_file(config_path);
      // Flags the user actually passed win over the file.
      const apdp::RunConfig flag_defaults;
      if (cfg.seed != flag_defaults.seed) loaded.seed = cfg.seed;
      if (cfg.n_tasks != flag_defaults.n_tasks) loaded.n_tasks = cfg.n_tasks;
      if (cfg.t_bid_ms != flag_defaults.t_bid_ms) loaded.t_bid_ms = cfg.t_bid_ms;
      if (cfg.t_plan_ms != flag_defaults.t_plan_ms) loaded.t_plan_ms = cfg.t_plan_ms;
      if (cfg.plan_iterations != flag_defaults.plan_iterations) {
        loaded.plan_iterations = cfg.plan_iterations;
      }
      if (cfg.fleets_visible) loaded.fleets_visible = true;
      if (cfg.seeds_per_topology != flag_defaults.seeds_per_topology) {
        loaded.seeds_per_topology = cfg.seeds_per_topology;
      }
      if (!cfg.out_dir.empty()) loaded.out_dir = cfg.out_dir;
      cfg = std::move(loaded);
    }

    if (match->parsed()) {
      if (match->count("--topology") > 0 || cfg.topologies.empty()) {
        cfg.topologies = {match_topology};
      }
      return cmd_match(cfg, agent_a, agent_b, auction_log);
    }
    if (tour->parsed()) {
      if (!tour_topologies.empty()) cfg.topologies = tour_topologies;
      if (!tour_roster.empty()) cfg.roster = tour_roster;
      return cmd_tournament(cfg);
    }
    if (replay->parsed()) return cmd_replay(records_path, replay_limit);
    if (plan->parsed()) {
      return cmd_plan(inst_path, plan_company, plan_method, plan_iters, plan_seed,
                      plan_out);
    }
    if (val->parsed()) return cmd_validate(val_inst, val_plan, val_company);
    if (sample->parsed()) {
      return cmd_sample(sample_topology, sample_n, sample_seed, sample_wmin,
                        sample_wmax, sample_companies, sample_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

#include "apdp/tournament.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace apdp {

AgentFactory builtin_factory(const std::string& name) {
  return {name, [name] { return make_builtin_agent(name); }};
}

std::string to_string(ForfeitCause cause) {
  switch (cause) {
    case ForfeitCause::None: return "none";
    case ForfeitCause::Crash: return "crash";
    case ForfeitCause::Timeout: return "timeout";
    case ForfeitCause::InvalidPlan: return "invalid-plan";
  }
  return "?";
}

namespace {

std::int64_t elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

MatchResult run_match(std::span<const AgentFactory> seats,
                      std::span<const int> assignment, const MatchConfig& cfg,
                      std::uint64_t seed, int swap) {
  const std::size_t n = seats.size();
  if (assignment.size() != n) {
    throw std::invalid_argument("run_match: one company assignment per seat");
  }
  for (const Company& c : cfg.companies) check_company(c);

  MatchResult result;
  result.seed = seed;
  result.swap = swap;
  result.topology = cfg.topo->name();

  const TaskDistribution dist(*cfg.topo, cfg.w_min, cfg.w_max);
  RngStream task_rng(derive_seed(seed, {0}));
  RngStream coin_rng(derive_seed(seed, {1}));
  std::vector<Task> tasks;
  tasks.reserve(static_cast<std::size_t>(cfg.n_tasks));
  for (int k = 0; k < cfg.n_tasks; ++k) {
    tasks.push_back(dist.sample(task_rng, k));
  }

  std::vector<std::unique_ptr<Agent>> agents;
  std::vector<AgentStatus> status(n);
  std::vector<ForfeitCause> cause(n, ForfeitCause::None);
  result.agents.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    agents.push_back(seats[i].make());
    result.agents[i].name = seats[i].name;
    result.agents[i].company = assignment[i];

    AgentContext ctx;
    ctx.topo = cfg.topo;
    ctx.dist = &dist;
    ctx.self_id = static_cast<int>(i);
    ctx.own = cfg.companies[static_cast<std::size_t>(assignment[i])];
    for (std::size_t j = 0; j < n; ++j) {
      const auto& fleet = cfg.companies[static_cast<std::size_t>(assignment[j])];
      ctx.fleet_sizes.push_back(static_cast<int>(fleet.vehicles.size()));
      if (cfg.fleets_visible) ctx.fleets.push_back(fleet);
    }
    ctx.fleets_visible = cfg.fleets_visible;
    ctx.t_bid_ms = cfg.t_bid_ms;
    ctx.t_plan_ms = cfg.t_plan_ms;
    // Keyed by company, not seat: the swapped match hands each company's
    // stream to whichever agent controls it, mirroring the pair exactly.
    ctx.rng_seed = derive_seed(seed, {2, static_cast<std::uint64_t>(assignment[i])});
    ctx.plan_iterations = cfg.plan_iterations;

    const auto start = std::chrono::steady_clock::now();
    try {
      agents[i]->setup(ctx);
      if (elapsed_ms(start) > cfg.t_plan_ms) {
        status[i].timed_out = true;
        cause[i] = ForfeitCause::Timeout;
      }
    } catch (const std::exception&) {
      // A throw after the deadline (e.g. a subprocess that never answered)
      // is a timeout, not a crash.
      if (elapsed_ms(start) > cfg.t_plan_ms) {
        status[i].timed_out = true;
        cause[i] = ForfeitCause::Timeout;
      } else {
        status[i].crashed = true;
        cause[i] = ForfeitCause::Crash;
      }
    }
  }

  std::vector<Agent*> raw;
  for (const auto& a : agents) raw.push_back(a.get());
  AuctionConfig auction_cfg;
  auction_cfg.t_bid_ms = cfg.t_bid_ms;
  auction_cfg.max_overruns = cfg.max_overruns;
  result.ledger = run_auction(tasks, raw, status, auction_cfg, coin_rng);

  for (std::size_t i = 0; i < n; ++i) {
    if (cause[i] == ForfeitCause::None) {
      if (status[i].crashed) cause[i] = ForfeitCause::Crash;
      if (status[i].timed_out) cause[i] = ForfeitCause::Timeout;
    }
    result.agents[i].revenue = result.ledger.revenue[i];
    result.agents[i].tasks_won = static_cast<int>(result.ledger.won[i].size());
  }

  for (std::size_t i = 0; i < n; ++i) {
    MatchAgentOutcome& out = result.agents[i];
    const Company& fleet = cfg.companies[static_cast<std::size_t>(assignment[i])];
    if (cause[i] == ForfeitCause::None) {
      const Deadline deadline = Deadline::budget(cfg.plan_iterations, cfg.t_plan_ms);
      const auto start = std::chrono::steady_clock::now();
      try {
        const Plan plan = agents[i]->final_plan(result.ledger.won[i], deadline);
        if (elapsed_ms(start) > cfg.t_plan_ms) {
          cause[i] = ForfeitCause::Timeout;
        } else {
          const Verdict verdict = validate_plan(plan, result.ledger.won[i], fleet);
          if (verdict.ok) {
            out.plan_cost = plan_cost(plan, fleet, *cfg.topo);
          } else {
            cause[i] = ForfeitCause::InvalidPlan;
          }
        }
      } catch (const std::invalid_argument&) {
        cause[i] = ForfeitCause::InvalidPlan;  // structurally broken plan
      } catch (const std::exception&) {
        cause[i] = elapsed_ms(start) > cfg.t_plan_ms ? ForfeitCause::Timeout
                                                     : ForfeitCause::Crash;
      }
    }
    out.forfeit = cause[i];
    out.profit = company_profit(out.revenue, out.plan_cost);
  }

  std::vector<int> standing;
  for (std::size_t i = 0; i < n; ++i) {
    if (cause[i] == ForfeitCause::None) standing.push_back(static_cast<int>(i));
  }
  result.forfeit_decided = standing.size() < n;
  if (standing.empty()) {
    result.winner = -1;  // everyone forfeited; a loss all round
  } else if (standing.size() == 1) {
    result.winner = standing[0];
  } else {
    std::vector<int> best;
    for (const int i : standing) {
      const double p = result.agents[static_cast<std::size_t>(i)].profit;
      if (best.empty() ||
          p > result.agents[static_cast<std::size_t>(best[0])].profit) {
        best.assign(1, i);
      } else if (p == result.agents[static_cast<std::size_t>(best[0])].profit) {
        best.push_back(i);
      }
    }
    result.winner =
        best.size() == 1 ? best[0] : best[coin_rng.uniform_int(best.size())];
  }
  return result;
}

std::array<MatchResult, 2> run_pair(const AgentFactory& a, const AgentFactory& b,
                                    const MatchConfig& cfg, std::uint64_t seed) {
  const AgentFactory seats[2] = {a, b};
  const int forward[2] = {0, 1};
  const int swapped[2] = {1, 0};
  return {run_match(seats, forward, cfg, seed, 0),
          run_match(seats, swapped, cfg, seed, 1)};
}

TournamentResult run_tournament(std::span<const AgentFactory> roster,
                                const MatchConfig& cfg, std::uint64_t seed) {
  if (roster.size() < 2) {
    throw std::invalid_argument("a tournament needs at least two agents");
  }
  TournamentResult out;
  for (const AgentFactory& f : roster) {
    out.table.agents.push_back(f.name);
  }
  out.table.wins.assign(roster.size(), 0);
  out.table.losses.assign(roster.size(), 0);

  std::uint64_t pair_index = 0;
  for (std::size_t i = 0; i < roster.size(); ++i) {
    for (std::size_t j = i + 1; j < roster.size(); ++j, ++pair_index) {
      const std::uint64_t pair_seed = derive_seed(seed, {pair_index});
      auto results = run_pair(roster[i], roster[j], cfg, pair_seed);
      for (MatchResult& m : results) {
        const std::size_t seat_to_roster[2] = {i, j};
        if (m.winner >= 0) {
          out.table.wins[seat_to_roster[static_cast<std::size_t>(m.winner)]]++;
          out.table.losses[seat_to_roster[static_cast<std::size_t>(1 - m.winner)]]++;
        } else {
          out.table.losses[i]++;
          out.table.losses[j]++;
        }
        out.matches.push_back(std::move(m));
      }
    }
  }
  return out;
}

std::vector<AggregateRow> aggregate(std::span<const TournamentTable> tables) {
  if (tables.empty()) throw std::invalid_argument("aggregate: no tournaments");
  const auto& roster = tables.front().agents;
  for (const TournamentTable& t : tables) {
    if (t.agents != roster) {
      throw std::invalid_argument("aggregate: tournaments ran different rosters");
    }
  }

  std::vector<AggregateRow> rows;
  const auto n_tours = static_cast<double>(tables.size());
  for (std::size_t a = 0; a < roster.size(); ++a) {
    AggregateRow row;
    row.agent = roster[a];
    row.tournaments = static_cast<int>(tables.size());
    for (const TournamentTable& t : tables) {
      row.total_wins += t.wins[a];
      row.total_losses += t.losses[a];
    }
    row.mean_wins = static_cast<double>(row.total_wins) / n_tours;
    double ss = 0.0;
    for (const TournamentTable& t : tables) {
      const double d = static_cast<double>(t.wins[a]) - row.mean_wins;
      ss += d * d;
    }
    row.sd_wins = std::sqrt(ss / n_tours);
    const long played = row.total_wins + row.total_losses;
    row.win_rate =
        played > 0 ? static_cast<double>(row.total_wins) / static_cast<double>(played)
                   : 0.0;
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const AggregateRow& x, const AggregateRow& y) {
    if (x.win_rate != y.win_rate) return x.win_rate > y.win_rate;
    return x.agent < y.agent;
  });
  return rows;
}

}  // namespace apdp

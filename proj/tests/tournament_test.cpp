#include <array>

#include "apdp/config.hpp"
#include "apdp/tournament.hpp"
#include "doctest.h"
#include "testutil.hpp"

using namespace apdp;

namespace {

struct Fixture {
  Topology topo;
  MatchConfig cfg;

  static Topology make_topo(std::uint64_t seed, int n_cities) {
    RngStream rng(seed);
    return testutil::make_random_topology(rng, n_cities, 4);
  }

  explicit Fixture(std::uint64_t topo_seed = 404, int n_cities = 8)
      : topo(make_topo(topo_seed, n_cities)) {
    cfg.topo = &topo;
    cfg.n_tasks = 8;
    cfg.w_min = 3.0;
    cfg.w_max = 20.0;
    cfg.plan_iterations = 200;
    cfg.companies = default_companies(topo, 2);
  }
};

nlohmann::json ledger_digest(const AuctionLedger& ledger) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& obs : ledger.rounds) rounds.push_back(observation_to_json(obs));
  return rounds;
}

void check_outcomes_equal(const MatchAgentOutcome& a, const MatchAgentOutcome& b) {
  CHECK(a.name == b.name);
  CHECK(a.company == b.company);
  CHECK(a.revenue == b.revenue);
  CHECK(a.plan_cost == b.plan_cost);
  CHECK(a.profit == b.profit);
  CHECK(a.tasks_won == b.tasks_won);
  CHECK(a.forfeit == b.forfeit);
}

}  // namespace

TEST_CASE("a match replays byte-identically from its seed") {
  const Fixture f;
  const AgentFactory seats[2] = {builtin_factory("honest"), builtin_factory("naive")};
  const int assignment[2] = {0, 1};
  const MatchResult a = run_match(seats, assignment, f.cfg, 9001, 0);
  const MatchResult b = run_match(seats, assignment, f.cfg, 9001, 0);

  CHECK(a.winner == b.winner);
  CHECK(a.forfeit_decided == b.forfeit_decided);
  REQUIRE(a.agents.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) check_outcomes_equal(a.agents[i], b.agents[i]);
  CHECK(ledger_digest(a.ledger).dump() == ledger_digest(b.ledger).dump());
}

TEST_CASE("profit is revenue minus plan cost, and the books balance") {
  const Fixture f;
  const AgentFactory seats[2] = {builtin_factory("honest"), builtin_factory("naive")};
  const int assignment[2] = {0, 1};
  const MatchResult m = run_match(seats, assignment, f.cfg, 31337, 0);

  int tasks_accounted = 0;
  for (std::size_t i = 0; i < 2; ++i) {
    const MatchAgentOutcome& out = m.agents[i];
    CHECK(out.profit == out.revenue - out.plan_cost);
    double rev = 0.0;
    int won = 0;
    for (const auto& obs : m.ledger.rounds) {
      if (obs.winner == static_cast<int>(i)) {
        rev += obs.price;
        ++won;
      }
    }
    CHECK(out.revenue == rev);  // exact: both folds run in round order
    CHECK(out.tasks_won == won);
    tasks_accounted += won;
  }
  CHECK(tasks_accounted <= f.cfg.n_tasks);
  CHECK(static_cast<int>(m.ledger.rounds.size()) == f.cfg.n_tasks);
}

TEST_CASE("swapping companies replays the mirror image of the pair") {
  const Fixture f;
  const auto pair =
      run_pair(builtin_factory("honest"), builtin_factory("honest"), f.cfg, 5551);
  const MatchResult& fwd = pair[0];
  const MatchResult& rev = pair[1];

  REQUIRE(fwd.agents.size() == 2);
  REQUIRE(rev.agents.size() == 2);
  CHECK(fwd.swap == 0);
  CHECK(rev.swap == 1);
  CHECK(fwd.seed == rev.seed);
  // Seat s in the forward match controls company s; in the swapped match
  // that same company sits at seat 1-s. Identical agents plus company-keyed
  // streams make the two matches company-for-company identical.
  check_outcomes_equal(fwd.agents[0], rev.agents[1]);
  check_outcomes_equal(fwd.agents[1], rev.agents[0]);
  REQUIRE(fwd.winner >= 0);
  REQUIRE(rev.winner >= 0);
  CHECK(fwd.agents[static_cast<std::size_t>(fwd.winner)].company ==
        rev.agents[static_cast<std::size_t>(rev.winner)].company);
}

TEST_CASE("every forfeit cause maps to the right misbehaviour") {
  Fixture f;
  SUBCASE("a bid-time crash forfeits as a crash") {
    const auto pair =
        run_pair(builtin_factory("crasher"), builtin_factory("honest"), f.cfg, 77);
    for (const MatchResult& m : pair) {
      const int crasher_seat = m.agents[0].name == "crasher" ? 0 : 1;
      CHECK(m.agents[static_cast<std::size_t>(crasher_seat)].forfeit ==
            ForfeitCause::Crash);
      CHECK(m.forfeit_decided);
      CHECK(m.winner == 1 - crasher_seat);
      CHECK(m.agents[static_cast<std::size_t>(1 - crasher_seat)].forfeit ==
            ForfeitCause::None);
    }
  }
  SUBCASE("oversleeping the planning deadline forfeits as a timeout") {
    f.cfg.t_plan_ms = 200;
    f.cfg.plan_iterations = 100;
    const auto pair =
        run_pair(builtin_factory("slowpoke"), builtin_factory("honest"), f.cfg, 78);
    for (const MatchResult& m : pair) {
      const int slow_seat = m.agents[0].name == "slowpoke" ? 0 : 1;
      CHECK(m.agents[static_cast<std::size_t>(slow_seat)].forfeit ==
            ForfeitCause::Timeout);
      CHECK(m.winner == 1 - slow_seat);
    }
  }
  SUBCASE("dropping a won task forfeits as an invalid plan") {
    const auto pair =
        run_pair(builtin_factory("bad-planner"), builtin_factory("abstain"), f.cfg, 79);
    for (const MatchResult& m : pair) {
      const int bad_seat = m.agents[0].name == "bad-planner" ? 0 : 1;
      // bad-planner wins every round against an abstainer, then omits one.
      CHECK(m.agents[static_cast<std::size_t>(bad_seat)].tasks_won == f.cfg.n_tasks);
      CHECK(m.agents[static_cast<std::size_t>(bad_seat)].forfeit ==
            ForfeitCause::InvalidPlan);
      CHECK(m.winner == 1 - bad_seat);
    }
  }
  SUBCASE("when everyone forfeits there is no winner") {
    const auto pair =
        run_pair(builtin_factory("crasher"), builtin_factory("crasher"), f.cfg, 80);
    for (const MatchResult& m : pair) {
      CHECK(m.winner == -1);
      CHECK(m.forfeit_decided);
      CHECK(m.agents[0].forfeit == ForfeitCause::Crash);
      CHECK(m.agents[1].forfeit == ForfeitCause::Crash);
    }
  }
}

TEST_CASE("a forfeited winner still reports zero plan cost") {
  // The crasher wins early rounds cheaply, then crashes: its revenue stays
  // on the books but no plan is costed, and it loses by forfeit.
  const Fixture f;
  const AgentFactory seats[2] = {builtin_factory("crasher"), builtin_factory("abstain")};
  const int assignment[2] = {0, 1};
  const MatchResult m = run_match(seats, assignment, f.cfg, 81, 0);
  CHECK(m.agents[0].forfeit == ForfeitCause::Crash);
  CHECK(m.agents[0].tasks_won == 2);  // bids 1.0 twice before keeling over
  CHECK(m.agents[0].plan_cost == 0.0);
  CHECK(m.winner == 1);
}

TEST_CASE("a double all-play-all schedules n(n-1) matches") {
  const Fixture f;

  SUBCASE("two agents") {
    const AgentFactory roster[2] = {builtin_factory("honest"), builtin_factory("naive")};
    const TournamentResult r = run_tournament(roster, f.cfg, 42);
    CHECK(r.matches.size() == 2);
    CHECK(r.table.wins[0] + r.table.losses[0] == 2);
    CHECK(r.table.wins[1] + r.table.losses[1] == 2);
  }
  SUBCASE("five agents") {
    const AgentFactory roster[5] = {
        builtin_factory("naive"), builtin_factory("expcost-fixed"),
        builtin_factory("honest"), builtin_factory("abstain"),
        builtin_factory("crasher")};
    const TournamentResult r = run_tournament(roster, f.cfg, 43);
    CHECK(r.matches.size() == 20);  // 10 unordered pairs, two swaps each
    int total_wins = 0, total_losses = 0;
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(r.table.wins[i] + r.table.losses[i] == 8);  // 2(n-1) appearances
      total_wins += r.table.wins[i];
      total_losses += r.table.losses[i];
    }
    CHECK(total_wins + total_losses == 40);
    CHECK(total_wins <= 20);  // every match yields at most one win
    // The crasher forfeits everything it plays.
    CHECK(r.table.wins[4] == 0);
    CHECK(r.table.losses[4] == 8);
  }
  SUBCASE("a one-agent tournament is refused") {
    const AgentFactory roster[1] = {builtin_factory("honest")};
    CHECK_THROWS_AS(run_tournament(roster, f.cfg, 44), std::invalid_argument);
  }
}

TEST_CASE("tournament reruns are exact") {
  const Fixture f;
  const AgentFactory roster[3] = {builtin_factory("honest"), builtin_factory("naive"),
                                  builtin_factory("expcost-fixed")};
  const TournamentResult a = run_tournament(roster, f.cfg, 4242);
  const TournamentResult b = run_tournament(roster, f.cfg, 4242);
  CHECK(a.table.wins == b.table.wins);
  CHECK(a.table.losses == b.table.losses);
  REQUIRE(a.matches.size() == b.matches.size());
  for (std::size_t k = 0; k < a.matches.size(); ++k) {
    CHECK(a.matches[k].winner == b.matches[k].winner);
    for (std::size_t i = 0; i < 2; ++i) {
      check_outcomes_equal(a.matches[k].agents[i], b.matches[k].agents[i]);
    }
  }
}

TEST_CASE("malformed match setups are rejected") {
  Fixture f;
  const AgentFactory seats[2] = {builtin_factory("honest"), builtin_factory("naive")};
  SUBCASE("assignment width must match the seats") {
    const int assignment[1] = {0};
    CHECK_THROWS_AS(run_match(seats, assignment, f.cfg, 1, 0), std::invalid_argument);
  }
  SUBCASE("companies are checked before play") {
    f.cfg.companies[0].vehicles.clear();
    const int assignment[2] = {0, 1};
    CHECK_THROWS_AS(run_match(seats, assignment, f.cfg, 1, 0), std::invalid_argument);
  }
}

TEST_CASE("cross-tournament aggregation reproduces the summary arithmetic") {
  TournamentTable t1;
  t1.agents = {"a", "b"};
  t1.wins = {3, 1};
  t1.losses = {1, 3};
  TournamentTable t2;
  t2.agents = {"a", "b"};
  t2.wins = {2, 2};
  t2.losses = {2, 2};
  const std::array<TournamentTable, 2> tables{t1, t2};
  const auto rows = aggregate(tables);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].agent == "a");  // higher win rate sorts first
  CHECK(rows[0].tournaments == 2);
  CHECK(rows[0].total_wins == 5);
  CHECK(rows[0].total_losses == 3);
  CHECK(rows[0].mean_wins == 2.5);
  CHECK(rows[0].sd_wins == 0.5);  // population SD of {3, 2}
  CHECK(rows[0].win_rate == 5.0 / 8.0);
  CHECK(rows[1].agent == "b");
  CHECK(rows[1].win_rate == 3.0 / 8.0);

  SUBCASE("ties in win rate fall back to name order") {
    TournamentTable even;
    even.agents = {"z", "y"};
    even.wins = {2, 2};
    even.losses = {2, 2};
    const std::array<TournamentTable, 1> one{even};
    const auto sorted = aggregate(one);
    CHECK(sorted[0].agent == "y");
    CHECK(sorted[1].agent == "z");
  }
  SUBCASE("mismatched rosters are refused") {
    TournamentTable other;
    other.agents = {"a", "c"};
    other.wins = {1, 1};
    other.losses = {1, 1};
    const std::array<TournamentTable, 2> bad{t1, other};
    CHECK_THROWS_AS(aggregate(bad), std::invalid_argument);
  }
  SUBCASE("aggregating nothing is an error") {
    CHECK_THROWS_AS(aggregate({}), std::invalid_argument);
  }
}

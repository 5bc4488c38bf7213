#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

#include "apdp/auction.hpp"
#include "doctest.h"
#include "testutil.hpp"

using namespace apdp;

namespace {

// Fully scripted participant: bids via a callback and records everything
// the engine tells it, so tests can assert on ordering and exclusion.
class Scripted final : public Agent {
 public:
  explicit Scripted(std::function<std::optional<double>(const Task&, int)> bidder)
      : bidder_(std::move(bidder)) {}

  std::string name() const override { return "scripted"; }
  void setup(const AgentContext&) override {}

  std::optional<double> ask_bid(const Task& task) override {
    seen_at_ask.push_back(static_cast<int>(seen.size()));
    return bidder_(task, asks++);
  }

  void observe(const AuctionObservation& obs) override {
    if (observe_throws_at >= 0 && static_cast<int>(seen.size()) == observe_throws_at) {
      throw std::runtime_error("scripted: observe failure");
    }
    seen.push_back(obs);
  }

  Plan final_plan(std::span<const Task>, const Deadline&) override {
    return Plan::empty(1);
  }

  int asks = 0;
  std::vector<int> seen_at_ask;
  std::vector<AuctionObservation> seen;
  int observe_throws_at = -1;

 private:
  std::function<std::optional<double>(const Task&, int)> bidder_;
};

std::optional<double> constant(double v) { return v; }

std::vector<Task> some_tasks(int n) {
  std::vector<Task> tasks;
  for (int i = 0; i < n; ++i) tasks.push_back(Task{i, 0, 1, 5.0});
  return tasks;
}

}  // namespace

TEST_CASE("the lowest bid wins and pays itself") {
  Scripted a([](const Task&, int) { return constant(5.0); });
  Scripted b([](const Task&, int) { return constant(3.0); });
  Scripted c([](const Task&, int) { return constant(7.0); });
  std::vector<Agent*> agents{&a, &b, &c};
  std::vector<AgentStatus> status(3);
  RngStream coin(1);
  const AuctionObservation obs = run_auction_round(
      Task{0, 0, 1, 5.0}, 0, agents, status, AuctionConfig{}, coin);
  CHECK(obs.winner == 1);
  CHECK(obs.price == 3.0);
  REQUIRE(obs.bids.size() == 3);
  CHECK(obs.bids[0] == 5.0);
  CHECK(obs.bids[1] == 3.0);
  CHECK(obs.bids[2] == 7.0);
}

TEST_CASE("a sole bidder wins at its own price; silence discards the task") {
  Scripted quiet1([](const Task&, int) { return std::nullopt; });
  Scripted quiet2([](const Task&, int) { return std::nullopt; });
  Scripted lone([](const Task&, int) { return constant(42.0); });
  std::vector<AgentStatus> status(3);
  RngStream coin(1);

  SUBCASE("one bid stands alone") {
    std::vector<Agent*> agents{&quiet1, &lone, &quiet2};
    const AuctionObservation obs = run_auction_round(
        Task{0, 0, 1, 5.0}, 0, agents, status, AuctionConfig{}, coin);
    CHECK(obs.winner == 1);
    CHECK(obs.price == 42.0);
  }
  SUBCASE("everyone abstains") {
    std::vector<Agent*> agents{&quiet1, &quiet2};
    std::vector<AgentStatus> two(2);
    const AuctionObservation obs = run_auction_round(
        Task{0, 0, 1, 5.0}, 0, agents, two, AuctionConfig{}, coin);
    CHECK(obs.winner == -1);
    CHECK(obs.price == 0.0);
  }
}

TEST_CASE("non-finite and negative bids count as abstentions") {
  Scripted neg([](const Task&, int) { return constant(-2.0); });
  Scripted nan([](const Task&, int) { return constant(std::nan("")); });
  Scripted inf([](const Task&, int) { return constant(std::numeric_limits<double>::infinity()); });
  Scripted ok([](const Task&, int) { return constant(9.0); });
  std::vector<Agent*> agents{&neg, &nan, &inf, &ok};
  std::vector<AgentStatus> status(4);
  RngStream coin(1);
  const AuctionObservation obs = run_auction_round(
      Task{0, 0, 1, 5.0}, 0, agents, status, AuctionConfig{}, coin);
  CHECK(!obs.bids[0].has_value());
  CHECK(!obs.bids[1].has_value());
  CHECK(!obs.bids[2].has_value());
  CHECK(obs.winner == 3);
  // A zero bid is legitimate, though.
  Scripted zero([](const Task&, int) { return constant(0.0); });
  std::vector<Agent*> with_zero{&zero, &ok};
  std::vector<AgentStatus> status2(2);
  const AuctionObservation obs2 = run_auction_round(
      Task{0, 0, 1, 5.0}, 0, with_zero, status2, AuctionConfig{}, coin);
  CHECK(obs2.winner == 0);
  CHECK(obs2.price == 0.0);
}

TEST_CASE("exact ties are split by the seeded coin roughly evenly") {
  int wins0 = 0;
  for (int s = 0; s < 400; ++s) {
    Scripted a([](const Task&, int) { return constant(2.5); });
    Scripted b([](const Task&, int) { return constant(2.5); });
    std::vector<Agent*> agents{&a, &b};
    std::vector<AgentStatus> status(2);
    RngStream coin(static_cast<std::uint64_t>(s));
    const AuctionObservation obs = run_auction_round(
        Task{0, 0, 1, 5.0}, 0, agents, status, AuctionConfig{}, coin);
    REQUIRE(obs.winner >= 0);
    CHECK(obs.price == 2.5);
    if (obs.winner == 0) ++wins0;
  }
  CHECK(wins0 > 140);
  CHECK(wins0 < 260);
}

TEST_CASE("the tie coin is consumed only when a tie occurs") {
  Scripted a([](const Task&, int round) { return constant(2.0 + round); });
  Scripted b([](const Task&, int round) { return constant(3.0 + round); });
  std::vector<Agent*> agents{&a, &b};
  std::vector<AgentStatus> status(2);
  RngStream coin(777);
  const auto tasks = some_tasks(5);
  run_auction(tasks, agents, status, AuctionConfig{}, coin);
  // No round tied, so the stream must still sit at its first draw.
  RngStream untouched(777);
  CHECK(coin.next_u64() == untouched.next_u64());
}

TEST_CASE("the ledger accounts every round to its winner in order") {
  // Bids chosen so wins alternate: agent 0 wins even rounds.
  Scripted a([](const Task&, int round) {
    return constant(round % 2 == 0 ? 1.0 + round : 9.0);
  });
  Scripted b([](const Task&, int round) {
    return constant(round % 2 == 1 ? 2.0 + round : 9.5);
  });
  std::vector<Agent*> agents{&a, &b};
  std::vector<AgentStatus> status(2);
  RngStream coin(3);
  const auto tasks = some_tasks(8);
  const AuctionLedger ledger = run_auction(tasks, agents, status, AuctionConfig{}, coin);

  REQUIRE(ledger.rounds.size() == 8);
  double rev0 = 0.0, rev1 = 0.0;
  std::vector<Task> won0, won1;
  for (const auto& obs : ledger.rounds) {
    if (obs.winner == 0) {
      rev0 += obs.price;
      won0.push_back(obs.task);
    } else if (obs.winner == 1) {
      rev1 += obs.price;
      won1.push_back(obs.task);
    }
  }
  CHECK(ledger.revenue[0] == rev0);  // exact: same accumulation order
  CHECK(ledger.revenue[1] == rev1);
  CHECK(ledger.won[0] == won0);
  CHECK(ledger.won[1] == won1);
  CHECK(ledger.won[0].size() == 4);
  CHECK(ledger.won[1].size() == 4);
}

TEST_CASE("bids are sealed: nobody hears a round before everyone has bid") {
  Scripted a([](const Task&, int) { return constant(1.0); });
  Scripted b([](const Task&, int) { return constant(2.0); });
  std::vector<Agent*> agents{&a, &b};
  std::vector<AgentStatus> status(2);
  RngStream coin(4);
  const auto tasks = some_tasks(6);
  run_auction(tasks, agents, status, AuctionConfig{}, coin);

  for (const Scripted* s : {&a, &b}) {
    REQUIRE(s->asks == 6);
    REQUIRE(s->seen.size() == 6);
    for (int k = 0; k < 6; ++k) {
      // At the k-th bid request, exactly the k previous outcomes are known.
      CHECK(s->seen_at_ask[static_cast<std::size_t>(k)] == k);
      CHECK(s->seen[static_cast<std::size_t>(k)].round == k);
    }
  }
}

TEST_CASE("a crash during bidding silences the agent for good") {
  Scripted flaky([](const Task&, int round) {
    if (round == 2) throw std::runtime_error("boom");
    return constant(1.0);
  });
  Scripted steady([](const Task&, int) { return constant(5.0); });
  std::vector<Agent*> agents{&flaky, &steady};
  std::vector<AgentStatus> status(2);
  RngStream coin(5);
  const auto tasks = some_tasks(5);
  const AuctionLedger ledger = run_auction(tasks, agents, status, AuctionConfig{}, coin);

  CHECK(status[0].crashed);
  CHECK(!status[1].crashed);
  CHECK(flaky.asks == 3);                // rounds 0..2; never consulted again
  CHECK(flaky.seen.size() == 2);         // the crash round is not delivered
  CHECK(steady.seen.size() == 5);
  for (int k = 2; k < 5; ++k) {
    const auto& obs = ledger.rounds[static_cast<std::size_t>(k)];
    CHECK(!obs.bids[0].has_value());
    CHECK(obs.winner == 1);  // the survivor wins by default
  }
  CHECK(ledger.won[0].size() == 2);
  CHECK(ledger.won[1].size() == 3);
}

TEST_CASE("a crash during the broadcast also silences the agent") {
  Scripted fragile([](const Task&, int) { return constant(1.0); });
  fragile.observe_throws_at = 1;  // throws while hearing round 1
  Scripted steady([](const Task&, int) { return constant(5.0); });
  std::vector<Agent*> agents{&fragile, &steady};
  std::vector<AgentStatus> status(2);
  RngStream coin(6);
  const auto tasks = some_tasks(4);
  run_auction(tasks, agents, status, AuctionConfig{}, coin);

  CHECK(status[0].crashed);
  CHECK(fragile.asks == 2);       // bid in rounds 0 and 1, then dropped
  CHECK(fragile.seen.size() == 1);
  CHECK(steady.seen.size() == 4);
}

TEST_CASE("late bids are void and repeated lateness forfeits") {
  Scripted sleeper([](const Task&, int) {
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    return constant(0.5);
  });
  Scripted steady([](const Task&, int) { return constant(5.0); });
  std::vector<Agent*> agents{&sleeper, &steady};
  std::vector<AgentStatus> status(2);
  RngStream coin(7);
  AuctionConfig cfg;
  cfg.t_bid_ms = 5;
  cfg.max_overruns = 1;
  const auto tasks = some_tasks(4);
  const AuctionLedger ledger = run_auction(tasks, agents, status, cfg, coin);

  CHECK(status[0].timed_out);
  CHECK(!status[0].crashed);
  CHECK(sleeper.asks == 2);  // one tolerated overrun, one fatal, then dropped
  for (const auto& obs : ledger.rounds) {
    CHECK(!obs.bids[0].has_value());  // every sleeper bid arrived too late
    CHECK(obs.winner == 1);
  }
  CHECK(ledger.revenue[0] == 0.0);
  CHECK(ledger.revenue[1] == 20.0);
}

TEST_CASE("agents forfeited before the auction are never consulted") {
  Scripted ghost([](const Task&, int) { return constant(1.0); });
  Scripted steady([](const Task&, int) { return constant(5.0); });
  std::vector<Agent*> agents{&ghost, &steady};
  std::vector<AgentStatus> status(2);
  status[0].crashed = true;  // e.g. failed during setup
  RngStream coin(8);
  const auto tasks = some_tasks(3);
  const AuctionLedger ledger = run_auction(tasks, agents, status, AuctionConfig{}, coin);

  CHECK(ghost.asks == 0);
  CHECK(ghost.seen.empty());
  CHECK(ledger.won[1].size() == 3);
}

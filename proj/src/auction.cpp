#include "apdp/auction.hpp"

#include <chrono>
#include <cmath>

namespace apdp {

namespace {

std::int64_t elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

AuctionObservation run_auction_round(const Task& task, int round,
                                     std::span<Agent* const> agents,
                                     std::span<AgentStatus> status,
                                     const AuctionConfig& cfg, RngStream& coin) {
  AuctionObservation obs;
  obs.task = task;
  obs.round = round;
  obs.bids.assign(agents.size(), std::nullopt);

  for (std::size_t i = 0; i < agents.size(); ++i) {
    AgentStatus& st = status[i];
    if (!st.participating()) continue;
    const auto start = std::chrono::steady_clock::now();
    std::optional<double> bid;
    try {
      bid = agents[i]->ask_bid(task);
    } catch (const std::exception&) {
      st.crashed = true;
      continue;
    }
    if (elapsed_ms(start) > cfg.t_bid_ms) {
      if (++st.overruns > cfg.max_overruns) st.timed_out = true;
      continue;  // too late; the bid is void
    }
    if (bid && std::isfinite(*bid) && *bid >= 0.0) obs.bids[i] = *bid;
  }

  // Lowest bid wins and is paid its own bid; exact ties go to a seeded
  // uniform draw over the tied agents in id order.
  std::vector<int> best;
  for (std::size_t i = 0; i < obs.bids.size(); ++i) {
    if (!obs.bids[i]) continue;
    if (best.empty() || *obs.bids[i] < *obs.bids[static_cast<std::size_t>(best[0])]) {
      best.assign(1, static_cast<int>(i));
    } else if (*obs.bids[i] == *obs.bids[static_cast<std::size_t>(best[0])]) {
      best.push_back(static_cast<int>(i));
    }
  }
  if (!best.empty()) {
    const int w = best.size() == 1
                      ? best[0]
                      : best[coin.uniform_int(best.size())];
    obs.winner = w;
    obs.price = *obs.bids[static_cast<std::size_t>(w)];
  }
  return obs;
}

AuctionLedger run_auction(std::span<const Task> tasks,
                          std::span<Agent* const> agents,
                          std::span<AgentStatus> status,
                          const AuctionConfig& cfg, RngStream& coin) {
  AuctionLedger ledger;
  ledger.revenue.assign(agents.size(), 0.0);
  ledger.won.resize(agents.size());

  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const AuctionObservation obs = run_auction_round(
        tasks[k], static_cast<int>(k), agents, status, cfg, coin);
    if (obs.winner >= 0) {
      ledger.revenue[static_cast<std::size_t>(obs.winner)] += obs.price;
      ledger.won[static_cast<std::size_t>(obs.winner)].push_back(tasks[k]);
    }
    for (std::size_t i = 0; i < agents.size(); ++i) {
      if (!status[i].participating()) continue;
      try {
        agents[i]->observe(obs);
      } catch (const std::exception&) {
        status[i].crashed = true;
      }
    }
    ledger.rounds.push_back(obs);
  }
  return ledger;
}

}  // namespace apdp

#include "apdp/agents.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace apdp {

nlohmann::json observation_to_json(const AuctionObservation& obs) {
  nlohmann::json bids = nlohmann::json::array();
  for (const auto& b : obs.bids) {
    if (b) {
      bids.push_back(*b);
    } else {
      bids.push_back(nullptr);
    }
  }
  return {{"task", task_to_json(obs.task)}, {"round", obs.round},
          {"bids", std::move(bids)}, {"winner", obs.winner}, {"price", obs.price}};
}

AuctionObservation observation_from_json(const nlohmann::json& doc) {
  AuctionObservation obs;
  obs.task = task_from_json(doc.at("task"));
  obs.round = doc.at("round").get<int>();
  for (const auto& b : doc.at("bids")) {
    if (b.is_null()) {
      obs.bids.push_back(std::nullopt);
    } else {
      obs.bids.push_back(b.get<double>());
    }
  }
  obs.winner = doc.at("winner").get<int>();
  obs.price = doc.at("price").get<double>();
  return obs;
}

std::optional<double> ShadowFleet::marginal(const Task& task,
                                            const Topology& topo) const {
  const auto r = cheapest_insertion(task, plan, fleet, topo);
  if (!r) return std::nullopt;
  return r->marginal_cost;
}

void ShadowFleet::record_win(const Task& task, const Topology& topo) {
  auto r = cheapest_insertion(task, plan, fleet, topo);
  if (!r) return;  // the stand-in cannot fit it; stop tracking this task
  plan = std::move(r->plan);
  won.push_back(task);
}

ShadowFleet make_shadow(const Company& own, int opponent_vehicles) {
  ShadowFleet shadow;
  shadow.fleet.id = -1;
  for (int i = 0; i < opponent_vehicles; ++i) {
    Vehicle v = own.vehicles[static_cast<std::size_t>(i) % own.vehicles.size()];
    v.id = i;
    shadow.fleet.vehicles.push_back(v);
  }
  shadow.plan = Plan::empty(shadow.fleet.vehicles.size());
  return shadow;
}

namespace {

double max_capacity(const Company& fleet) {
  double m = 0.0;
  for (const Vehicle& v : fleet.vehicles) m = std::max(m, v.capacity);
  return m;
}

// Mean marginal cost of ten synthetic tasks inserted into the empty fleet.
// Consumes exactly ten samples from the stream — the expected-cost agents
// draw these before anything else, which is what lets a replay recompute
// the prior from the context seed alone.
double expected_cost_prior(const AgentContext& ctx, RngStream& rng) {
  const Plan empty = Plan::empty(ctx.own.vehicles.size());
  double sum = 0.0;
  int feasible = 0;
  for (int i = 0; i < 10; ++i) {
    const Task t = ctx.dist->sample(rng, i);
    if (const auto r = cheapest_insertion(t, empty, ctx.own, *ctx.topo)) {
      sum += r->marginal_cost;
      ++feasible;
    }
  }
  return feasible > 0 ? sum / feasible : 0.0;
}

// Serves every won task with its first vehicle, pickup then delivery, in
// win order; bids the direct service distance from wherever that route
// currently ends, marked up by a small uniform factor.
class NaiveAgent final : public Agent {
 public:
  std::string name() const override { return "naive"; }

  void setup(const AgentContext& ctx) override {
    ctx_ = ctx;
    rng_ = RngStream(ctx.rng_seed);
    route_.clear();
  }

  std::optional<double> ask_bid(const Task& task) override {
    const Vehicle& v = ctx_.own.vehicles.front();
    if (task.weight > v.capacity) return std::nullopt;
    const int cur = route_end_city(route_, v.home);
    const double direct =
        ctx_.topo->dist(cur, task.pickup) + ctx_.topo->dist(task.pickup, task.delivery);
    const double u = rng_.uniform(0.0, kNoise);
    return direct * v.cost_per_km * (1.0 + u);
  }

  void observe(const AuctionObservation& obs) override {
    if (obs.winner == ctx_.self_id) {
      route_.push_back(Action::pickup(obs.task));
      route_.push_back(Action::deliver(obs.task));
    }
  }

  Plan final_plan(std::span<const Task>, const Deadline&) override {
    Plan p = Plan::empty(ctx_.own.vehicles.size());
    p.routes[0] = route_;
    return p;
  }

 private:
  static constexpr double kNoise = 0.05;
  AgentContext ctx_;
  RngStream rng_{0};
  std::vector<Action> route_;
};

class ExpCostFixedBidAgent final : public Agent {
 public:
  std::string name() const override { return "expcost-fixed"; }

  void setup(const AgentContext& ctx) override {
    ctx_ = ctx;
    rng_ = RngStream(ctx.rng_seed);
    prior_ = expected_cost_prior(ctx_, rng_);
  }

  std::optional<double> ask_bid(const Task& task) override {
    if (task.weight > max_capacity(ctx_.own)) return std::nullopt;
    return prior_;
  }

  void observe(const AuctionObservation&) override {}

  Plan final_plan(std::span<const Task> won, const Deadline& deadline) override {
    return sls_optimize(won, ctx_.own, *ctx_.topo, deadline, rng_).plan;
  }

 private:
  AgentContext ctx_;
  RngStream rng_{0};
  double prior_ = 0.0;
};

// Shared bookkeeping for agents that bid from a cheapest-insertion plan:
// the plan after a hypothetical win is computed at bid time and adopted
// when the win is confirmed.
class InsertionPlanner {
 public:
  void reset(std::size_t n_vehicles) {
    plan_ = Plan::empty(n_vehicles);
    won_.clear();
    pending_.reset();
  }

  std::optional<double> propose(const Task& task, const Company& fleet,
                                const Topology& topo) {
    auto r = cheapest_insertion(task, plan_, fleet, topo);
    if (!r) {
      pending_.reset();
      return std::nullopt;
    }
    const double marginal = r->marginal_cost;
    pending_ = Pending{task, std::move(r->plan)};
    return marginal;
  }

  void confirm_win(const Task& task) {
    if (pending_ && pending_->task.id == task.id) {
      plan_ = std::move(pending_->plan);
      won_.push_back(task);
    }
    pending_.reset();
  }

  const Plan& plan() const { return plan_; }
  const std::vector<Task>& won() const { return won_; }
  void adopt(Plan p) { plan_ = std::move(p); }

 private:
  struct Pending {
    Task task;
    Plan plan;
  };
  Plan plan_;
  std::vector<Task> won_;
  std::optional<Pending> pending_;
};

// Picks the cheaper of the maintained incremental plan and a fresh local
// search, so the final plan never regresses below what bidding promised.
Plan polish_final(const InsertionPlanner& inc, std::span<const Task> won,
                  const AgentContext& ctx, const Deadline& deadline,
                  RngStream& rng) {
  const SlsResult improved = sls_optimize(won, ctx.own, *ctx.topo, deadline, rng);
  const double inc_cost = plan_cost(inc.plan(), ctx.own, *ctx.topo);
  return improved.cost < inc_cost ? improved.plan : inc.plan();
}

class HonestAgent final : public Agent {
 public:
  std::string name() const override { return "honest"; }

  void setup(const AgentContext& ctx) override {
    ctx_ = ctx;
    rng_ = RngStream(ctx.rng_seed);
    inc_.reset(ctx.own.vehicles.size());
  }

  std::optional<double> ask_bid(const Task& task) override {
    return inc_.propose(task, ctx_.own, *ctx_.topo);
  }

  void observe(const AuctionObservation& obs) override {
    if (obs.winner == ctx_.self_id) inc_.confirm_win(obs.task);
  }

  Plan final_plan(std::span<const Task> won, const Deadline& deadline) override {
    return polish_final(inc_, won, ctx_, deadline, rng_);
  }

 private:
  AgentContext ctx_;
  RngStream rng_{0};
  InsertionPlanner inc_;
};

// Tracks a stand-in fleet per opponent and never bids below the cheapest
// opponent's estimated marginal cost.
class ModelOpponentAgent : public Agent {
 public:
  std::string name() const override { return "model-opponent"; }

  void setup(const AgentContext& ctx) override {
    ctx_ = ctx;
    rng_ = RngStream(ctx.rng_seed);
    inc_.reset(ctx.own.vehicles.size());
    shadows_.clear();
    for (int id = 0; id < static_cast<int>(ctx.fleet_sizes.size()); ++id) {
      if (id == ctx.self_id) continue;
      shadows_.emplace_back(id, make_shadow(ctx.own, ctx.fleet_sizes[static_cast<std::size_t>(id)]));
    }
  }

  std::optional<double> ask_bid(const Task& task) override {
    const auto own = inc_.propose(task, ctx_.own, *ctx_.topo);
    if (!own) return std::nullopt;
    const auto rival = cheapest_rival_marginal(task);
    return rival ? std::max(*own, *rival) : *own;
  }

  void observe(const AuctionObservation& obs) override {
    if (obs.winner == ctx_.self_id) {
      inc_.confirm_win(obs.task);
      return;
    }
    for (auto& [id, shadow] : shadows_) {
      if (id == obs.winner) shadow.record_win(obs.task, *ctx_.topo);
    }
  }

  Plan final_plan(std::span<const Task> won, const Deadline& deadline) override {
    return polish_final(inc_, won, ctx_, deadline, rng_);
  }

 protected:
  // With several opponents the binding competitor is the cheapest one.
  std::optional<double> cheapest_rival_marginal(const Task& task) const {
    std::optional<double> best;
    for (const auto& [id, shadow] : shadows_) {
      if (const auto m = shadow.marginal(task, *ctx_.topo)) {
        if (!best || *m < *best) best = *m;
      }
    }
    return best;
  }

  AgentContext ctx_;
  RngStream rng_{0};
  InsertionPlanner inc_;
  std::vector<std::pair<int, ShadowFleet>> shadows_;
};

// Early rounds bid near the expected-cost prior, late rounds near true
// marginal cost: blend weight alpha = gamma^round decays exponentially.
// Like model-opponent, the final bid is the max of its own and the
// opponent's blended estimate.
class RiskSeekingAgent final : public ModelOpponentAgent {
 public:
  std::string name() const override { return "risk-seeking"; }

  void setup(const AgentContext& ctx) override {
    ModelOpponentAgent::setup(ctx);
    prior_ = expected_cost_prior(ctx_, rng_);
    round_ = 0;
  }

  std::optional<double> ask_bid(const Task& task) override {
    const auto own = inc_.propose(task, ctx_.own, *ctx_.topo);
    if (!own) return std::nullopt;
    const double alpha = std::pow(kGamma, round_);
    const auto blend = [&](double marginal) {
      return alpha * prior_ + (1.0 - alpha) * marginal;
    };
    const auto rival = cheapest_rival_marginal(task);
    return rival ? std::max(blend(*own), blend(*rival)) : blend(*own);
  }

  void observe(const AuctionObservation& obs) override {
    ++round_;
    ModelOpponentAgent::observe(obs);
  }

 private:
  static constexpr double kGamma = 0.9;
  double prior_ = 0.0;
  int round_ = 0;
};

// Trains a city-hopping acceptance policy by value iteration, then only
// bids on tasks whose pickup-to-delivery hop the policy would accept.
// Serves sequentially with its first vehicle, like naive, but prices the
// carry leg at the policy's payment rate.
class ReactiveAgent final : public Agent {
 public:
  std::string name() const override { return "reactive"; }

  void setup(const AgentContext& ctx) override {
    ctx_ = ctx;
    route_.clear();
    params_ = MdpParams{};
    params_.cost_per_km = ctx.own.vehicles.front().cost_per_km;
    policy_ = value_iteration(*ctx.topo, params_, 0.95, 1e-6);
  }

  std::optional<double> ask_bid(const Task& task) override {
    const Vehicle& v = ctx_.own.vehicles.front();
    if (task.weight > v.capacity) return std::nullopt;
    if (!policy_.action(task.pickup, task.delivery).accept) return std::nullopt;
    const int cur = route_end_city(route_, v.home);
    return ctx_.topo->dist(cur, task.pickup) * v.cost_per_km +
           params_.beta * ctx_.topo->dist(task.pickup, task.delivery) * v.cost_per_km;
  }

  void observe(const AuctionObservation& obs) override {
    if (obs.winner == ctx_.self_id) {
      route_.push_back(Action::pickup(obs.task));
      route_.push_back(Action::deliver(obs.task));
    }
  }

  Plan final_plan(std::span<const Task>, const Deadline&) override {
    Plan p = Plan::empty(ctx_.own.vehicles.size());
    p.routes[0] = route_;
    return p;
  }

 private:
  AgentContext ctx_;
  MdpParams params_;
  MdpPolicy policy_;
  std::vector<Action> route_;
};

// Bids marginal cost; at planning time solves each vehicle's assigned
// tasks exactly when the subproblem is small enough for the optimal
// search, falling back to local search over the whole fleet otherwise.
class DeliberativeAgent final : public Agent {
 public:
  std::string name() const override { return "deliberative"; }

  void setup(const AgentContext& ctx) override {
    ctx_ = ctx;
    rng_ = RngStream(ctx.rng_seed);
    inc_.reset(ctx.own.vehicles.size());
  }

  std::optional<double> ask_bid(const Task& task) override {
    return inc_.propose(task, ctx_.own, *ctx_.topo);
  }

  void observe(const AuctionObservation& obs) override {
    if (obs.winner == ctx_.self_id) inc_.confirm_win(obs.task);
  }

  Plan final_plan(std::span<const Task> won, const Deadline& deadline) override {
    const Plan& base = inc_.plan();
    bool small = true;
    for (const auto& route : base.routes) {
      if (route.size() / 2 > kExactLimit) small = false;
    }
    Plan candidate;
    if (small) {
      // Keep the insertion plan's task-to-vehicle assignment and reorder
      // each vehicle's stops optimally.
      candidate = Plan::empty(base.routes.size());
      for (std::size_t v = 0; v < base.routes.size(); ++v) {
        std::vector<Task> mine;
        for (const Action& a : base.routes[v]) {
          if (a.kind == ActionKind::Pickup) mine.push_back(a.task);
        }
        candidate.routes[v] =
            astar_optimal(mine, ctx_.own.vehicles[v], *ctx_.topo).route;
      }
    } else {
      candidate = sls_optimize(won, ctx_.own, *ctx_.topo, deadline, rng_).plan;
    }
    const double base_cost = plan_cost(base, ctx_.own, *ctx_.topo);
    const double cand_cost = plan_cost(candidate, ctx_.own, *ctx_.topo);
    return cand_cost < base_cost ? candidate : base;
  }

 private:
  static constexpr std::size_t kExactLimit = 7;
  AgentContext ctx_;
  RngStream rng_{0};
  InsertionPlanner inc_;
};

// Bids marginal cost against a plan it rebuilds from scratch every few
// wins, so commitments reflect joint fleet optimization rather than the
// insertion order.
class CentralizedAgent final : public Agent {
 public:
  std::string name() const override { return "centralized"; }

  void setup(const AgentContext& ctx) override {
    ctx_ = ctx;
    rng_ = RngStream(ctx.rng_seed);
    inc_.reset(ctx.own.vehicles.size());
    wins_since_reopt_ = 0;
  }

  std::optional<double> ask_bid(const Task& task) override {
    return inc_.propose(task, ctx_.own, *ctx_.topo);
  }

  void observe(const AuctionObservation& obs) override {
    if (obs.winner != ctx_.self_id) return;
    inc_.confirm_win(obs.task);
    if (++wins_since_reopt_ < kReoptEvery) return;
    wins_since_reopt_ = 0;
    const SlsResult r =
        sls_optimize(inc_.won(), ctx_.own, *ctx_.topo,
                     Deadline::iteration_budget(kReoptIterations), rng_);
    if (r.cost < plan_cost(inc_.plan(), ctx_.own, *ctx_.topo)) {
      inc_.adopt(r.plan);
    }
  }

  Plan final_plan(std::span<const Task> won, const Deadline& deadline) override {
    return polish_final(inc_, won, ctx_, deadline, rng_);
  }

 private:
  static constexpr int kReoptEvery = 5;
  static constexpr std::uint64_t kReoptIterations = 2000;
  AgentContext ctx_;
  RngStream rng_{0};
  InsertionPlanner inc_;
  int wins_since_reopt_ = 0;
};

class AbstainAgent final : public Agent {
 public:
  std::string name() const override { return "abstain"; }
  void setup(const AgentContext& ctx) override { n_vehicles_ = ctx.own.vehicles.size(); }
  std::optional<double> ask_bid(const Task&) override { return std::nullopt; }
  void observe(const AuctionObservation&) override {}
  Plan final_plan(std::span<const Task>, const Deadline&) override {
    return Plan::empty(n_vehicles_);
  }

 private:
  std::size_t n_vehicles_ = 0;
};

// Deadline-discipline probe: answers bids instantly but blows through the
// planning deadline, which must cost it the match.
class SlowpokeAgent final : public Agent {
 public:
  std::string name() const override { return "slowpoke"; }
  void setup(const AgentContext& ctx) override { ctx_ = ctx; }
  std::optional<double> ask_bid(const Task&) override { return std::nullopt; }
  void observe(const AuctionObservation&) override {}
  Plan final_plan(std::span<const Task>, const Deadline&) override {
    std::this_thread::sleep_for(std::chrono::milliseconds(ctx_.t_plan_ms * 3 / 2));
    return Plan::empty(ctx_.own.vehicles.size());
  }

 private:
  AgentContext ctx_;
};

// Crash probe: keels over on the third bid request.
class CrasherAgent final : public Agent {
 public:
  std::string name() const override { return "crasher"; }
  void setup(const AgentContext& ctx) override {
    n_vehicles_ = ctx.own.vehicles.size();
    asked_ = 0;
  }
  std::optional<double> ask_bid(const Task&) override {
    if (++asked_ >= 3) throw std::runtime_error("crasher: giving up");
    return 1.0;
  }
  void observe(const AuctionObservation&) override {}
  Plan final_plan(std::span<const Task>, const Deadline&) override {
    return Plan::empty(n_vehicles_);
  }

 private:
  std::size_t n_vehicles_ = 0;
  int asked_ = 0;
};

// Obligation probe: bids like honest but quietly drops its first won task
// from the final plan, which the validator must catch.
class BadPlannerAgent final : public Agent {
 public:
  std::string name() const override { return "bad-planner"; }
  void setup(const AgentContext& ctx) override {
    ctx_ = ctx;
    inc_.reset(ctx.own.vehicles.size());
  }
  std::optional<double> ask_bid(const Task& task) override {
    return inc_.propose(task, ctx_.own, *ctx_.topo);
  }
  void observe(const AuctionObservation& obs) override {
    if (obs.winner == ctx_.self_id) inc_.confirm_win(obs.task);
  }
  Plan final_plan(std::span<const Task> won, const Deadline&) override {
    Plan p = inc_.plan();
    if (!won.empty()) {
      const int drop = won.front().id;
      for (auto& route : p.routes) {
        std::erase_if(route, [&](const Action& a) { return a.task.id == drop; });
      }
    }
    return p;
  }

 private:
  AgentContext ctx_;
  InsertionPlanner inc_;
};

}  // namespace

std::unique_ptr<Agent> make_builtin_agent(const std::string& name) {
  if (name == "naive") return std::make_unique<NaiveAgent>();
  if (name == "expcost-fixed") return std::make_unique<ExpCostFixedBidAgent>();
  if (name == "honest") return std::make_unique<HonestAgent>();
  if (name == "model-opponent") return std::make_unique<ModelOpponentAgent>();
  if (name == "risk-seeking") return std::make_unique<RiskSeekingAgent>();
  if (name == "reactive") return std::make_unique<ReactiveAgent>();
  if (name == "deliberative") return std::make_unique<DeliberativeAgent>();
  if (name == "centralized") return std::make_unique<CentralizedAgent>();
  if (name == "abstain") return std::make_unique<AbstainAgent>();
  if (name == "slowpoke") return std::make_unique<SlowpokeAgent>();
  if (name == "crasher") return std::make_unique<CrasherAgent>();
  if (name == "bad-planner") return std::make_unique<BadPlannerAgent>();
  throw std::runtime_error("unknown agent '" + name + "'; known agents: " + [] {
    std::string all;
    for (const auto& n : builtin_agent_names()) {
      if (!all.empty()) all += ", ";
      all += n;
    }
    return all;
  }());
}

std::vector<std::string> builtin_agent_names() {
  return {"naive",       "expcost-fixed", "honest",  "model-opponent",
          "risk-seeking", "reactive",      "deliberative", "centralized",
          "abstain",     "slowpoke",      "crasher", "bad-planner"};
}

}  // namespace apdp

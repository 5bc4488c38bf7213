#include "apdp/protocol.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <istream>
#include <mutex>
#include <ostream>
#include <thread>

extern char** environ;

namespace apdp {

namespace {

using Clock = std::chrono::steady_clock;

// Extra wait beyond t_plan on setup/final_plan replies. Keeps the engine's
// own (slightly earlier-started) clock strictly past the deadline when the
// wait here runs out, so the forfeit reads "timeout" and not "crash".
constexpr std::int64_t kPlanGraceMs = 50;

// Extra wait beyond t_bid. A wire timeout must land strictly past t_bid on
// the engine's millisecond clock as well, so the overrun is counted; a
// reply that sneaks into the tail is voided by that same clock.
constexpr std::int64_t kBidGraceMs = 2;

// A reply line longer than this is not an answer, it is an attack.
constexpr std::size_t kMaxLineBytes = std::size_t{64} << 20;

std::string errno_text(const char* what) {
  return std::string(what) + ": " + std::strerror(errno);
}

nlohmann::json context_to_json(const AgentContext& ctx) {
  nlohmann::json msg{{"topology", ctx.topo->to_json()},
                     {"w_min", ctx.dist->w_min()},
                     {"w_max", ctx.dist->w_max()},
                     {"self_id", ctx.self_id},
                     {"company", company_to_json(ctx.own)},
                     {"fleet_sizes", ctx.fleet_sizes},
                     {"fleets_visible", ctx.fleets_visible},
                     {"t_bid_ms", ctx.t_bid_ms},
                     {"t_plan_ms", ctx.t_plan_ms},
                     {"rng_seed", ctx.rng_seed},
                     {"plan_iterations", ctx.plan_iterations}};
  if (ctx.fleets_visible) {
    nlohmann::json fleets = nlohmann::json::array();
    for (const Company& c : ctx.fleets) fleets.push_back(company_to_json(c));
    msg["fleets"] = std::move(fleets);
  }
  return msg;
}

}  // namespace

ProcessAgent::ProcessAgent(std::string command) : command_(std::move(command)) {}

ProcessAgent::~ProcessAgent() { shutdown(); }

std::string ProcessAgent::name() const { return "external:" + command_; }

void ProcessAgent::spawn() {
  // Writing to a child that died mid-request must surface as EPIPE, not
  // kill the engine.
  static std::once_flag sigpipe_once;
  std::call_once(sigpipe_once, [] { ::signal(SIGPIPE, SIG_IGN); });

  int to_child[2];    // engine -> child stdin
  int from_child[2];  // child stdout -> engine
  if (::pipe(to_child) != 0) throw ProtocolError(errno_text("pipe"));
  if (::pipe(from_child) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw ProtocolError(errno_text("pipe"));
  }
  // Close-on-exec everywhere: the spawn duplicates its own two ends onto
  // fds 0/1 (dup2 clears the flag on the copies), and a sibling agent's
  // exec drops any ends it inherited, so EOF detection keeps working with
  // several subprocess agents in one match.
  for (const int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) {
    ::fcntl(fd, F_SETFD, FD_CLOEXEC);
  }

  posix_spawn_file_actions_t actions;
  ::posix_spawn_file_actions_init(&actions);
  ::posix_spawn_file_actions_adddup2(&actions, to_child[0], 0);
  ::posix_spawn_file_actions_adddup2(&actions, from_child[1], 1);

  const char* argv[] = {"/bin/sh", "-c", command_.c_str(), nullptr};
  const int rc = ::posix_spawn(&pid_, "/bin/sh", &actions, nullptr,
                               const_cast<char**>(argv), environ);
  ::posix_spawn_file_actions_destroy(&actions);
  ::close(to_child[0]);
  ::close(from_child[1]);
  if (rc != 0) {
    ::close(to_child[1]);
    ::close(from_child[0]);
    pid_ = -1;
    throw ProtocolError("failed to start '" + command_ + "': " + std::strerror(rc));
  }
  to_child_ = to_child[1];
  from_child_ = from_child[0];
  // Non-blocking on both ends; send and recv poll with explicit deadlines.
  ::fcntl(to_child_, F_SETFL, O_NONBLOCK);
  ::fcntl(from_child_, F_SETFL, O_NONBLOCK);
}

void ProcessAgent::send(nlohmann::json msg, std::int64_t wait_ms) {
  if (to_child_ < 0) throw ProtocolError("agent process is not running");
  const std::string line = msg.dump() + "\n";
  const auto deadline = Clock::now() + std::chrono::milliseconds(wait_ms);
  std::size_t off = 0;
  while (off < line.size()) {
    const ssize_t w = ::write(to_child_, line.data() + off, line.size() - off);
    if (w >= 0) {
      off += static_cast<std::size_t>(w);
      continue;
    }
    if (errno == EINTR) continue;
    if (errno != EAGAIN) throw ProtocolError(errno_text("write to agent"));
    const auto now = Clock::now();
    if (now >= deadline) throw ProtocolError("agent stopped reading requests");
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                          deadline - now)
                          .count();
    struct pollfd pfd{to_child_, POLLOUT, 0};
    if (::poll(&pfd, 1, static_cast<int>(left) + 1) < 0 && errno != EINTR) {
      throw ProtocolError(errno_text("poll"));
    }
  }
}

std::optional<nlohmann::json> ProcessAgent::recv(std::uint64_t seq,
                                                 std::int64_t wait_ms) {
  if (from_child_ < 0) throw ProtocolError("agent process is not running");
  const auto deadline = Clock::now() + std::chrono::milliseconds(wait_ms);
  while (true) {
    // Drain complete lines already buffered before blocking again.
    std::size_t nl;
    while ((nl = buffer_.find('\n')) != std::string::npos) {
      const std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (line.empty()) continue;
      nlohmann::json msg;
      try {
        msg = nlohmann::json::parse(line);
      } catch (const std::exception& e) {
        throw ProtocolError(std::string("malformed reply: ") + e.what());
      }
      std::uint64_t reply_seq = 0;
      try {
        reply_seq = msg.at("seq").get<std::uint64_t>();
      } catch (const std::exception&) {
        throw ProtocolError("reply without a sequence number");
      }
      if (reply_seq < seq) continue;  // late answer to an earlier request
      if (reply_seq > seq) throw ProtocolError("reply to a request never made");
      return msg;
    }
    if (buffer_.size() > kMaxLineBytes) throw ProtocolError("reply line too long");

    const auto now = Clock::now();
    if (now >= deadline) return std::nullopt;
    const auto left =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now)
            .count();
    struct pollfd pfd{from_child_, POLLIN, 0};
    const int pr = ::poll(&pfd, 1, static_cast<int>(left) + 1);
    if (pr < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(errno_text("poll"));
    }
    if (pr == 0) return std::nullopt;
    char chunk[4096];
    const ssize_t r = ::read(from_child_, chunk, sizeof chunk);
    if (r > 0) {
      buffer_.append(chunk, static_cast<std::size_t>(r));
      continue;
    }
    if (r == 0) throw ProtocolError("agent process closed its output");
    if (errno != EINTR && errno != EAGAIN) {
      throw ProtocolError(errno_text("read from agent"));
    }
  }
}

void ProcessAgent::setup(const AgentContext& ctx) {
  t_bid_ms_ = ctx.t_bid_ms;
  t_plan_ms_ = ctx.t_plan_ms;
  spawn();
  const std::uint64_t seq = next_seq_++;
  nlohmann::json msg = context_to_json(ctx);
  msg["seq"] = seq;
  msg["type"] = "setup";
  send(std::move(msg), t_plan_ms_);
  const auto reply = recv(seq, t_plan_ms_ + kPlanGraceMs);
  if (!reply) throw ProtocolError("agent did not become ready in time");
  if (reply->value("type", "") != "ready") {
    throw ProtocolError("expected ready, got '" + reply->value("type", "") + "'");
  }
}

std::optional<double> ProcessAgent::ask_bid(const Task& task) {
  const std::uint64_t seq = next_seq_++;
  send({{"seq", seq}, {"type", "ask_bid"}, {"task", task_to_json(task)}},
       t_bid_ms_);
  const auto reply = recv(seq, t_bid_ms_ + kBidGraceMs);
  if (!reply) return std::nullopt;
  const std::string type = reply->value("type", "");
  if (type == "abstain") return std::nullopt;
  if (type != "bid") throw ProtocolError("expected bid or abstain, got '" + type + "'");
  try {
    return reply->at("value").get<double>();
  } catch (const std::exception&) {
    throw ProtocolError("bid without a numeric value");
  }
}

void ProcessAgent::observe(const AuctionObservation& obs) {
  const std::uint64_t seq = next_seq_++;
  send({{"seq", seq}, {"type", "result"}, {"observation", observation_to_json(obs)}},
       t_bid_ms_);
}

Plan ProcessAgent::final_plan(std::span<const Task> won, const Deadline&) {
  nlohmann::json won_doc = nlohmann::json::array();
  for (const Task& t : won) won_doc.push_back(task_to_json(t));
  const std::uint64_t seq = next_seq_++;
  send({{"seq", seq}, {"type", "final_plan"}, {"won", std::move(won_doc)}},
       t_plan_ms_);
  const auto reply = recv(seq, t_plan_ms_ + kPlanGraceMs);
  if (!reply) throw ProtocolError("agent did not deliver a plan in time");
  if (reply->value("type", "") != "plan") {
    throw ProtocolError("expected plan, got '" + reply->value("type", "") + "'");
  }
  try {
    return plan_from_json(reply->at("plan"), won);
  } catch (const std::exception& e) {
    throw PlanDecodeError(e.what());
  }
}

void ProcessAgent::shutdown() noexcept {
  if (to_child_ >= 0) {
    try {
      send({{"seq", next_seq_++}, {"type", "shutdown"}}, 50);
    } catch (...) {
      // Already dead or wedged; the kill below cleans up.
    }
    ::close(to_child_);
    to_child_ = -1;
  }
  if (pid_ > 0) {
    int status = 0;
    bool reaped = false;
    for (int i = 0; i < 30 && !reaped; ++i) {
      const pid_t r = ::waitpid(pid_, &status, WNOHANG);
      if (r != 0) {
        reaped = true;  // exited, or gone (ECHILD)
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    if (!reaped) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
    }
    pid_ = -1;
  }
  if (from_child_ >= 0) {
    ::close(from_child_);
    from_child_ = -1;
  }
}

AgentFactory make_external_factory(const std::string& command) {
  return {"external:" + command,
          [command] { return std::make_unique<ProcessAgent>(command); }};
}

int serve_agent(std::istream& in, std::ostream& out,
                const std::string& agent_name, int bid_delay_ms) {
  std::unique_ptr<Agent> agent;
  std::optional<Topology> topo;
  std::optional<TaskDistribution> dist;
  AgentContext ctx;

  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json msg;
    try {
      msg = nlohmann::json::parse(line);
    } catch (const std::exception&) {
      return 2;
    }
    try {
      const std::string type = msg.value("type", "");
      const std::uint64_t seq = msg.value("seq", std::uint64_t{0});
      const auto reply = [&](nlohmann::json r) {
        r["seq"] = seq;
        out << r.dump() << "\n" << std::flush;
      };

      if (type == "shutdown") return 0;
      if (type == "setup") {
        topo.emplace(Topology::from_json(msg.at("topology")));
        dist.emplace(*topo, msg.at("w_min").get<double>(),
                     msg.at("w_max").get<double>());
        ctx = AgentContext{};
        ctx.topo = &*topo;
        ctx.dist = &*dist;
        ctx.self_id = msg.at("self_id").get<int>();
        ctx.own = company_from_json(msg.at("company"));
        ctx.fleet_sizes = msg.at("fleet_sizes").get<std::vector<int>>();
        ctx.fleets_visible = msg.at("fleets_visible").get<bool>();
        if (msg.contains("fleets")) {
          for (const auto& c : msg["fleets"]) {
            ctx.fleets.push_back(company_from_json(c));
          }
        }
        ctx.t_bid_ms = msg.at("t_bid_ms").get<std::int64_t>();
        ctx.t_plan_ms = msg.at("t_plan_ms").get<std::int64_t>();
        ctx.rng_seed = msg.at("rng_seed").get<std::uint64_t>();
        ctx.plan_iterations = msg.at("plan_iterations").get<std::uint64_t>();
        agent = make_builtin_agent(agent_name);
        agent->setup(ctx);
        reply({{"type", "ready"}});
      } else if (type == "ask_bid") {
        if (!agent) return 2;
        const auto bid = agent->ask_bid(task_from_json(msg.at("task")));
        if (bid_delay_ms > 0) {
          std::this_thread::sleep_for(std::chrono::milliseconds(bid_delay_ms));
        }
        if (bid) {
          reply({{"type", "bid"}, {"value", *bid}});
        } else {
          reply({{"type", "abstain"}});
        }
      } else if (type == "result") {
        if (!agent) return 2;
        agent->observe(observation_from_json(msg.at("observation")));
      } else if (type == "final_plan") {
        if (!agent) return 2;
        std::vector<Task> won;
        for (const auto& t : msg.at("won")) won.push_back(task_from_json(t));
        // The same deterministic budget the engine hands in-process
        // planners; the wall clock is only a backstop here too.
        const Deadline deadline =
            Deadline::budget(ctx.plan_iterations, ctx.t_plan_ms);
        const Plan plan = agent->final_plan(won, deadline);
        reply({{"type", "plan"}, {"plan", plan_to_json(plan)}});
      } else {
        return 2;  // unknown request
      }
    } catch (const std::exception&) {
      return 3;  // agent or codec failure; exiting reads as a crash
    }
  }
  return 0;  // engine closed the request stream
}

}  // namespace apdp

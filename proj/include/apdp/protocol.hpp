#pragma once

#include <sys/types.h>

#include <iosfwd>
#include <stdexcept>

#include "apdp/tournament.hpp"

namespace apdp {

// Transport or contract breach by an agent subprocess: process death,
// unparsable output, a reply to a request that was never made. The engine
// catches it like any other agent exception, so the seat forfeits as a
// crash.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The subprocess answered final_plan with a message that parses as JSON but
// does not decode into a plan over the won tasks. Derives from
// std::invalid_argument so the engine files it as an invalid plan, the same
// verdict an in-process agent gets for a structurally broken plan.
class PlanDecodeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Runs one agent as a subprocess speaking newline-delimited JSON on its
// standard streams. Every request carries a sequence number the reply must
// echo; replies to earlier requests are discarded, so a slow process
// degrades to abstentions instead of shifting every later answer by one
// round.
//
// Requests and replies, one JSON object per line:
//   setup {topology, w_min, w_max, self_id, company, fleet_sizes, fleets?,
//          fleets_visible, t_bid_ms, t_plan_ms, rng_seed, plan_iterations}
//                        -> ready {}
//   ask_bid {task}       -> bid {value} | abstain {}
//   result {observation} -> no reply
//   final_plan {won}     -> plan {plan}
//   shutdown {}          -> no reply; the process should exit
//
// Deadlines are measured here from request write to reply receipt. ask_bid
// waits t_bid_ms plus a tiny tail and then abstains — the tail keeps the
// engine's own (strictly earlier-started) clock past the deadline too, so
// the overrun is recorded exactly as for an in-process agent that returned
// late. setup and final_plan wait t_plan_ms plus a small grace and then
// throw; the engine's clock classifies that as a timeout.
class ProcessAgent final : public Agent {
 public:
  // The command is run through /bin/sh -c when setup spawns the process.
  explicit ProcessAgent(std::string command);
  ~ProcessAgent() override;

  ProcessAgent(const ProcessAgent&) = delete;
  ProcessAgent& operator=(const ProcessAgent&) = delete;

  std::string name() const override;
  void setup(const AgentContext& ctx) override;
  std::optional<double> ask_bid(const Task& task) override;
  void observe(const AuctionObservation& obs) override;
  Plan final_plan(std::span<const Task> won, const Deadline& deadline) override;

 private:
  void spawn();
  void send(nlohmann::json msg, std::int64_t wait_ms);
  // Waits for the reply echoing `seq`; nullopt on timeout. Throws
  // ProtocolError when the process dies or misbehaves.
  std::optional<nlohmann::json> recv(std::uint64_t seq, std::int64_t wait_ms);
  void shutdown() noexcept;

  std::string command_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::uint64_t next_seq_ = 0;
  std::int64_t t_bid_ms_ = 5000;
  std::int64_t t_plan_ms_ = 30000;
};

// Factory for roster entries of the form "external:<command>"; `command`
// is the part after the prefix, the factory keeps the full entry as its
// name.
AgentFactory make_external_factory(const std::string& command);

// Serves a built-in agent over the wire protocol, one JSON object per
// line: requests on `in`, replies on `out`. Blocks until shutdown or end
// of input and returns a process exit status (non-zero after a protocol
// breach or an agent exception). A positive bid_delay_ms sleeps before
// every bid reply; deadline tests use it to simulate a too-slow agent.
int serve_agent(std::istream& in, std::ostream& out,
                const std::string& agent_name, int bid_delay_ms = 0);

}  // namespace apdp

// Hosts a built-in agent behind the line-delimited JSON wire protocol:
// requests on stdin, replies on stdout. The engine side is ProcessAgent.
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "apdp/protocol.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Serve a built-in agent over stdin/stdout"};
  std::string agent = "honest";
  int bid_delay_ms = 0;
  app.add_option("--agent", agent, "Agent to serve (see the engine's roster names)")
      ->capture_default_str();
  app.add_option("--bid-delay-ms", bid_delay_ms,
                 "Sleep this long before every bid reply (deadline testing)")
      ->check(CLI::NonNegativeNumber);
  CLI11_PARSE(app, argc, argv);

  std::ios::sync_with_stdio(false);
  return apdp::serve_agent(std::cin, std::cout, agent, bid_delay_ms);
}

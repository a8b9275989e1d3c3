#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "mcao/sequencer/sequencer.hpp"

namespace mcao::seq {

// Parses "CMD <verb> [key=value ...]". Returns the reply for a malformed line
// in *error instead of throwing.
bool parse_command_line(const std::string& line, Verb& verb, std::map<std::string, std::string>& params,
                        std::string* error);

// Line-protocol front end. One command connection at a time (later ones get
// "ERR busy"); any number of telemetry listeners. The sequencer runs on a
// simulation clock slaved to wall time.
class Server {
 public:
  // Binds both ports (0 picks a free port). Throws std::system_error when a port is taken.
  Server(Sequencer& seq, TelemetryBus& bus, int cmd_port, int tlm_port);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  int cmd_port() const { return cmd_port_; }
  int tlm_port() const { return tlm_port_; }

  // Serves until stop becomes true, then runs the shutdown sequence and
  // returns its steps.
  std::vector<std::string> run(const std::atomic<bool>& stop);

 private:
  void accept_commands(const std::atomic<bool>& stop);
  void accept_telemetry(const std::atomic<bool>& stop);
  void serve_command(int fd, const std::atomic<bool>& stop);
  void serve_telemetry(int fd, const std::atomic<bool>& stop);

  Sequencer& seq_;
  TelemetryBus& bus_;
  std::mutex mu_;  // guards seq_
  int cmd_fd_ = -1, tlm_fd_ = -1;
  int cmd_port_ = 0, tlm_port_ = 0;

  std::atomic<bool> cmd_active_{false};
  std::mutex out_mu_;
  std::deque<std::string> outbox_;  // CAR lines for the active command connection
  std::vector<std::thread> workers_;
  std::mutex workers_mu_;
};

}  // namespace mcao::seq

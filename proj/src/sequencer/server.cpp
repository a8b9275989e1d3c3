#include "mcao/sequencer/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <sstream>
#include <system_error>

#include <fmt/format.h>

namespace mcao::seq {

namespace {

int listen_on(int port, int& bound) {
  const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw std::system_error(errno, std::generic_category(), "socket");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(fd, 8) < 0) {
    const int e = errno;
    ::close(fd);
    throw std::system_error(e, std::generic_category(), fmt::format("port {}", port));
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  bound = ntohs(addr.sin_port);
  return fd;
}

bool wait_readable(int fd, int ms) {
  pollfd p{fd, POLLIN, 0};
  return ::poll(&p, 1, ms) > 0;
}

bool send_all(int fd, const std::string& s) {
  std::size_t off = 0;
  while (off < s.size()) {
    const auto n = ::send(fd, s.data() + off, s.size() - off, MSG_NOSIGNAL);
    if (n <= 0) return false;
    off += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

bool parse_command_line(const std::string& line, Verb& verb, std::map<std::string, std::string>& params,
                        std::string* error) {
  std::istringstream in(line);
  std::string tag, v;
  if (!(in >> tag) || tag != "CMD") {
    *error = "expected CMD";
    return false;
  }
  if (!(in >> v)) {
    *error = "missing verb";
    return false;
  }
  const auto pv = parse_verb(v);
  if (!pv) {
    *error = "unknown verb " + v;
    return false;
  }
  verb = *pv;
  params.clear();
  std::string kv;
  while (in >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      *error = "bad parameter " + kv;
      return false;
    }
    params[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return true;
}

Server::Server(Sequencer& seq, TelemetryBus& bus, int cmd_port, int tlm_port) : seq_(seq), bus_(bus) {
  cmd_fd_ = listen_on(cmd_port, cmd_port_);
  try {
    tlm_fd_ = listen_on(tlm_port, tlm_port_);
  } catch (...) {
    ::close(cmd_fd_);
    throw;
  }
  seq_.on_command_update = [this](const CommandRecord& c) {
    std::lock_guard lk(out_mu_);
    if (cmd_active_)
      outbox_.push_back(fmt::format("CAR {} {}{}{}\n", c.id, to_string(c.state), c.detail.empty() ? "" : " ", c.detail));
  };
}

Server::~Server() {
  seq_.on_command_update = nullptr;
  if (cmd_fd_ >= 0) ::close(cmd_fd_);
  if (tlm_fd_ >= 0) ::close(tlm_fd_);
}

std::vector<std::string> Server::run(const std::atomic<bool>& stop) {
  std::thread cmd([&] { accept_commands(stop); });
  std::thread tlm([&] { accept_telemetry(stop); });
  const auto start = std::chrono::steady_clock::now();
  TimeNs base;
  {
    std::lock_guard lk(mu_);
    base = seq_.now();
  }
  while (!stop) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
    const auto el = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start);
    std::lock_guard lk(mu_);
    seq_.advance_to(base + el.count());
  }
  std::vector<std::string> steps;
  {
    std::lock_guard lk(mu_);
    steps = seq_.shutdown();
  }
  // Give listeners a moment to drain the shutdown telemetry.
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  cmd.join();
  tlm.join();
  std::lock_guard lk(workers_mu_);
  for (auto& w : workers_) w.join();
  return steps;
}

void Server::accept_commands(const std::atomic<bool>& stop) {
  while (!stop) {
    if (!wait_readable(cmd_fd_, 50)) continue;
    const int fd = ::accept4(cmd_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    bool expected = false;
    if (!cmd_active_.compare_exchange_strong(expected, true)) {
      send_all(fd, "ERR busy\n");
      ::close(fd);
      continue;
    }
    std::lock_guard lk(workers_mu_);
    workers_.emplace_back([this, fd, &stop] { serve_command(fd, stop); });
  }
}

void Server::accept_telemetry(const std::atomic<bool>& stop) {
  while (!stop) {
    if (!wait_readable(tlm_fd_, 50)) continue;
    const int fd = ::accept4(tlm_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    std::lock_guard lk(workers_mu_);
    workers_.emplace_back([this, fd, &stop] { serve_telemetry(fd, stop); });
  }
}

void Server::serve_command(int fd, const std::atomic<bool>& stop) {
  std::string buf;
  char chunk[512];
  bool open = true;
  auto flush = [&] {
    std::lock_guard lk(out_mu_);
    while (open && !outbox_.empty()) {
      open = send_all(fd, outbox_.front());
      outbox_.pop_front();
    }
  };
  while (open) {
    flush();
    if (stop) break;
    if (!wait_readable(fd, 20)) continue;
    const auto n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n <= 0) break;
    buf.append(chunk, static_cast<std::size_t>(n));
    for (auto nl = buf.find('\n'); nl != std::string::npos; nl = buf.find('\n')) {
      std::string line = buf.substr(0, nl);
      buf.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      Verb verb;
      std::map<std::string, std::string> params;
      std::string err;
      std::string reply;
      if (!parse_command_line(line, verb, params, &err)) {
        reply = "ERR " + err + "\n";
      } else {
        // Completions queued during submit are flushed by this thread, after the ACK.
        std::lock_guard seq_lk(mu_);
        const auto r = seq_.submit(verb, params);
        reply = r.accepted ? fmt::format("ACK {}\n", r.id) : "ERR " + r.reason + "\n";
      }
      open = send_all(fd, reply);
    }
  }
  flush();
  {
    std::lock_guard lk(out_mu_);
    outbox_.clear();
    cmd_active_ = false;
  }
  ::close(fd);
}

void Server::serve_telemetry(int fd, const std::atomic<bool>& stop) {
  auto sub = bus_.subscribe("*", 4096);
  bool open = true;
  while (open) {
    const bool stopping = stop;
    for (const auto& r : sub->drain())
      if (!(open = send_all(fd, format_tlm(r) + "\n"))) break;
    if (stopping) break;
    pollfd p{fd, POLLIN, 0};
    if (::poll(&p, 1, 20) > 0) {
      char c[64];
      if (::recv(fd, c, sizeof c, 0) <= 0) break;
    }
  }
  bus_.unsubscribe(sub);
  ::close(fd);
}

}  // namespace mcao::seq

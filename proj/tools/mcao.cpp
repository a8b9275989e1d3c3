#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <system_error>

#include <CLI11.hpp>

#include "mcao/app/commands.hpp"
#include "mcao/core/config.hpp"
#include "mcao/core/errors.hpp"
#include "mcao/sequencer/scenario.hpp"
#include "mcao/sequencer/server.hpp"

namespace {

constexpr int kExitOk = 0, kExitConfig = 2, kExitDiverged = 3, kExitSafetyClosed = 4;

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

mcao::Config load_config(const std::string& path) {
  return path.empty() ? mcao::Config::parse("") : mcao::Config::load(path);
}

std::string read_file(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw mcao::ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw mcao::ConfigError("cannot write " + path);
  out << text;
}

void warn_unused(const mcao::Config& cfg) {
  for (const auto& k : cfg.unused_keys()) std::fprintf(stderr, "warning: unused config key %s\n", k.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MCAO real-time control, simulation and safety tools"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "INI configuration file")->check(CLI::ExistingFile);

  std::uint64_t frames = 1000, seed = 1;
  int wfe_every = 10;
  std::string out;
  auto* sim = app.add_subcommand("simulate", "closed-loop simulation with an open-loop baseline");
  sim->add_option("--frames", frames, "frames per run");
  sim->add_option("--seed", seed, "atmosphere and noise seed");
  sim->add_option("--out", out, "report file (timing goes to <out>.timing)");
  sim->add_option("--wfe-every", wfe_every, "sample the field WFE every n frames");

  double duration = 2.0;
  auto* bench = app.add_subcommand("bench", "RTC pipeline throughput on synthetic frames");
  bench->add_option("--duration", duration, "seconds to run");
  bench->add_option("--out", out, "report file");

  std::string pointing, windows, events;
  auto* salsa = app.add_subcommand("salsa-check", "replay pointing feeds and aircraft events through SALSA");
  salsa->add_option("--pointing", pointing, "pointing feed file");
  salsa->add_option("--windows", windows, "closure window file");
  salsa->add_option("--events", events, "aircraft event file");
  salsa->add_option("--out", out, "report file");

  int cmd_port = 7300, tlm_port = 7301;
  auto* serve = app.add_subcommand("serve", "run the sequencer behind the command and telemetry sockets");
  serve->add_option("--cmd-port", cmd_port, "command socket port");
  serve->add_option("--tlm-port", tlm_port, "telemetry socket port");

  std::string script;
  auto* scen = app.add_subcommand("scenario", "replay a scripted scenario on the simulation clock");
  scen->add_option("script", script, "scenario file")->required();
  scen->add_option("--out", out, "event log file");

  for (auto* c : {sim, bench, salsa, serve, scen})
    c->add_option("--config", config_path, "INI configuration file")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    const auto cfg = load_config(config_path);
    if (*sim) {
      const auto r = mcao::app::simulate(cfg, frames, seed, wfe_every);
      const auto text = mcao::app::format_report(r);
      std::fputs(text.c_str(), stdout);
      std::fputs(mcao::app::format_timing(r).c_str(), stdout);
      if (!out.empty()) {
        write_file(out, text);
        write_file(out + ".timing", mcao::app::format_timing(r));
      }
      warn_unused(cfg);
      return r.diverged ? kExitDiverged : kExitOk;
    }
    if (*bench) {
      const auto text = mcao::app::format_bench(mcao::app::bench(cfg, duration));
      std::fputs(text.c_str(), stdout);
      if (!out.empty()) write_file(out, text);
      return kExitOk;
    }
    if (*salsa) {
      const auto r = mcao::app::salsa_check(cfg, read_file(pointing), read_file(windows), read_file(events));
      std::string text;
      for (const auto& l : r.lines) text += l + "\n";
      std::fputs(text.c_str(), stdout);
      if (!out.empty()) write_file(out, text);
      return r.shutter_closed ? kExitSafetyClosed : kExitOk;
    }
    if (*scen) {
      const auto lines = mcao::seq::parse_scenario(read_file(script));
      mcao::seq::TelemetryBus bus;
      auto seq = mcao::seq::Sequencer::from_config(cfg, bus);
      const auto r = mcao::seq::run_scenario(seq, lines);
      std::string text;
      for (const auto& l : r.log) text += l + "\n";
      text += std::string("final ") + mcao::seq::to_string(r.final_state) + " shutter " + mcao::salsa::to_string(r.shutter) + "\n";
      std::fputs(text.c_str(), stdout);
      if (!out.empty()) write_file(out, text);
      return kExitOk;
    }
    if (*serve) {
      mcao::seq::TelemetryBus bus;
      auto seq = mcao::seq::Sequencer::from_config(cfg, bus);
      std::unique_ptr<mcao::seq::Server> server;
      try {
        server = std::make_unique<mcao::seq::Server>(seq, bus, cmd_port, tlm_port);
      } catch (const std::system_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
      }
      std::signal(SIGTERM, on_signal);
      std::signal(SIGINT, on_signal);
      std::printf("serving cmd_port=%d tlm_port=%d\n", server->cmd_port(), server->tlm_port());
      std::fflush(stdout);
      const auto steps = server->run(g_stop);
      for (const auto& s : steps) std::printf("shutdown %s\n", s.c_str());
      std::fflush(stdout);
      return kExitOk;
    }
  } catch (const mcao::ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return kExitConfig;
  } catch (const mcao::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const mcao::UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitOk;
}

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "socialarm/errors.hpp"
#include "socialarm/harness.hpp"
#include "socialarm/scenario.hpp"
#include "socialarm/server.hpp"
#include "socialarm/trace_io.hpp"

namespace fs = std::filesystem;
using namespace socialarm;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kValidation = 2, kIo = 3, kPortBusy = 4 };

volatile std::sig_atomic_t g_interrupted = 0;

void on_signal(int) { g_interrupted = 1; }

struct Options {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::string out;
  std::string format = "both";
  std::string addr = "127.0.0.1:8765";
  int max_sessions = 8;
};

TraceFormat parse_format(const std::string& s) {
  if (s == "jsonl") return TraceFormat::jsonl;
  if (s == "csv") return TraceFormat::csv;
  return TraceFormat::both;
}

ScenarioOverrides overrides(const Options& o) { return {o.seed, o.dt}; }

Scenario load(const Options& o) {
  return o.scenario.empty() ? demo_scenario(overrides(o)) : load_scenario(o.scenario, overrides(o));
}

void print_metrics(const std::string& label, const RunMetrics& m) {
  std::printf("%-28s person_gaze_fraction=%.3f switches=%d mean_gaze_error_deg=%.2f mean_abs_joint_speed=%.4f drift_events=%d\n",
              label.c_str(), m.person_gaze_fraction, m.switch_count, m.mean_gaze_error_deg, m.mean_abs_joint_speed,
              m.drift_event_count);
}

int cmd_validate(const Options& o) {
  const Scenario s = load(o);
  std::printf("ok: %s (%zu agents%s, %.2f s at dt=%.4f, %lld ticks)\n",
              o.scenario.empty() ? "bundled demo" : o.scenario.c_str(), s.agents.size(),
              s.recording ? ", recorded stream" : "", s.duration_s, s.dt, static_cast<long long>(s.tick_count()));
  return kOk;
}

int cmd_run(const Options& o, const std::string& label) {
  const Scenario s = load(o);
  const RunResult r = run(s);
  write_run_outputs(o.out, r, parse_format(o.format));
  print_metrics(label, r.metrics);
  std::printf("wrote %s\n", o.out.c_str());
  return kOk;
}

int cmd_suite(const Options& o) {
  const Scenario s = load(o);
  const auto entries = run_condition_suite(s, Execution::serial);
  for (const auto& e : entries) {
    write_run_outputs(fs::path(o.out) / e.preset.name, e.result, parse_format(o.format));
    print_metrics(e.preset.name, e.result.metrics);
  }
  const fs::path summary = fs::path(o.out) / "summary.csv";
  std::ofstream f(summary);
  if (!f) throw IoError("cannot write " + summary.string());
  f << suite_summary_csv(entries);
  if (!f) throw IoError("cannot write " + summary.string());
  std::printf("wrote %s\n", summary.string().c_str());
  return kOk;
}

int cmd_serve(const Options& o) {
  ServerConfig cfg;
  std::tie(cfg.host, cfg.port) = parse_address(o.addr);
  if (o.max_sessions < 1) throw ValidationError("max-sessions", "must be >= 1");
  cfg.max_sessions = o.max_sessions;
  if (o.dt) {
    if (!(*o.dt > 0.0)) throw ValidationError("dt", "must be > 0");
    cfg.engine.dt = *o.dt;
  }
  if (o.seed) cfg.engine.seed = *o.seed;
  cfg.engine.drift.validate("drift", cfg.engine.dt, cfg.engine.robot.reach_radius());

  Server server(cfg);
  struct sigaction sa{};
  sa.sa_handler = on_signal;
  sigemptyset(&sa.sa_mask);
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);

  std::printf("listening on %s:%d (max %d sessions, dt=%.4f)\n", cfg.host.c_str(), server.port(), cfg.max_sessions,
              cfg.engine.dt);
  std::fflush(stdout);
  server.run([] { return g_interrupted != 0; });
  std::printf("shut down\n");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic social-gaze behaviour engine for a 6-DOF arm"};
  app.require_subcommand(1);
  Options o;

  auto add_seed_dt = [&](CLI::App* c) {
    c->add_option("--seed", o.seed, "Override the scenario seed")->envname("SOCIALARM_SEED");
    c->add_option("--dt", o.dt, "Override the tick period in seconds")->envname("SOCIALARM_DT");
  };
  auto add_outputs = [&](CLI::App* c, const std::string& default_out) {
    o.out = default_out;
    c->add_option("--out", o.out, "Output directory")->envname("SOCIALARM_OUT")->capture_default_str();
    c->add_option("--format", o.format, "Trace format")
        ->envname("SOCIALARM_FORMAT")
        ->check(CLI::IsMember({"jsonl", "csv", "both"}))
        ->capture_default_str();
  };

  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("scenario", o.scenario, "Scenario JSON")->required();
  add_seed_dt(validate);

  auto* run_cmd = app.add_subcommand("run", "Run one scenario and write trace and metrics");
  run_cmd->add_option("scenario", o.scenario, "Scenario JSON")->required();
  add_seed_dt(run_cmd);
  add_outputs(run_cmd, "socialarm_out");

  auto* suite = app.add_subcommand("suite", "Run a scenario under all four condition presets");
  suite->add_option("scenario", o.scenario, "Scenario JSON (default: bundled demo)");
  add_seed_dt(suite);
  add_outputs(suite, "socialarm_suite");

  auto* demo = app.add_subcommand("demo", "Run the bundled two-person demo");
  add_seed_dt(demo);
  add_outputs(demo, "socialarm_demo");

  auto* serve = app.add_subcommand("serve", "Start the live session server");
  serve->add_option("--addr", o.addr, "Listen address host:port")->envname("SOCIALARM_ADDR")->capture_default_str();
  serve->add_option("--max-sessions", o.max_sessions, "Concurrent session limit")
      ->envname("SOCIALARM_MAX_SESSIONS")
      ->capture_default_str();
  add_seed_dt(serve);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }

  try {
    if (*validate) return cmd_validate(o);
    if (*run_cmd) return cmd_run(o, fs::path(o.scenario).stem().string());
    if (*suite) return cmd_suite(o);
    if (*demo) return cmd_run(o, "demo");
    if (*serve) return cmd_serve(o);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const BindError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kPortBusy;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

// uavsched: run, sweep and verify delivery-fleet simulations.
//
//   uavsched run --scheme two-cycle --uavs 8 --duration 3600 --seed 7
//   uavsched sweep --schemes one-cycle,two-cycle,three-cycle --uavs 4,6,8 --seeds 1,2,3
//   uavsched verify out/two-cycle_n8_s7.jsonl
//
// Every flag can also come from UAVSCHED_<FLAG> (e.g. UAVSCHED_UAVS=8).
// Exit codes: 0 ok, 1 validation, 2 runtime, 3 verification failure.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "uavsched/experiment.hpp"
#include "uavsched/fsm.hpp"
#include "uavsched/scenario.hpp"
#include "uavsched/trace.hpp"

using namespace uavsched;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;
constexpr int kVerify = 3;

Scheme scheme_arg(const std::string& s) {
  auto v = parse_scheme(s);
  if (!v) throw ScenarioError("unknown scheme '" + s + "' (one-cycle, two-cycle, three-cycle)");
  return *v;
}

struct CommonFlags {
  std::string scenario;
  double duration = 0;
  std::uint64_t seed = 0;
  std::string orders;
  double rate = 0;
  double better = 0;
  double timeout = 0;
  std::string out = "out";
  bool realtime = false;
  bool concurrent = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_seed) {
  cmd->add_option("--scenario", f.scenario, "Scenario file")->envname("UAVSCHED_SCENARIO")->check(CLI::ExistingFile);
  cmd->add_option("--duration", f.duration, "Simulated seconds")->envname("UAVSCHED_DURATION");
  if (with_seed) cmd->add_option("--seed", f.seed, "Order and run seed")->envname("UAVSCHED_SEED");
  auto* orders = cmd->add_option("--orders", f.orders, "Order list file")->envname("UAVSCHED_ORDERS");
  cmd->add_option("--order-rate", f.rate, "Orders per second")->envname("UAVSCHED_ORDER_RATE")->excludes(orders);
  cmd->add_option("--better-offset", f.better, "BetterT - OrderT, seconds")
      ->envname("UAVSCHED_BETTER_OFFSET")
      ->excludes(orders);
  cmd->add_option("--timeout-offset", f.timeout, "TimeOut - OrderT, seconds")
      ->envname("UAVSCHED_TIMEOUT_OFFSET")
      ->excludes(orders);
  cmd->add_option("--out", f.out, "Output directory")->envname("UAVSCHED_OUT");
  cmd->add_flag("--concurrent", f.concurrent, "Drive UAVs and AGVs on separate threads")
      ->envname("UAVSCHED_CONCURRENT");
}

RunSpec spec_from(const CLI::App* cmd, const CommonFlags& f) {
  RunSpec s;
  if (cmd->count("--scenario")) s.scenario = f.scenario;
  if (cmd->count("--duration")) s.duration_s = f.duration;
  if (cmd->get_option_no_throw("--seed") && cmd->count("--seed")) s.seed = f.seed;
  if (cmd->count("--orders")) s.orders_file = f.orders;
  if (cmd->count("--order-rate")) s.order_rate = f.rate;
  if (cmd->count("--better-offset")) s.better_offset_s = f.better;
  if (cmd->count("--timeout-offset")) s.timeout_offset_s = f.timeout;
  s.out_dir = f.out;
  s.realtime = f.realtime;
  s.mode = f.concurrent ? ExecMode::Concurrent : ExecMode::Deterministic;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV delivery fleet simulator (airport / unloading station model)"};
  app.require_subcommand(1);

  CommonFlags run_f;
  std::string run_scheme;
  int run_uavs = 0;
  auto* run = app.add_subcommand("run", "Run one experiment");
  add_common(run, run_f, true);
  run->add_option("--scheme", run_scheme, "one-cycle | two-cycle | three-cycle")->envname("UAVSCHED_SCHEME");
  run->add_option("--uavs", run_uavs, "Number of UAVs")->envname("UAVSCHED_UAVS");
  run->add_flag("--realtime", run_f.realtime, "Pace ticks to wall-clock time")->envname("UAVSCHED_REALTIME");

  CommonFlags sw_f;
  std::vector<std::string> sw_schemes{"one-cycle", "two-cycle", "three-cycle"};
  std::vector<int> sw_uavs{4, 6, 8, 10, 12, 14, 16};
  std::vector<std::uint64_t> sw_seeds{1, 2, 3};
  unsigned sw_jobs = 0;
  bool sw_traces = false;
  bool sw_verify = false;
  std::string sw_csv;
  auto* sweep = app.add_subcommand("sweep", "Sweep schemes x fleet sizes x seeds");
  add_common(sweep, sw_f, false);
  sweep->add_option("--schemes", sw_schemes, "Schemes")->delimiter(',')->envname("UAVSCHED_SCHEMES");
  sweep->add_option("--uavs", sw_uavs, "UAV counts")->delimiter(',')->envname("UAVSCHED_UAVS");
  sweep->add_option("--seeds", sw_seeds, "Seeds")->delimiter(',')->envname("UAVSCHED_SEEDS");
  sweep->add_option("--jobs", sw_jobs, "Parallel cells (0 = all cores)")->envname("UAVSCHED_JOBS");
  sweep->add_flag("--traces", sw_traces, "Keep one trace per cell in the output directory");
  sweep->add_flag("--verify", sw_verify, "Verify every cell's trace");
  sweep->add_option("--csv", sw_csv, "Also write the CSV here (default <out>/sweep.csv)");

  std::vector<std::string> verify_paths;
  auto* verify = app.add_subcommand("verify", "Check trace invariants");
  verify->add_option("trace", verify_paths, "Trace files")->required()->check(CLI::ExistingFile);

  std::string exp_scheme = "one-cycle";
  std::string exp_out;
  auto* exp_sc = app.add_subcommand("export-scenario", "Write a default scenario file");
  exp_sc->add_option("--scheme", exp_scheme, "Scheme")->envname("UAVSCHED_SCHEME");
  exp_sc->add_option("--out", exp_out, "File (default: stdout)");

  auto* exp_fsm = app.add_subcommand("export-fsm", "Print both state machines as Graphviz");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*run) {
      RunSpec spec = spec_from(run, run_f);
      if (run->count("--scheme")) spec.scheme = scheme_arg(run_scheme);
      if (run->count("--uavs")) spec.n_uavs = run_uavs;
      cmd_run(spec, std::cout);
      return kOk;
    }
    if (*sweep) {
      SweepSpec spec;
      spec.base = spec_from(sweep, sw_f);
      for (const auto& s : sw_schemes) spec.schemes.push_back(scheme_arg(s));
      spec.uav_counts = sw_uavs;
      spec.seeds = sw_seeds;
      spec.jobs = sw_jobs;
      spec.write_traces = sw_traces;
      spec.verify = sw_verify;
      const SweepResult r = cmd_sweep(spec);
      const std::string csv = sweep_csv(r);
      std::cout << csv;
      std::filesystem::create_directories(spec.base.out_dir);
      std::ofstream(sw_csv.empty() ? spec.base.out_dir / "sweep.csv" : std::filesystem::path(sw_csv)) << csv;
      int code = kOk;
      for (const auto& c : r.cells) {
        const std::string cell = std::string(to_string(c.scheme)) + " n=" + std::to_string(c.n_uavs) +
                                 " seed=" + std::to_string(c.seed);
        if (!c.metrics) {
          std::cerr << "cell failed: " << cell << ": " << c.error << "\n";
          code = std::max(code, kRuntime);
        } else if (c.violations > 0) {
          std::cerr << "cell violations: " << cell << ": " << c.violations;
          for (const auto& k : c.violation_kinds) std::cerr << " " << k;
          std::cerr << "\n";
          code = kVerify;
        }
      }
      return code;
    }
    if (*verify) {
      int code = kOk;
      for (const auto& p : verify_paths) {
        std::cout << p << ": ";
        code = std::max(code, cmd_verify(p, std::cout));
      }
      return code;
    }
    if (*exp_sc) {
      const std::string text = dump_scenario(default_scenario(scheme_arg(exp_scheme)));
      if (exp_out.empty()) std::cout << text;
      else std::ofstream(exp_out) << text;
      return kOk;
    }
    if (*exp_fsm) {
      std::cout << fsm::to_dot();
      return kOk;
    }
  } catch (const ScenarioError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}

// Command line front end: solve one scenario, sweep a parameter grid, run
// the validation suite, or replay an audit on a saved solution bundle.
//
// Exit codes: 0 success, 1 validation failure, 2 parse/usage error,
// 3 certified infeasible, 4 solver failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cfisac/io.hpp"
#include "cfisac/validation.hpp"

namespace fs = std::filesystem;
using namespace cfisac;

namespace {

void apply_worker_env() {
#ifdef _OPENMP
  if (const char* w = std::getenv("CFISAC_WORKERS")) {
    const int n = std::atoi(w);
    if (n > 0) omp_set_num_threads(n);
  }
#endif
}

void print_audit(const AuditReport& rep) {
  std::printf("%-22s %14s %14s %10s\n", "constraint", "value", "bound", "margin");
  for (const auto& it : rep.items) {
    std::printf("%-22s %14.6g %14.6g %+10.3g %s\n", it.name.c_str(), it.value,
                it.bound, it.rel_margin, it.satisfied ? "" : "VIOLATED");
  }
  std::printf("audit: %s (worst relative violation %.3g)\n",
              rep.pass ? "clean" : "FAILED", rep.worst_rel_violation);
}

int cmd_solve(const std::string& scenario_path, const std::string& design_str,
              const std::string& out_dir, const std::string& dump_sdp_path) {
  try {
    const ScenarioConfig cfg = load_scenario(scenario_path);
    const auto design = design_from_string(design_str);
    if (!design) {
      std::cerr << "unknown design '" << design_str << "'\n";
      return 2;
    }
    const ChannelSet ch = synthesize_channels(cfg);
    if (!dump_sdp_path.empty()) {
      BuiltProblem bp;
      switch (*design) {
        case Design::CellFreeDetection: bp = build_p1(cfg, ch); break;
        case Design::SensingSnrMax: bp = build_p2(cfg, ch); break;
        case Design::Coordinated: bp = build_p3(cfg, ch, associate_nearest(cfg)); break;
        case Design::SensingOnly: bp = build_sensing_only(cfg, ch); break;
      }
      conic::dump_sdpa(bp.sdp, dump_sdp_path);
    }
    const BeamformingSolution sol = solve_design(cfg, ch, *design);
    fs::create_directories(out_dir);
    save_solution_bundle(sol, cfg, (fs::path(out_dir) / "solution.json").string());
    const AuditReport rep = audit_solution(sol, cfg, ch);
    std::printf("design %s: detection probability %.6f (objective %.6g, %d iterations, %.2fs)\n",
                to_string(sol.design), sol.detection_probability, sol.objective_value,
                sol.iterations, sol.wall_seconds);
    print_audit(rep);
    write_scenario(cfg, (fs::path(out_dir) / "scenario.scn").string());
    return rep.pass ? 0 : 4;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid scenario: " << e.what() << "\n";
    return 2;
  } catch (const DesignInfeasible& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 4;
  }
}

int cmd_sweep(const std::string& spec_path, const std::string& out_csv) {
  try {
    const SweepSpec spec = load_sweep_spec(spec_path);
    const SweepResult result = run_sweep(spec);
    write_sweep_csv(result, out_csv);
    fs::path mean_path(out_csv);
    mean_path.replace_extension();
    mean_path += "_mean.csv";
    write_sweep_mean_csv(result, mean_path.string());
    long long failed = 0;
    for (const auto& row : result.rows) failed += row.status == "optimal" ? 0 : 1;
    std::printf("sweep: %zu cells, %lld not optimal; wrote %s and %s\n",
                result.rows.size(), failed, out_csv.c_str(), mean_path.c_str());
    return 0;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid sweep spec: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "sweep failure: " << e.what() << "\n";
    return 4;
  }
}

int cmd_validate(const std::string& scenario_path, long long trials,
                 const std::string& jsonl_path) {
  if (trials < 1) {
    std::cerr << "usage error: --trials must be at least 1\n";
    return 2;
  }
  try {
    const ScenarioConfig cfg = load_scenario(scenario_path);
    ValidationOptions opt;
    opt.trials = trials;
    opt.jsonl_path = jsonl_path;
    const ValidationSummary summary = run_validation(cfg, opt);
    std::cout << summary_json(summary) << "\n";
    return summary.pass ? 0 : 1;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid scenario: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "validation failure: " << e.what() << "\n";
    return 4;
  }
}

int cmd_audit(const std::string& scenario_path, const std::string& bundle_path) {
  try {
    const ScenarioConfig cfg = load_scenario(scenario_path);
    std::uint64_t bundle_hash = 0;
    const BeamformingSolution sol = load_solution_bundle(bundle_path, &bundle_hash);
    if (bundle_hash != scenario_hash(cfg)) {
      std::cerr << "scenario hash mismatch: bundle " << hex64(bundle_hash)
                << " vs scenario " << hex64(scenario_hash(cfg)) << "\n";
      return 2;
    }
    const ChannelSet ch = synthesize_channels(cfg);
    const AuditReport rep = audit_solution(sol, cfg, ch);
    print_audit(rep);
    return rep.pass ? 0 : 1;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "audit failure: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace

int main(int argc, char** argv) {
  apply_worker_env();
  CLI::App app{"secure cell-free ISAC joint transmit beamforming designs"};
  app.require_subcommand(1);

  std::string scenario = "default", design = "p1", out = "out", dump_sdp;
  auto* solve = app.add_subcommand("solve", "solve a scenario with one design");
  solve->add_option("--scenario", scenario, "scenario file or 'default'")->required();
  solve->add_option("--design", design, "p1|p2|p3|sensing_only");
  solve->add_option("--out", out, "output directory")->required();
  solve->add_option("--dump-sdp", dump_sdp, "write the compiled conic problem (SDPA-like)");

  std::string spec_path, out_csv = "sweep.csv";
  auto* sweep = app.add_subcommand("sweep", "sweep a parameter grid");
  sweep->add_option("--spec", spec_path, "sweep spec file")->required();
  sweep->add_option("--out", out_csv, "output CSV path")->required();

  std::string v_scenario = "default", jsonl;
  long long trials = 100000;
  auto* validate = app.add_subcommand("validate", "run the invariant suite");
  validate->add_option("--scenario", v_scenario, "scenario file or 'default'")->required();
  validate->add_option("--trials", trials, "Monte-Carlo trials per experiment");
  validate->add_option("--jsonl", jsonl, "append per-experiment records here");

  std::string a_scenario, bundle;
  auto* audit = app.add_subcommand("audit", "re-audit a saved solution bundle");
  audit->add_option("--scenario", a_scenario, "scenario file or 'default'")->required();
  audit->add_option("--solution", bundle, "solution bundle path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (solve->parsed()) return cmd_solve(scenario, design, out, dump_sdp);
  if (sweep->parsed()) return cmd_sweep(spec_path, out_csv);
  if (validate->parsed()) return cmd_validate(v_scenario, trials, jsonl);
  if (audit->parsed()) return cmd_audit(a_scenario, bundle);
  return 2;
}

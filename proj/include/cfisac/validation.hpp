#pragma once
// The invariant suite behind `validate`: SDR tightness on fresh solves,
// design-ordering checks, Monte-Carlo agreement with the closed forms,
// distribution tests, and solver KKT spot checks on synthetic problems with
// known optima.

#include <functional>
#include <string>
#include <vector>

#include "cfisac/io.hpp"
#include "cfisac/montecarlo.hpp"

namespace cfisac {

struct CheckResult {
  std::string name;
  bool pass = true;
  std::string detail;
};

struct ValidationOptions {
  long long trials = 100000;
  std::uint64_t seed = 1;
  bool parallel = true;
  int solver_spot_checks = 20;
  // Test hook: corrupts the first solved solution before the tightness
  // checks run (negative-control path).
  std::function<void(BeamformingSolution&)> tamper;
  std::string jsonl_path;  // per-experiment records, when nonempty
};

struct ValidationSummary {
  std::vector<CheckResult> checks;
  bool pass = true;
};

ValidationSummary run_validation(const ScenarioConfig& cfg,
                                 const ValidationOptions& opt = {});

std::string summary_json(const ValidationSummary& s);

// One-sample Kolmogorov-Smirnov statistic against the chi-square CDF with
// two degrees of freedom, 1 - exp(-x/2).
double ks_statistic_chi2_2(std::vector<double> doubled_stats);
// Asymptotic critical value at significance alpha.
double ks_critical(double alpha, std::size_t n);

// Synthetic Hermitian SDP with a constructed primal-dual pair at zero gap;
// the optimum objective is known exactly.
struct SyntheticSdp {
  conic::SdpProblem problem;
  double optimum = 0.0;
  int dim = 0;
  int m = 0;
};
SyntheticSdp make_synthetic_sdp(Rng& rng, int dim, int m);

// Solves a batch of synthetic problems and checks objective, feasibility,
// and complementarity residuals; returns a failure description or empty.
std::string solver_kkt_suite(int count, std::uint64_t seed,
                             const conic::SolveOptions& opts = {});

}  // namespace cfisac

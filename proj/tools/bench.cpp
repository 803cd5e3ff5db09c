// Compares the OpenMP kernels against their serial reference drivers on the
// default scenario and reports wall times, speedups, and result agreement.

#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cfisac/io.hpp"
#include "cfisac/montecarlo.hpp"

using namespace cfisac;

namespace {

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <typename Fn>
double timed(Fn&& fn) {
  const double t0 = now_s();
  fn();
  return now_s() - t0;
}

void report(const char* name, double serial_s, double parallel_s, bool equal) {
  std::printf("%-28s serial %8.3fs  parallel %8.3fs  speedup %5.2fx  %s\n", name,
              serial_s, parallel_s, serial_s / parallel_s,
              equal ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
  std::printf("built without OpenMP; parallel paths run serially\n");
#endif
  const ScenarioConfig cfg = default_scenario();
  const ChannelSet ch = synthesize_channels(cfg);
  const BeamformingSolution sol = solve_design(cfg, ch, Design::CellFreeDetection);

  {
    TrialConfig tc;
    tc.n_trials = 20000;
    tc.t_symbols = 256;
    tc.hypothesis = Hypothesis::H1;
    GlrtOptions serial_opt, parallel_opt;
    serial_opt.parallel = false;
    parallel_opt.parallel = true;
    TrialOutcome a, b;
    const double ts = timed([&] { a = simulate_glrt(tc, sol, cfg, ch, serial_opt); });
    const double tp = timed([&] { b = simulate_glrt(tc, sol, cfg, ch, parallel_opt); });
    report("glrt trials (2e4 x 256)", ts, tp,
           a.empirical_rate == b.empirical_rate &&
               a.analytic_value == b.analytic_value);
  }
  {
    TrialConfig tc;
    tc.n_trials = 2000000;
    tc.hypothesis = Hypothesis::H1;
    TrialOutcome a, b;
    const double ts =
        timed([&] { a = simulate_energy_eavesdropper(tc, sol, cfg, ch, 0, false); });
    const double tp =
        timed([&] { b = simulate_energy_eavesdropper(tc, sol, cfg, ch, 0, true); });
    report("energy detector (2e6)", ts, tp, a.empirical_rate == b.empirical_rate);
  }
  {
    arma::cx_mat a, b;
    const double ts = timed([&] { a = sample_transmit_covariance(sol, 1000000, 7, false); });
    const double tp = timed([&] { b = sample_transmit_covariance(sol, 1000000, 7, true); });
    report("sample covariance (1e6)", ts, tp,
           arma::norm(a - b, "fro") == 0.0);
  }
  {
    SweepSpec spec;
    spec.base = cfg;
    spec.parameter = SweepParameter::PowerDbm;
    spec.grid = {38.0, 40.0, 42.0};
    spec.designs = {Design::CellFreeDetection, Design::SensingSnrMax};
    spec.seeds = {1, 2, 3, 4};
    SweepResult a, b;
    const double ts = timed([&] { a = run_sweep(spec, false); });
    const double tp = timed([&] { b = run_sweep(spec, true); });
    bool equal = a.rows.size() == b.rows.size();
    for (size_t i = 0; equal && i < a.rows.size(); ++i) {
      equal = a.rows[i].p_d == b.rows[i].p_d && a.rows[i].status == b.rows[i].status;
    }
    report("sweep (3 x 2 x 4 cells)", ts, tp, equal);
  }
  return 0;
}

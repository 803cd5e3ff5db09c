#pragma once
// Empirical validation of the closed-form statistics: GLRT trials at the
// sensing receivers and per-symbol energy detection at sensing
// eavesdroppers, on synthesized transmit signals. Trials fork per-trial RNG
// streams and reduce deterministically, so results are bit-identical across
// thread counts; the serial path (parallel = false) is the reference the
// OpenMP kernels are tested against.

#include <optional>
#include <vector>

#include "cfisac/designs.hpp"

namespace cfisac {

enum class Hypothesis { H0, H1 };

struct TrialConfig {
  long long n_trials = 100000;
  long long t_symbols = 256;
  Hypothesis hypothesis = Hypothesis::H1;
  std::uint64_t seed = 1;

  void validate(int m_t) const;
};

struct TrialOutcome {
  double empirical_rate = 0.0;
  std::pair<double, double> wilson_ci{0.0, 0.0};  // 99%
  double analytic_value = 0.0;
  long long n_trials = 0;
  long long n_resampled = 0;
  // Energy detector only: beta < zeta flips the likelihood-ratio side; the
  // reported rate keeps the threshold-exceedance rule (continuous in
  // beta/zeta and equal to the closed form on both sides), and the rate the
  // flipped rule would achieve is carried alongside.
  bool np_side_flipped = false;
  double np_rule_rate = 0.0;
};

struct GlrtOptions {
  // Reflection coefficients fixed across trials, receiver-major
  // (index j*M_t + i). Absent: drawn per trial from the scenario variances.
  std::optional<arma::cx_vec> fixed_alpha;
  bool parallel = true;
};

std::pair<double, double> wilson_interval(long long successes, long long n,
                                          double z = 2.5758293035489004);

// Per-trial GLRT over t_symbols: synthesize x(t) from the solution, build
// the realized regression matrices, and threshold the doubled statistic
// against Xi. Under H1 the analytic comparator is the per-draw
// detection probability averaged over the alpha draws.
TrialOutcome simulate_glrt(const TrialConfig& cfg, const BeamformingSolution& sol,
                           const ScenarioConfig& scn, const ChannelSet& ch,
                           const GlrtOptions& opt = {});

// Raw doubled GLRT statistics (one per trial), for distribution tests.
std::vector<double> glrt_statistics(const TrialConfig& cfg,
                                    const BeamformingSolution& sol,
                                    const ScenarioConfig& scn, const ChannelSet& ch,
                                    const GlrtOptions& opt = {});

// Per-symbol energy detection at sensing eavesdropper q with the
// optimal-threshold rule; one symbol per trial.
TrialOutcome simulate_energy_eavesdropper(const TrialConfig& cfg,
                                          const BeamformingSolution& sol,
                                          const ScenarioConfig& scn,
                                          const ChannelSet& ch, int q,
                                          bool parallel = true);

// Sample transmit covariance (1/T) sum_t x(t) x(t)^H.
arma::cx_mat sample_transmit_covariance(const BeamformingSolution& sol,
                                        long long t_symbols, std::uint64_t seed,
                                        bool parallel = true);

// Realized sum_t of the per-receiver reflected-signal correlations, the
// sample-covariance counterpart of build_r_phi.
arma::cx_mat sample_r_phi(const BeamformingSolution& sol, const ChannelSet& ch,
                          long long t_symbols, std::uint64_t seed,
                          bool parallel = true);

}  // namespace cfisac

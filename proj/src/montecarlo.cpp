#include "cfisac/montecarlo.hpp"

#include <cmath>

namespace cfisac {

namespace {

// Synthesizes x(t) = sum_k w_k s_k(t) + F z(t) with F F^H = S.
struct TxSampler {
  std::vector<arma::cx_vec> w;
  arma::cx_mat f;  // dim x rank factor of S
  int dim = 0;

  explicit TxSampler(const BeamformingSolution& sol) {
    w = sol.w;
    dim = static_cast<int>(sol.S.n_rows);
    arma::vec ev;
    arma::cx_mat evec;
    if (!arma::eig_sym(ev, evec, hermitize(sol.S))) {
      throw std::runtime_error("TxSampler: eigendecomposition of S failed");
    }
    const double cutoff = 1e-12 * std::max(ev.max(), 0.0);
    std::vector<arma::uword> keep;
    for (arma::uword i = 0; i < ev.n_elem; ++i) {
      if (ev(i) > cutoff) keep.push_back(i);
    }
    f.set_size(dim, keep.size());
    for (size_t c = 0; c < keep.size(); ++c) {
      f.col(c) = evec.col(keep[c]) * std::sqrt(ev(keep[c]));
    }
  }

  arma::cx_vec draw(Rng& rng) const {
    arma::cx_vec x(dim, arma::fill::zeros);
    for (const auto& wk : w) x += rng.cgauss() * wk;
    for (arma::uword c = 0; c < f.n_cols; ++c) x += rng.cgauss() * f.col(c);
    return x;
  }
};

struct GlrtContext {
  TxSampler tx;
  const ChannelSet& ch;
  int n, mt, mr;
  long long t;
  double sigma_s2, xi, p_fa, obj_expected;
  Hypothesis hyp;
  std::optional<arma::cx_vec> fixed_alpha;

  GlrtContext(const TrialConfig& cfg, const BeamformingSolution& sol,
              const ScenarioConfig& scn, const ChannelSet& chan,
              const GlrtOptions& opt)
      : tx(sol), ch(chan) {
    cfg.validate(chan.m_t);
    n = chan.n;
    mt = chan.m_t;
    mr = chan.m_r;
    t = cfg.t_symbols;
    sigma_s2 = scn.noise_w();
    p_fa = scn.false_alarm_prob;
    xi = glrt_threshold(p_fa);
    obj_expected =
        glrt_objective(build_r_phi(sol.R, chan.a_tx, cfg.t_symbols, n), mr);
    hyp = cfg.hypothesis;
    fixed_alpha = opt.fixed_alpha;
    if (fixed_alpha && static_cast<int>(fixed_alpha->n_elem) != mt * mr) {
      throw std::invalid_argument("fixed_alpha must have length M_t*M_r");
    }
  }
};

struct GlrtTrial {
  double stat2 = 0.0;
  double analytic = 0.0;
  bool reject = false;
  int resamples = 0;
};

GlrtTrial run_glrt_trial(const GlrtContext& c, const Rng& root, long long trial) {
  GlrtTrial out;
  for (int attempt = 0;; ++attempt) {
    Rng rng = root.fork(trial, attempt);
    arma::cx_vec alpha(c.mt * c.mr, arma::fill::zeros);
    if (c.hyp == Hypothesis::H1) {
      if (c.fixed_alpha) {
        alpha = *c.fixed_alpha;
      } else {
        for (int j = 0; j < c.mr; ++j) {
          for (int i = 0; i < c.mt; ++i) {
            alpha(j * c.mt + i) =
                std::sqrt(c.ch.alpha_var(i, j)) * rng.cgauss();
          }
        }
      }
    }
    arma::cx_mat rhat(c.mt, c.mt, arma::fill::zeros);
    arma::cx_mat v(c.mt, c.mr, arma::fill::zeros);
    arma::cx_vec s(c.mt);
    const double noise_sd = std::sqrt(static_cast<double>(c.n) * c.sigma_s2);
    for (long long ti = 0; ti < c.t; ++ti) {
      const arma::cx_vec x = c.tx.draw(rng);
      for (int i = 0; i < c.mt; ++i) {
        s(i) = arma::cdot(c.ch.a_tx[i], x.subvec(i * c.n, (i + 1) * c.n - 1));
      }
      rhat += arma::conj(s) * s.st();
      for (int j = 0; j < c.mr; ++j) {
        cx e = noise_sd * rng.cgauss();
        if (c.hyp == Hypothesis::H1) {
          cx echo = 0.0;
          for (int i = 0; i < c.mt; ++i) echo += alpha(j * c.mt + i) * s(i);
          e += static_cast<double>(c.n) * echo;
        }
        v.col(j) += arma::conj(s) * e;
      }
    }
    arma::cx_mat rhat_n = hermitize(static_cast<double>(c.n) * rhat);
    arma::cx_mat lower;
    const double tr = rhat_n.n_rows > 0 ? arma::trace(rhat_n).real() : 0.0;
    bool ok = tr > 0.0 && arma::chol(lower, rhat_n, "lower");
    if (ok) {
      // Guard against near-singular realizations the factorization survived.
      double dmin = lower(0, 0).real();
      for (arma::uword i = 1; i < lower.n_rows; ++i) {
        dmin = std::min(dmin, lower(i, i).real());
      }
      ok = dmin * dmin > 1e-12 * tr / static_cast<double>(c.mt);
    }
    if (!ok) {
      out.resamples = attempt + 1;
      if (attempt >= 16) {
        throw std::runtime_error("GLRT trial: regression matrix persistently singular");
      }
      continue;
    }
    auto solve_chol = [&](const arma::cx_vec& rhs) {
      arma::cx_vec t1 = arma::solve(arma::trimatl(lower), rhs);
      return arma::cx_vec(arma::solve(arma::trimatu(lower.t().eval()), t1));
    };
    const arma::cx_vec ones(c.mt, arma::fill::ones);
    const double q1 = arma::cdot(ones, solve_chol(ones)).real();
    cx mu_alpha_hat = 0.0;
    for (int j = 0; j < c.mr; ++j) {
      mu_alpha_hat += arma::accu(solve_chol(v.col(j)));
    }
    out.stat2 =
        2.0 * std::norm(mu_alpha_hat) / (c.sigma_s2 * static_cast<double>(c.mr) * q1);
    out.reject = out.stat2 > c.xi;
    if (c.hyp == Hypothesis::H0) {
      out.analytic = c.p_fa;
    } else {
      const double lam =
          std::norm(arma::accu(alpha)) / (c.sigma_s2 * c.obj_expected);
      out.analytic = detection_probability(lam, c.p_fa);
    }
    return out;
  }
}

template <typename Fn>
void for_each_trial(long long n_trials, bool parallel, Fn&& fn) {
#pragma omp parallel for schedule(static) if (parallel)
  for (long long i = 0; i < n_trials; ++i) fn(i);
}

}  // namespace

void TrialConfig::validate(int m_t) const {
  if (n_trials < 1) throw std::invalid_argument("n_trials must be >= 1");
  if (t_symbols < m_t) {
    throw std::invalid_argument("t_symbols must be >= M_t for an invertible regression");
  }
}

std::pair<double, double> wilson_interval(long long successes, long long n, double z) {
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

TrialOutcome simulate_glrt(const TrialConfig& cfg, const BeamformingSolution& sol,
                           const ScenarioConfig& scn, const ChannelSet& ch,
                           const GlrtOptions& opt) {
  const GlrtContext ctx(cfg, sol, scn, ch, opt);
  const Rng root(cfg.seed);
  std::vector<GlrtTrial> trials(cfg.n_trials);
  for_each_trial(cfg.n_trials, opt.parallel,
                 [&](long long i) { trials[i] = run_glrt_trial(ctx, root, i); });
  TrialOutcome out;
  out.n_trials = cfg.n_trials;
  long long rejects = 0;
  double analytic = 0.0;
  for (const auto& t : trials) {
    rejects += t.reject ? 1 : 0;
    analytic += t.analytic;
    out.n_resampled += t.resamples;
  }
  out.empirical_rate = static_cast<double>(rejects) / static_cast<double>(cfg.n_trials);
  out.analytic_value = analytic / static_cast<double>(cfg.n_trials);
  out.wilson_ci = wilson_interval(rejects, cfg.n_trials);
  return out;
}

std::vector<double> glrt_statistics(const TrialConfig& cfg,
                                    const BeamformingSolution& sol,
                                    const ScenarioConfig& scn, const ChannelSet& ch,
                                    const GlrtOptions& opt) {
  const GlrtContext ctx(cfg, sol, scn, ch, opt);
  const Rng root(cfg.seed);
  std::vector<double> stats(cfg.n_trials);
  for_each_trial(cfg.n_trials, opt.parallel, [&](long long i) {
    stats[i] = run_glrt_trial(ctx, root, i).stat2;
  });
  return stats;
}

TrialOutcome simulate_energy_eavesdropper(const TrialConfig& cfg,
                                          const BeamformingSolution& sol,
                                          const ScenarioConfig& scn,
                                          const ChannelSet& ch, int q,
                                          bool parallel) {
  if (q < 0 || q >= static_cast<int>(ch.a_eve.size())) {
    throw std::out_of_range("simulate_energy_eavesdropper: bad eavesdropper index");
  }
  if (cfg.n_trials < 1) throw std::invalid_argument("n_trials must be >= 1");
  const TxSampler tx(sol);
  const double sigma_s2 = scn.noise_w();
  const int n = ch.n;
  const auto [zeta, beta] = zeta_beta(sol.R, ch.a_eve[q], ch.u_eve[q], sigma_s2, n);
  const bool flipped = beta < zeta;
  double thr;
  if (std::abs(beta - zeta) <= 1e-14 * zeta) {
    thr = zeta;  // continuous limit of the optimal threshold
  } else {
    thr = zeta * beta * std::log(beta / zeta) / (beta - zeta);
  }
  const arma::cx_vec probe =
      cfg.hypothesis == Hypothesis::H1 ? arma::cx_vec(ch.a_eve[q] + ch.u_eve[q])
                                       : ch.u_eve[q];
  const double noise_sd = std::sqrt(static_cast<double>(n) * sigma_s2);
  const Rng root(cfg.seed);
  std::vector<unsigned char> exceed(cfg.n_trials);
  for_each_trial(cfg.n_trials, parallel, [&](long long i) {
    Rng rng = root.fork(i);
    const arma::cx_vec x = tx.draw(rng);
    const cx y = arma::cdot(probe, x) + noise_sd * rng.cgauss();
    exceed[i] = std::norm(y) > thr ? 1 : 0;
  });
  long long count = 0;
  for (auto e : exceed) count += e;
  TrialOutcome out;
  out.n_trials = cfg.n_trials;
  out.empirical_rate = static_cast<double>(count) / static_cast<double>(cfg.n_trials);
  out.wilson_ci = wilson_interval(count, cfg.n_trials);
  out.np_side_flipped = flipped;
  out.np_rule_rate = flipped ? 1.0 - out.empirical_rate : out.empirical_rate;
  out.analytic_value = cfg.hypothesis == Hypothesis::H1
                           ? eavesdrop_probability(zeta, beta)
                           : std::exp(-thr / zeta);
  return out;
}

arma::cx_mat sample_transmit_covariance(const BeamformingSolution& sol,
                                        long long t_symbols, std::uint64_t seed,
                                        bool parallel) {
  const TxSampler tx(sol);
  const Rng root(seed);
  const long long chunk = 8192;
  const long long n_chunks = (t_symbols + chunk - 1) / chunk;
  std::vector<arma::cx_mat> acc(n_chunks);
#pragma omp parallel for schedule(static) if (parallel)
  for (long long c = 0; c < n_chunks; ++c) {
    arma::cx_mat local(tx.dim, tx.dim, arma::fill::zeros);
    const long long hi = std::min(t_symbols, (c + 1) * chunk);
    for (long long t = c * chunk; t < hi; ++t) {
      Rng rng = root.fork(t);
      const arma::cx_vec x = tx.draw(rng);
      local += x * x.t();
    }
    acc[c] = std::move(local);
  }
  arma::cx_mat total(tx.dim, tx.dim, arma::fill::zeros);
  for (const auto& a : acc) total += a;
  return total / static_cast<double>(t_symbols);
}

arma::cx_mat sample_r_phi(const BeamformingSolution& sol, const ChannelSet& ch,
                          long long t_symbols, std::uint64_t seed, bool parallel) {
  const TxSampler tx(sol);
  const Rng root(seed);
  const int mt = ch.m_t;
  const int n = ch.n;
  const long long chunk = 8192;
  const long long n_chunks = (t_symbols + chunk - 1) / chunk;
  std::vector<arma::cx_mat> acc(n_chunks);
#pragma omp parallel for schedule(static) if (parallel)
  for (long long c = 0; c < n_chunks; ++c) {
    arma::cx_mat local(mt, mt, arma::fill::zeros);
    arma::cx_vec s(mt);
    const long long hi = std::min(t_symbols, (c + 1) * chunk);
    for (long long t = c * chunk; t < hi; ++t) {
      Rng rng = root.fork(t);
      const arma::cx_vec x = tx.draw(rng);
      for (int i = 0; i < mt; ++i) {
        s(i) = arma::cdot(ch.a_tx[i], x.subvec(i * n, (i + 1) * n - 1));
      }
      local += arma::conj(s) * s.st();
    }
    acc[c] = std::move(local);
  }
  arma::cx_mat total(mt, mt, arma::fill::zeros);
  for (const auto& a : acc) total += a;
  return static_cast<double>(n) * total;
}

}  // namespace cfisac

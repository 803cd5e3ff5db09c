#include "cfisac/validation.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cfisac {

namespace {

using nlohmann::json;

struct CheckRecorder {
  ValidationSummary& summary;
  const ValidationOptions& opt;
  std::uint64_t scenario_hash_v = 0;

  void add(const std::string& name, bool pass, const std::string& detail) {
    summary.checks.push_back({name, pass, detail});
    if (!pass) summary.pass = false;
    if (!opt.jsonl_path.empty()) {
      json j{{"check", name}, {"pass", pass}, {"detail", detail},
             {"scenario_hash", hex64(scenario_hash_v)}};
      append_jsonl(opt.jsonl_path, j.dump());
    }
  }
  void record_mc(const std::string& name, const TrialOutcome& out, bool pass) {
    if (!opt.jsonl_path.empty()) {
      json j{{"experiment", name},
             {"scenario_hash", hex64(scenario_hash_v)},
             {"empirical", out.empirical_rate},
             {"analytic", out.analytic_value},
             {"ci", {out.wilson_ci.first, out.wilson_ci.second}},
             {"n", out.n_trials},
             {"pass", pass}};
      append_jsonl(opt.jsonl_path, j.dump());
    }
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

double ks_statistic_chi2_2(std::vector<double> doubled_stats) {
  std::sort(doubled_stats.begin(), doubled_stats.end());
  const double n = static_cast<double>(doubled_stats.size());
  double d = 0.0;
  for (std::size_t i = 0; i < doubled_stats.size(); ++i) {
    const double f = 1.0 - std::exp(-0.5 * doubled_stats[i]);
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max(d, std::max(std::abs(f - lo), std::abs(hi - f)));
  }
  return d;
}

double ks_critical(double alpha, std::size_t n) {
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

SyntheticSdp make_synthetic_sdp(Rng& rng, int dim, int m) {
  SyntheticSdp out;
  out.dim = dim;
  out.m = m;
  auto rand_herm = [&](int d) {
    arma::cx_mat a(d, d);
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) a(r, c) = rng.cgauss();
    }
    return arma::cx_mat(hermitize(a));
  };
  // Random unitary from the QR of a Gaussian matrix.
  arma::cx_mat g(dim, dim), q, rr;
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) g(r, c) = rng.cgauss();
  }
  arma::qr(q, rr, g);
  const int rank = std::max(1, dim / 2);
  arma::vec dx(dim, arma::fill::zeros), dz(dim, arma::fill::zeros);
  for (int i = 0; i < rank; ++i) dx(i) = 0.2 + rng.uniform();
  for (int i = rank; i < dim; ++i) dz(i) = 0.2 + rng.uniform();
  const arma::cx_mat x_star =
      q * arma::diagmat(arma::conv_to<arma::cx_vec>::from(dx)) * q.t();
  const arma::cx_mat z_star =
      q * arma::diagmat(arma::conv_to<arma::cx_vec>::from(dz)) * q.t();

  std::vector<arma::cx_mat> a(m);
  arma::vec y_star(m);
  arma::cx_mat c(dim, dim, arma::fill::zeros);
  for (int i = 0; i < m; ++i) {
    a[i] = rand_herm(dim);
    y_star(i) = rng.gauss();
    c += y_star(i) * a[i];
  }
  c += z_star;

  conic::VarRef x = out.problem.add_psd_var(dim, "x");
  for (int i = 0; i < m; ++i) {
    out.problem.add_eq(conic::trace_term(x, a[i]), ip(a[i], x_star));
  }
  out.problem.set_objective(conic::trace_term(x, c));
  out.optimum = ip(c, x_star);
  return out;
}

std::string solver_kkt_suite(int count, std::uint64_t seed,
                             const conic::SolveOptions& opts) {
  Rng rng(seed);
  for (int t = 0; t < count; ++t) {
    Rng local = rng.fork(t);
    const int dim = 2 + static_cast<int>(local.uniform() * 5.0);  // 2..6
    const int max_m = dim * dim - 1;
    const int m = 1 + static_cast<int>(local.uniform() * std::min(6, max_m));
    SyntheticSdp s = make_synthetic_sdp(local, dim, m);
    const conic::SolverResult r = conic::solve(s.problem, opts);
    if (r.status != conic::SolverResult::Status::Optimal) {
      return "instance " + std::to_string(t) + ": status " +
             std::string(conic::to_string(r.status));
    }
    const double obj_err =
        std::abs(r.objective - s.optimum) / (1.0 + std::abs(s.optimum));
    if (obj_err > 1e-5) {
      return "instance " + std::to_string(t) + ": objective off by " + fmt(obj_err);
    }
    if (r.max_violation > 10.0 * opts.feas_tol) {
      return "instance " + std::to_string(t) + ": violation " + fmt(r.max_violation);
    }
    // Complementary slackness at the returned pair.
    const arma::cx_mat& x = r.primal.at(0);
    const arma::cx_mat& z = r.dual.at(0);
    const double xznorm = arma::norm(arma::cx_mat(x * z), "fro");
    const double bound = 10.0 * opts.gap_tol *
                         (1.0 + arma::norm(x, "fro") * arma::norm(z, "fro"));
    if (xznorm > bound) {
      return "instance " + std::to_string(t) + ": complementarity " + fmt(xznorm) +
             " > " + fmt(bound);
    }
  }
  return {};
}

ValidationSummary run_validation(const ScenarioConfig& cfg,
                                 const ValidationOptions& opt) {
  ValidationSummary summary;
  CheckRecorder rec{summary, opt, scenario_hash(cfg)};
  const ChannelSet ch = synthesize_channels(cfg);
  const double sigma2 = cfg.noise_w();

  // ---- solves + tightness + audit ----
  std::map<Design, BeamformingSolution> sols;
  for (Design d : {Design::CellFreeDetection, Design::SensingSnrMax,
                   Design::Coordinated, Design::SensingOnly}) {
    try {
      BeamformingSolution sol = solve_design(cfg, ch, d);
      if (d == Design::CellFreeDetection && opt.tamper) opt.tamper(sol);
      sols.emplace(d, std::move(sol));
    } catch (const std::exception& e) {
      rec.add(std::string("solve.") + to_string(d), false, e.what());
    }
  }
  for (const auto& [d, sol] : sols) {
    bool tight = true;
    std::string detail;
    for (size_t k = 0; k < sol.W.size(); ++k) {
      arma::vec ev;
      arma::eig_sym(ev, hermitize(sol.W[k]));
      const double top = ev(ev.n_elem - 1);
      const double second = ev.n_elem > 1 ? std::abs(ev(ev.n_elem - 2)) : 0.0;
      if (!(second <= 1e-6 * std::max(top, 1e-300))) {
        tight = false;
        detail = "W[" + std::to_string(k) + "] second eigenvalue ratio " +
                 fmt(second / top);
      }
    }
    const double s_tr = std::abs(arma::trace(sol.S).real());
    if (min_eig_herm(sol.S) < -1e-7 * s_tr) {
      tight = false;
      detail = "S min eigenvalue " + fmt(min_eig_herm(sol.S));
    }
    rec.add(std::string("tightness.") + to_string(d), tight, detail);
    const AuditReport audit = audit_solution(sol, cfg, ch);
    rec.add(std::string("audit.") + to_string(d), audit.pass,
            audit.pass ? "" : "worst relative violation " + fmt(audit.worst_rel_violation));
  }

  // ---- ordering across designs ----
  if (sols.size() == 4) {
    const double o_p1 = sols.at(Design::CellFreeDetection).detection_objective;
    const double o_p3 = sols.at(Design::Coordinated).detection_objective;
    const double o_p2 = sols.at(Design::SensingSnrMax).detection_objective;
    const double o_so = sols.at(Design::SensingOnly).detection_objective;
    const double slack = 1e-7;
    const bool ok = o_so <= o_p1 * (1.0 + slack) && o_p1 <= o_p3 * (1.0 + slack) &&
                    o_p1 <= o_p2 * (1.0 + slack);
    rec.add("ordering.detection_objective", ok,
            "sensing_only " + fmt(o_so) + ", p1 " + fmt(o_p1) + ", p3 " + fmt(o_p3) +
                ", p2-evaluated " + fmt(o_p2));
  }

  // ---- Monte-Carlo: GLRT false alarm, fixed-alpha detection, KS ----
  if (sols.count(Design::CellFreeDetection)) {
    const BeamformingSolution& sol = sols.at(Design::CellFreeDetection);
    TrialConfig tc;
    tc.n_trials = opt.trials;
    tc.t_symbols = std::max<long long>(4 * cfg.m_t(), 64);
    tc.hypothesis = Hypothesis::H0;
    tc.seed = opt.seed;
    GlrtOptions go;
    go.parallel = opt.parallel;
    const TrialOutcome h0 = simulate_glrt(tc, sol, cfg, ch, go);
    const bool h0_ok = h0.wilson_ci.first <= cfg.false_alarm_prob &&
                       cfg.false_alarm_prob <= h0.wilson_ci.second;
    rec.add("mc.glrt_false_alarm", h0_ok,
            "empirical " + fmt(h0.empirical_rate) + " vs " + fmt(cfg.false_alarm_prob));
    rec.record_mc("glrt_h0", h0, h0_ok);

    // Fixed alpha targeting a mid-range noncentrality.
    tc.hypothesis = Hypothesis::H1;
    tc.t_symbols = 256;
    const double obj =
        glrt_objective(build_r_phi(sol.R, ch.a_tx, tc.t_symbols, cfg.n_antennas),
                       cfg.m_r());
    const double lambda_target = 5.0;
    const int mtr = cfg.m_t() * cfg.m_r();
    const double mag = std::sqrt(lambda_target * sigma2 * obj) / mtr;
    GlrtOptions fixed = go;
    fixed.fixed_alpha = arma::cx_vec(mtr, arma::fill::ones) * mag;
    const TrialOutcome h1 = simulate_glrt(tc, sol, cfg, ch, fixed);
    const bool h1_ok = std::abs(h1.empirical_rate - h1.analytic_value) <= 0.01;
    rec.add("mc.glrt_fixed_alpha", h1_ok,
            "empirical " + fmt(h1.empirical_rate) + " analytic " + fmt(h1.analytic_value));
    rec.record_mc("glrt_h1_fixed", h1, h1_ok);

    TrialConfig ks_cfg = tc;
    ks_cfg.hypothesis = Hypothesis::H0;
    ks_cfg.n_trials = 10000;
    const std::vector<double> stats = glrt_statistics(ks_cfg, sol, cfg, ch, go);
    const double d = ks_statistic_chi2_2(stats);
    const double crit = ks_critical(0.01, stats.size());
    rec.add("mc.glrt_h0_ks_chi2", d <= crit, "D " + fmt(d) + " critical " + fmt(crit));

    // ---- energy eavesdropper agreement and the constraint chain ----
    for (int q = 0; q < cfg.n_sense_eve(); ++q) {
      TrialConfig ec;
      ec.n_trials = opt.trials;
      ec.hypothesis = Hypothesis::H1;
      ec.seed = opt.seed + 177 + q;
      const TrialOutcome eo =
          simulate_energy_eavesdropper(ec, sol, cfg, ch, q, opt.parallel);
      const bool agree = std::abs(eo.empirical_rate - eo.analytic_value) <= 0.01;
      const bool chain = eo.empirical_rate <= cfg.eavesdrop_prob_threshold + 0.01;
      rec.add("mc.eave_rate[" + std::to_string(q) + "]", agree && chain,
              "empirical " + fmt(eo.empirical_rate) + " analytic " +
                  fmt(eo.analytic_value) + " bound " + fmt(cfg.eavesdrop_prob_threshold));
      rec.record_mc("eave_h1_q" + std::to_string(q), eo, agree && chain);
    }

    // ---- transmit sample covariance vs R ----
    const long long t_cov = 1000000;
    const arma::cx_mat cov = sample_transmit_covariance(sol, t_cov, opt.seed + 3,
                                                        opt.parallel);
    const double err = arma::norm(cov - sol.R, "fro") / arma::norm(sol.R, "fro");
    rec.add("mc.sample_covariance", err <= 0.01, "relative error " + fmt(err));
  }

  // ---- probability identities ----
  {
    bool ok = true;
    std::string detail;
    for (double b : {0.0, 0.5, 1.5, 4.0, 10.0}) {
      const double lhs = marcum_q1(0.0, b);
      const double rhs = std::exp(-0.5 * b * b);
      if (std::abs(lhs - rhs) > 1e-12) {
        ok = false;
        detail = "Q1(0," + fmt(b) + ") off by " + fmt(lhs - rhs);
      }
    }
    for (double x : {0.2, 0.9, 1.5, 5.0}) {
      const double root = gamma_d_root(eavesdrop_ratio_fn(x));
      if (std::abs(root - x) > 1e-9) {
        ok = false;
        detail = "gamma_d_root roundtrip at " + fmt(x) + " gave " + fmt(root);
      }
    }
    rec.add("prob.identities", ok, detail);
  }

  // ---- solver spot checks ----
  {
    const std::string fail = solver_kkt_suite(opt.solver_spot_checks, opt.seed + 99);
    rec.add("solver.kkt_suite", fail.empty(), fail);
  }

  return summary;
}

std::string summary_json(const ValidationSummary& s) {
  json j;
  j["pass"] = s.pass;
  json checks = json::array();
  for (const auto& c : s.checks) {
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  }
  j["checks"] = std::move(checks);
  int failed = 0;
  for (const auto& c : s.checks) failed += c.pass ? 0 : 1;
  j["n_failed"] = failed;
  j["n_checks"] = s.checks.size();
  return j.dump(1);
}

}  // namespace cfisac

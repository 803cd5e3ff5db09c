#include "cfisac/designs.hpp"

#include <chrono>
#include <cmath>

namespace cfisac {

const char* to_string(Design d) {
  switch (d) {
    case Design::CellFreeDetection: return "p1";
    case Design::SensingSnrMax: return "p2";
    case Design::Coordinated: return "p3";
    case Design::SensingOnly: return "sensing_only";
  }
  return "unknown";
}

std::optional<Design> design_from_string(const std::string& s) {
  if (s == "p1") return Design::CellFreeDetection;
  if (s == "p2") return Design::SensingSnrMax;
  if (s == "p3") return Design::Coordinated;
  if (s == "sensing_only") return Design::SensingOnly;
  return std::nullopt;
}

Association associate_nearest(const ScenarioConfig& cfg) {
  Association a;
  a.cu_to_tx.resize(cfg.n_cu());
  for (int k = 0; k < cfg.n_cu(); ++k) {
    int best = 0;
    double best_d = distance(cfg.cu_positions[k], cfg.tx_positions[0]);
    for (int i = 1; i < cfg.m_t(); ++i) {
      const double d = distance(cfg.cu_positions[k], cfg.tx_positions[i]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    a.cu_to_tx[k] = best;
  }
  return a;
}

namespace {

arma::cx_mat slot_block(const arma::cx_mat& p, int i, int n) {
  return p.submat(i * n, i * n, (i + 1) * n - 1, (i + 1) * n - 1);
}

arma::cx_mat embed_slot(const arma::cx_mat& blk, int i, int n, int mt) {
  arma::cx_mat full(n * mt, n * mt, arma::fill::zeros);
  full.submat(i * n, i * n, (i + 1) * n - 1, (i + 1) * n - 1) = blk;
  return full;
}

struct Builder {
  const ScenarioConfig& cfg;
  const ChannelSet& ch;
  BuiltProblem bp;
  int n, mt, nk, nl, nq, mr;
  double gamma, omega, gamma_d;
  std::vector<arma::cx_vec> hn, gn, an, un, atil;

  Builder(const ScenarioConfig& c, const ChannelSet& chan, Design design,
          const Association* assoc, const DesignOptions& opt)
      : cfg(c), ch(chan) {
    n = cfg.n_antennas;
    mt = cfg.m_t();
    mr = cfg.m_r();
    nk = cfg.n_cu();
    nl = cfg.n_info_eve();
    nq = cfg.n_sense_eve();
    bp.design = design;
    bp.power_w = cfg.power_w();
    bp.coordinated = design == Design::Coordinated;
    bp.blockdiag_s = bp.coordinated && opt.coordinated_blockdiag_s;
    if (bp.coordinated) {
      bp.assoc = assoc ? *assoc : associate_nearest(cfg);
    }
    gamma = cfg.sinr_lin();
    omega = cfg.info_snr_lin();
    gamma_d = gamma_d_root(cfg.eavesdrop_prob_threshold);
    const double sigma2 = cfg.noise_w();
    // Variables carry power units of P; channels absorb the noise floors so
    // every constraint row is O(1)-conditioned.
    const double cu_scale = std::sqrt(bp.power_w / sigma2);
    const double se_scale = std::sqrt(bp.power_w / (n * sigma2));
    hn.reserve(nk);
    for (int k = 0; k < nk; ++k) hn.push_back(arma::cx_vec(cu_scale * ch.h[k]));
    gn.reserve(nl);
    for (int l = 0; l < nl; ++l) gn.push_back(arma::cx_vec(cu_scale * ch.g[l]));
    an.reserve(nq);
    un.reserve(nq);
    for (int q = 0; q < nq; ++q) {
      an.push_back(arma::cx_vec(se_scale * ch.a_eve[q]));
      un.push_back(arma::cx_vec(se_scale * ch.u_eve[q]));
    }
    atil.reserve(mt);
    for (int i = 0; i < mt; ++i) atil.push_back(ch.stacked_tx_steering(i));

    if (design != Design::SensingOnly) {
      for (int k = 0; k < nk; ++k) {
        bp.w_vars.push_back(bp.sdp.add_psd_var(bp.coordinated ? n : n * mt,
                                               "W" + std::to_string(k)));
      }
    }
    if (bp.blockdiag_s) {
      for (int i = 0; i < mt; ++i) {
        bp.s_vars.push_back(bp.sdp.add_psd_var(n, "S" + std::to_string(i)));
      }
    } else {
      bp.s_vars.push_back(bp.sdp.add_psd_var(n * mt, "S"));
    }
  }

  // tr(P * R') with R' = sum_k W'_k + S' in solver units.
  conic::LinExpr r_term(const arma::cx_mat& p) const {
    conic::LinExpr e;
    for (int k = 0; k < static_cast<int>(bp.w_vars.size()); ++k) {
      if (bp.coordinated) {
        e.add_term(bp.w_vars[k], slot_block(p, bp.assoc.cu_to_tx[k], n));
      } else {
        e.add_term(bp.w_vars[k], p);
      }
    }
    if (bp.blockdiag_s) {
      for (int i = 0; i < mt; ++i) e.add_term(bp.s_vars[i], slot_block(p, i, n));
    } else {
      e.add_term(bp.s_vars[0], p);
    }
    return e;
  }

  conic::LinExpr w_term(int k, const arma::cx_mat& p) const {
    conic::LinExpr e;
    if (bp.coordinated) {
      e.add_term(bp.w_vars[k], slot_block(p, bp.assoc.cu_to_tx[k], n));
    } else {
      e.add_term(bp.w_vars[k], p);
    }
    return e;
  }

  void add_sinr_rows() {
    for (int k = 0; k < nk; ++k) {
      const arma::cx_mat hk = hn[k] * hn[k].t();
      conic::LinExpr e = w_term(k, hk);
      e *= 1.0 + gamma;
      conic::LinExpr r = r_term(hk);
      r *= -gamma;
      e += r;
      bp.sdp.add_ge(e, gamma);
    }
  }

  void add_security_rows() {
    for (int l = 0; l < nl; ++l) {
      const arma::cx_mat gl = gn[l] * gn[l].t();
      for (int k = 0; k < nk; ++k) bp.sdp.add_le(w_term(k, gl), omega);
    }
    for (int q = 0; q < nq; ++q) {
      const arma::cx_vec s = an[q] + un[q];
      const arma::cx_mat coeff = s * s.t() - gamma_d * (un[q] * un[q].t());
      bp.sdp.add_le(r_term(coeff), gamma_d - 1.0);
    }
  }

  void add_power_rows() {
    for (int i = 0; i < mt; ++i) {
      arma::cx_mat sel(n * mt, n * mt, arma::fill::zeros);
      sel.submat(i * n, i * n, (i + 1) * n - 1, (i + 1) * n - 1) =
          arma::eye<arma::cx_mat>(n, n);
      bp.sdp.add_le(r_term(sel), 1.0);
    }
  }

  void add_detection_objective() {
    conic::MatExpr rphi(mt);
    for (int m = 0; m < mt; ++m) {
      for (int q = 0; q < mt; ++q) {
        rphi.at(m, q) = r_term(static_cast<double>(n) * atil[m] * atil[q].t());
      }
    }
    bp.sdp.add_inverse_quadform_epigraph(rphi, arma::cx_vec(mt, arma::fill::ones),
                                         static_cast<double>(mr));
  }

  void add_snr_objective() {
    arma::cx_mat c(n * mt, n * mt, arma::fill::zeros);
    for (int i = 0; i < mt; ++i) c += atil[i] * atil[i].t();
    bp.sdp.set_objective(r_term(c), /*minimize=*/false);
  }
};

// ---- first-principles evaluation shared by audit and solution stats ----

double sinr_eq7(const BeamformingSolution& sol, const ChannelSet& ch, int k,
                double sigma2) {
  const arma::cx_vec& h = ch.h[k];
  double inter = 0.0;
  for (size_t j = 0; j < sol.w.size(); ++j) {
    if (static_cast<int>(j) == k) continue;
    inter += std::norm(arma::cdot(h, sol.w[j]));
  }
  inter += arma::cdot(h, sol.S * h).real();
  return std::norm(arma::cdot(h, sol.w[k])) / (inter + sigma2);
}

double leak_snr_eq10(const BeamformingSolution& sol, const ChannelSet& ch, int l,
                     int k, double sigma2) {
  return std::norm(arma::cdot(ch.g[l], sol.w[k])) / sigma2;
}

SensingStatistics sensing_stats_of(const arma::cx_mat& R, const ScenarioConfig& cfg,
                                   const ChannelSet& ch) {
  SensingStatistics st;
  const arma::cx_mat r_phi1 = build_r_phi(R, ch.a_tx, 1, cfg.n_antennas);
  const double obj1 = glrt_objective(r_phi1, cfg.m_r());
  const double t = static_cast<double>(cfg.symbol_count);
  st.r_phi = t * r_phi1;
  st.objective = obj1 / t;
  st.p_fa = cfg.false_alarm_prob;
  st.threshold_xi = glrt_threshold(st.p_fa);
  st.lambda_nc = arma::accu(ch.alpha_var) / (cfg.noise_w() * st.objective);
  st.p_d = detection_probability(st.lambda_nc, st.p_fa);
  return st;
}

}  // namespace

BuiltProblem build_p1(const ScenarioConfig& cfg, const ChannelSet& ch,
                      const DesignOptions& opt) {
  Builder b(cfg, ch, Design::CellFreeDetection, nullptr, opt);
  b.add_sinr_rows();
  b.add_security_rows();
  b.add_power_rows();
  b.add_detection_objective();
  return std::move(b.bp);
}

BuiltProblem build_p2(const ScenarioConfig& cfg, const ChannelSet& ch,
                      const DesignOptions& opt) {
  Builder b(cfg, ch, Design::SensingSnrMax, nullptr, opt);
  b.add_sinr_rows();
  b.add_security_rows();
  b.add_power_rows();
  b.add_snr_objective();
  return std::move(b.bp);
}

BuiltProblem build_p3(const ScenarioConfig& cfg, const ChannelSet& ch,
                      const Association& assoc, const DesignOptions& opt) {
  Builder b(cfg, ch, Design::Coordinated, &assoc, opt);
  if (opt.coordinated_include_sinr) b.add_sinr_rows();
  b.add_security_rows();
  b.add_power_rows();
  b.add_detection_objective();
  return std::move(b.bp);
}

BuiltProblem build_sensing_only(const ScenarioConfig& cfg, const ChannelSet& ch,
                                const DesignOptions& opt) {
  Builder b(cfg, ch, Design::SensingOnly, nullptr, opt);
  b.add_power_rows();
  b.add_detection_objective();
  return std::move(b.bp);
}

RankOneExtraction extract_rank1(const std::vector<arma::cx_mat>& w_star,
                                const arma::cx_mat& s_star,
                                const std::vector<arma::cx_vec>& h) {
  if (w_star.size() > h.size()) {
    throw std::invalid_argument("extract_rank1: missing channel vectors");
  }
  RankOneExtraction ex;
  arma::cx_mat r = s_star;
  for (const auto& wk : w_star) r += wk;
  ex.S = r;
  for (size_t k = 0; k < w_star.size(); ++k) {
    const arma::cx_vec wh = w_star[k] * h[k];
    const double qf = arma::cdot(h[k], wh).real();
    const double scale = std::abs(arma::trace(w_star[k]).real()) *
                         arma::dot(arma::conj(h[k]), h[k]).real();
    if (!(qf > 1e-12 * scale) || !(qf > 0.0)) {
      throw TightnessError("rank-one extraction degenerate: h^H W h ~ 0 for CU " +
                           std::to_string(k));
    }
    const arma::cx_vec v = wh / std::sqrt(qf);
    ex.w.push_back(v);
    ex.W.push_back(arma::cx_mat(v * v.t()));
    ex.S -= ex.W.back();
  }
  ex.S = hermitize(ex.S);
  return ex;
}

AuditReport audit_solution(const BeamformingSolution& sol,
                           const ScenarioConfig& cfg, const ChannelSet& ch,
                           double rel_slack) {
  AuditReport rep;
  const double sigma2 = cfg.noise_w();
  auto push = [&](std::string name, double value, double bound, bool upper) {
    AuditItem it;
    it.name = std::move(name);
    it.value = value;
    it.bound = bound;
    it.is_upper_bound = upper;
    const double denom = std::max(std::abs(bound), 1e-300);
    it.rel_margin = (upper ? bound - value : value - bound) / denom;
    it.satisfied = it.rel_margin >= -rel_slack;
    if (!it.satisfied) rep.pass = false;
    rep.worst_rel_violation = std::max(rep.worst_rel_violation, -it.rel_margin);
    rep.items.push_back(std::move(it));
  };

  for (size_t k = 0; k < sol.w.size(); ++k) {
    push("sinr[" + std::to_string(k) + "]",
         sinr_eq7(sol, ch, static_cast<int>(k), sigma2), cfg.sinr_lin(), false);
  }
  for (int l = 0; l < cfg.n_info_eve(); ++l) {
    for (size_t k = 0; k < sol.w.size(); ++k) {
      push("info_snr[" + std::to_string(l) + "," + std::to_string(k) + "]",
           leak_snr_eq10(sol, ch, l, static_cast<int>(k), sigma2),
           cfg.info_snr_lin(), true);
    }
  }
  for (int q = 0; q < cfg.n_sense_eve(); ++q) {
    const auto [zeta, beta] =
        zeta_beta(sol.R, ch.a_eve[q], ch.u_eve[q], sigma2, cfg.n_antennas);
    push("eave_prob[" + std::to_string(q) + "]", eavesdrop_probability(zeta, beta),
         cfg.eavesdrop_prob_threshold, true);
  }
  for (int i = 0; i < cfg.m_t(); ++i) {
    const double p =
        arma::trace(slot_block(sol.R, i, cfg.n_antennas)).real();
    push("power[" + std::to_string(i) + "]", p, cfg.power_w(), true);
  }
  // Structural consistency of the solution bundle itself.
  {
    arma::cx_mat acc = sol.S;
    for (const auto& wk : sol.W) acc += wk;
    const double rn = std::max(arma::norm(sol.R, "fro"), 1e-300);
    push("aggregate_residual", arma::norm(sol.R - acc, "fro") / rn, 1e-9, true);
    push("s_min_eig", min_eig_herm(sol.S),
         -1e-7 * std::abs(arma::trace(sol.S).real()), false);
    for (size_t k = 0; k < sol.W.size(); ++k) {
      const double wn = std::max(arma::norm(sol.W[k], "fro"), 1e-300);
      push("rank1_residual[" + std::to_string(k) + "]",
           arma::norm(sol.W[k] - sol.w[k] * sol.w[k].t(), "fro") / wn, 1e-6, true);
    }
  }
  const SensingStatistics st = sensing_stats_of(sol.R, cfg, ch);
  rep.detection_probability = st.p_d;
  rep.detection_objective = st.objective * static_cast<double>(cfg.symbol_count);
  return rep;
}

BeamformingSolution solve_design(const ScenarioConfig& cfg, const ChannelSet& ch,
                                 Design design, const DesignOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  BuiltProblem bp;
  switch (design) {
    case Design::CellFreeDetection: bp = build_p1(cfg, ch, opt); break;
    case Design::SensingSnrMax: bp = build_p2(cfg, ch, opt); break;
    case Design::Coordinated: bp = build_p3(cfg, ch, associate_nearest(cfg), opt); break;
    case Design::SensingOnly: bp = build_sensing_only(cfg, ch, opt); break;
  }
  const conic::SolverResult res = conic::solve(bp.sdp, opt.solver);
  using St = conic::SolverResult::Status;
  if (res.status == St::Infeasible) {
    throw DesignInfeasible(std::string(to_string(design)) +
                           ": certified infeasible at the given thresholds");
  }
  if (res.status != St::Optimal) {
    throw SolveFailure(std::string(to_string(design)) + ": solver returned " +
                       conic::to_string(res.status));
  }

  const int n = cfg.n_antennas;
  const int mt = cfg.m_t();
  std::vector<arma::cx_mat> w_star;
  for (size_t k = 0; k < bp.w_vars.size(); ++k) {
    arma::cx_mat wk = res.matrix(bp.w_vars[k]) * bp.power_w;
    if (bp.coordinated) wk = embed_slot(wk, bp.assoc.cu_to_tx[k], n, mt);
    w_star.push_back(std::move(wk));
  }
  arma::cx_mat s_star;
  if (bp.blockdiag_s) {
    s_star = arma::cx_mat(n * mt, n * mt, arma::fill::zeros);
    for (int i = 0; i < mt; ++i) {
      s_star += embed_slot(res.matrix(bp.s_vars[i]) * bp.power_w, i, n, mt);
    }
  } else {
    s_star = res.matrix(bp.s_vars[0]) * bp.power_w;
  }

  RankOneExtraction ex = extract_rank1(w_star, s_star, ch.h);

  BeamformingSolution sol;
  sol.design = design;
  sol.W = std::move(ex.W);
  sol.w = std::move(ex.w);
  sol.S = std::move(ex.S);
  sol.R = sol.S;
  for (const auto& wk : sol.W) sol.R += wk;
  sol.R = hermitize(sol.R);
  sol.stats = sensing_stats_of(sol.R, cfg, ch);
  sol.detection_objective =
      sol.stats.objective * static_cast<double>(cfg.symbol_count);
  sol.detection_probability = sol.stats.p_d;

  const double sigma2 = cfg.noise_w();
  for (size_t k = 0; k < sol.w.size(); ++k) {
    sol.sinr.push_back(sinr_eq7(sol, ch, static_cast<int>(k), sigma2));
  }
  sol.eave_snr.set_size(cfg.n_info_eve(), static_cast<int>(sol.w.size()));
  for (int l = 0; l < cfg.n_info_eve(); ++l) {
    for (size_t k = 0; k < sol.w.size(); ++k) {
      sol.eave_snr(l, k) = leak_snr_eq10(sol, ch, l, static_cast<int>(k), sigma2);
    }
  }
  const double gamma_d = gamma_d_root(cfg.eavesdrop_prob_threshold);
  for (int q = 0; q < cfg.n_sense_eve(); ++q) {
    EavesdropStatistics es;
    std::tie(es.zeta, es.beta) =
        zeta_beta(sol.R, ch.a_eve[q], ch.u_eve[q], sigma2, n);
    es.p_eave = eavesdrop_probability(es.zeta, es.beta);
    es.gamma_d = gamma_d;
    sol.eave.push_back(es);
  }
  for (int i = 0; i < mt; ++i) {
    sol.tx_power.push_back(arma::trace(slot_block(sol.R, i, n)).real());
  }
  if (design == Design::SensingSnrMax) {
    double acc = 0.0;
    for (int i = 0; i < mt; ++i) {
      const arma::cx_vec at = ch.stacked_tx_steering(i);
      acc += arma::cdot(at, sol.R * at).real();
    }
    sol.objective_value = acc / (mt * sigma2);
  } else {
    sol.objective_value = sol.detection_objective;
  }
  sol.solve_status = res.status;
  sol.iterations = res.iterations;
  sol.duality_gap = res.duality_gap;
  sol.scenario_hash = scenario_hash(cfg);
  sol.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

}  // namespace cfisac

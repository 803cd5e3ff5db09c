#include "cfisac/scenario.hpp"

#include <sstream>
#include <stdexcept>

namespace cfisac {

namespace {

// Stream tags for seed forking; values are arbitrary but fixed.
enum StreamTag : std::uint64_t {
  kCuChannel = 1,
  kEveChannel = 2,
  kScatterPos = 3,
  kClutterGain = 4,
  kEtaDraw = 5,
};

arma::cx_vec rician_block(const ScenarioConfig& cfg, const Vec2& tx,
                          const Vec2& node, Rng& rng) {
  const int n = cfg.n_antennas;
  const double pl = cfg.pathloss(distance(tx, node));
  const double kr = cfg.rician_lin();
  // Weight forms stay finite in both the pure-LoS and pure-scatter limits.
  const double los_w = std::sqrt(1.0 / (1.0 + 1.0 / kr));
  const double scatter_w = std::sqrt(1.0 / (1.0 + kr));
  const arma::cx_vec los = steering_vector(azimuth(tx, node), n);
  arma::cx_vec scatter(n);
  for (int m = 0; m < n; ++m) scatter(m) = rng.cgauss();
  return std::sqrt(pl) * (los_w * los + scatter_w * scatter);
}

void check_nodes_distinct(const ScenarioConfig& cfg) {
  std::vector<std::pair<Vec2, const char*>> nodes;
  auto push = [&](const std::vector<Vec2>& v, const char* name) {
    for (const auto& p : v) nodes.emplace_back(p, name);
  };
  push(cfg.tx_positions, "tx");
  push(cfg.rx_positions, "rx");
  push(cfg.cu_positions, "cu");
  push(cfg.info_eve_positions, "info_eve");
  push(cfg.sense_eve_positions, "sense_eve");
  nodes.emplace_back(cfg.target_position, "target");
  for (size_t a = 0; a < nodes.size(); ++a) {
    for (size_t b = a + 1; b < nodes.size(); ++b) {
      if (distance(nodes[a].first, nodes[b].first) <= 0.0) {
        throw std::invalid_argument(
            std::string("coincident nodes: ") + nodes[a].second + " and " +
            nodes[b].second);
      }
    }
  }
}

}  // namespace

void ScenarioConfig::validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
  };
  require(m_t() >= 1, "need at least one transmitter");
  require(m_r() >= 1, "need at least one sensing receiver");
  require(n_cu() >= 1, "need at least one CU");
  require(n_info_eve() >= 1, "need at least one information eavesdropper");
  require(n_sense_eve() >= 1, "need at least one sensing eavesdropper");
  require(n_antennas >= 1, "need at least one antenna");
  require(field_size_m[0] > 0.0 && field_size_m[1] > 0.0, "field size must be positive");
  require(eavesdrop_prob_threshold > 0.0 && eavesdrop_prob_threshold < 1.0,
          "eavesdrop_prob_threshold must lie in (0,1)");
  require(false_alarm_prob > 0.0 && false_alarm_prob < 1.0,
          "false_alarm_prob must lie in (0,1)");
  require(rcs_variance > 0.0, "rcs_variance must be positive");
  require(pathloss_exp > 0.0, "pathloss_exp must be positive");
  require(symbol_count >= 1, "symbol_count must be at least 1");
  auto finite_pos = [&](double v, const char* msg) {
    require(std::isfinite(v) && v > 0.0, msg);
  };
  finite_pos(noise_w(), "noise power must convert to a finite positive value");
  finite_pos(power_w(), "power budget must convert to a finite positive value");
  finite_pos(sinr_lin(), "SINR threshold must convert to a finite positive value");
  finite_pos(info_snr_lin(), "info SNR threshold must convert to a finite positive value");
  auto all_finite = [&](const std::vector<Vec2>& v) {
    for (const auto& p : v)
      require(std::isfinite(p.x) && std::isfinite(p.y), "non-finite position");
  };
  all_finite(tx_positions);
  all_finite(rx_positions);
  all_finite(cu_positions);
  all_finite(info_eve_positions);
  all_finite(sense_eve_positions);
  require(std::isfinite(target_position.x) && std::isfinite(target_position.y),
          "non-finite target position");
  check_nodes_distinct(*this);
}

ScenarioConfig default_scenario() {
  ScenarioConfig c;
  c.field_size_m = {100.0, 100.0};
  c.tx_positions = {{0.0, 0.0}, {100.0, 0.0}};
  c.rx_positions = {{20.0, 60.0}, {80.0, 60.0}};
  c.cu_positions = {{20.0, 40.0}, {20.0, 80.0}, {80.0, 40.0}, {80.0, 80.0}};
  c.info_eve_positions = {{20.0, 100.0}, {80.0, 100.0}};
  c.sense_eve_positions = {{40.0, 80.0}, {60.0, 80.0}};
  c.target_position = {50.0, 50.0};
  return c;
}

arma::cx_vec steering_vector(double angle_rad, int n) {
  arma::cx_vec a(n);
  const double s = std::sin(angle_rad);
  for (int m = 0; m < n; ++m) {
    a(m) = std::polar(1.0, M_PI * m * s);
  }
  return a;
}

arma::mat selector_matrix(int i, int m_t, int n) {
  if (i < 1 || i > m_t) throw std::out_of_range("selector_matrix: index out of range");
  arma::mat a(n, n * m_t, arma::fill::zeros);
  a.cols((i - 1) * n, i * n - 1) = arma::eye(n, n);
  return a;
}

arma::cx_vec ChannelSet::stacked_tx_steering(int i) const {
  arma::cx_vec v(n * m_t, arma::fill::zeros);
  v.subvec(i * n, (i + 1) * n - 1) = a_tx[i];
  return v;
}

ChannelSet synthesize_channels(const ScenarioConfig& cfg) {
  return synthesize_channels(cfg, cfg.rng_seed);
}

ChannelSet synthesize_channels(const ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const Rng root(seed);
  const int n = cfg.n_antennas;
  const int mt = cfg.m_t();
  const int mr = cfg.m_r();
  const int k = cfg.n_cu();
  const int l = cfg.n_info_eve();
  const int q = cfg.n_sense_eve();

  ChannelSet ch;
  ch.n = n;
  ch.m_t = mt;
  ch.m_r = mr;

  // Geometry-derived angles and steering vectors.
  ch.theta.resize(mt);
  ch.a_tx.resize(mt);
  for (int i = 0; i < mt; ++i) {
    ch.theta[i] = azimuth(cfg.tx_positions[i], cfg.target_position);
    ch.a_tx[i] = steering_vector(ch.theta[i], n);
  }
  ch.phi.resize(mr);
  ch.a_rx.resize(mr);
  for (int j = 0; j < mr; ++j) {
    ch.phi[j] = azimuth(cfg.target_position, cfg.rx_positions[j]);
    ch.a_rx[j] = steering_vector(ch.phi[j], n);
  }
  ch.omega.resize(q);
  for (int e = 0; e < q; ++e) {
    ch.omega[e] = azimuth(cfg.target_position, cfg.sense_eve_positions[e]);
  }

  // Rician communication channels, stacked over transmitters.
  ch.h.resize(k);
  for (int u = 0; u < k; ++u) {
    arma::cx_vec hk(n * mt);
    for (int i = 0; i < mt; ++i) {
      Rng rng = root.fork(kCuChannel, u, i);
      hk.subvec(i * n, (i + 1) * n - 1) =
          rician_block(cfg, cfg.tx_positions[i], cfg.cu_positions[u], rng);
    }
    ch.h[u] = hk;
  }
  ch.g.resize(l);
  for (int e = 0; e < l; ++e) {
    arma::cx_vec gl(n * mt);
    for (int i = 0; i < mt; ++i) {
      Rng rng = root.fork(kEveChannel, e, i);
      gl.subvec(i * n, (i + 1) * n - 1) =
          rician_block(cfg, cfg.tx_positions[i], cfg.info_eve_positions[e], rng);
    }
    ch.g[e] = gl;
  }

  // Two scatterers, uniform over the field, shared by all clutter paths.
  {
    Rng rng = root.fork(kScatterPos);
    for (auto& s : ch.scatterers) {
      s.x = rng.uniform() * cfg.field_size_m[0];
      s.y = rng.uniform() * cfg.field_size_m[1];
    }
  }

  // Clutter channels tx i -> scatterer s -> sensing eavesdropper q. Gains are
  // zero-mean complex Gaussian with variance equal to the two-hop pathloss.
  ch.clutter.assign(mt, std::vector<arma::cx_mat>(q));
  for (int i = 0; i < mt; ++i) {
    for (int e = 0; e < q; ++e) {
      arma::cx_mat c(n, n, arma::fill::zeros);
      for (int s = 0; s < 2; ++s) {
        Rng rng = root.fork(kClutterGain, (std::uint64_t)i * 1024 + e, s);
        const double var =
            cfg.pathloss(distance(cfg.tx_positions[i], ch.scatterers[s])) *
            cfg.pathloss(distance(ch.scatterers[s], cfg.sense_eve_positions[e]));
        const cx rho = std::sqrt(var) * rng.cgauss();
        const arma::cx_vec ar =
            steering_vector(azimuth(ch.scatterers[s], cfg.sense_eve_positions[e]), n);
        const arma::cx_vec at =
            steering_vector(azimuth(cfg.tx_positions[i], ch.scatterers[s]), n);
        c += rho * ar * at.t();
      }
      ch.clutter[i][e] = c;
    }
  }

  // Target-path coefficients. alpha (tx -> target -> receiver) is drawn per
  // Monte-Carlo trial; only its variance is fixed here. eta (tx -> target ->
  // sensing eavesdropper) is realized once, like the clutter.
  ch.alpha_var.set_size(mt, mr);
  for (int i = 0; i < mt; ++i) {
    const double pl_ti = cfg.pathloss(distance(cfg.tx_positions[i], cfg.target_position));
    for (int j = 0; j < mr; ++j) {
      ch.alpha_var(i, j) =
          pl_ti * cfg.pathloss(distance(cfg.target_position, cfg.rx_positions[j])) *
          cfg.rcs_variance;
    }
  }
  ch.eta.set_size(mt, q);
  for (int i = 0; i < mt; ++i) {
    const double pl_ti = cfg.pathloss(distance(cfg.tx_positions[i], cfg.target_position));
    for (int e = 0; e < q; ++e) {
      Rng rng = root.fork(kEtaDraw, i, e);
      const double var =
          pl_ti * cfg.pathloss(distance(cfg.target_position, cfg.sense_eve_positions[e])) *
          cfg.rcs_variance;
      ch.eta(i, e) = std::sqrt(var) * rng.cgauss();
    }
  }

  // Equivalent steering and clutter vectors seen after the eavesdropper's
  // receive beamformer a_r(omega_q).
  ch.a_eve.resize(q);
  ch.u_eve.resize(q);
  for (int e = 0; e < q; ++e) {
    const arma::cx_vec ar_q = steering_vector(ch.omega[e], n);
    arma::cx_vec a(n * mt), u(n * mt);
    for (int i = 0; i < mt; ++i) {
      a.subvec(i * n, (i + 1) * n - 1) =
          static_cast<double>(n) * std::conj(ch.eta(i, e)) * ch.a_tx[i];
      u.subvec(i * n, (i + 1) * n - 1) = ch.clutter[i][e].t() * ar_q;
    }
    ch.a_eve[e] = a;
    ch.u_eve[e] = u;
  }

  return ch;
}

std::string canonical_scenario_text(const ScenarioConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "field_size_m = " << cfg.field_size_m[0] << ' ' << cfg.field_size_m[1] << '\n';
  os << "n_antennas = " << cfg.n_antennas << '\n';
  os << "pathloss_ref_db = " << cfg.pathloss_ref_db << '\n';
  os << "pathloss_exp = " << cfg.pathloss_exp << '\n';
  os << "noise_power_dbm = " << cfg.noise_power_dbm << '\n';
  os << "rician_factor_db = " << cfg.rician_factor_db << '\n';
  os << "rcs_variance = " << cfg.rcs_variance << '\n';
  os << "power_budget_dbm = " << cfg.power_budget_dbm << '\n';
  os << "sinr_threshold_db = " << cfg.sinr_threshold_db << '\n';
  os << "info_snr_threshold_db = " << cfg.info_snr_threshold_db << '\n';
  os << "eavesdrop_prob_threshold = " << cfg.eavesdrop_prob_threshold << '\n';
  os << "false_alarm_prob = " << cfg.false_alarm_prob << '\n';
  os << "symbol_count = " << cfg.symbol_count << '\n';
  os << "rng_seed = " << cfg.rng_seed << '\n';
  os << "target_position = " << cfg.target_position.x << ' ' << cfg.target_position.y << '\n';
  auto dump = [&](const char* key, const std::vector<Vec2>& v) {
    for (const auto& p : v) os << key << " = " << p.x << ' ' << p.y << '\n';
  };
  dump("tx_position", cfg.tx_positions);
  dump("rx_position", cfg.rx_positions);
  dump("cu_position", cfg.cu_positions);
  dump("info_eve_position", cfg.info_eve_positions);
  dump("sense_eve_position", cfg.sense_eve_positions);
  return os.str();
}

std::uint64_t scenario_hash(const ScenarioConfig& cfg) {
  return fnv1a64_str(canonical_scenario_text(cfg));
}

}  // namespace cfisac

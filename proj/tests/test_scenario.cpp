#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cfisac/scenario.hpp"

using namespace cfisac;

namespace {

double block_energy(const arma::cx_vec& h, int slot, int n) {
  const arma::cx_vec b = h.subvec(slot * n, (slot + 1) * n - 1);
  return arma::dot(arma::conj(b), b).real();
}

ScenarioConfig tiny_scenario() {
  ScenarioConfig c = default_scenario();
  c.tx_positions = {{0.0, 0.0}};
  c.rx_positions = {{20.0, 60.0}};
  c.cu_positions = {{20.0, 40.0}};
  c.info_eve_positions = {{20.0, 100.0}};
  c.sense_eve_positions = {{40.0, 80.0}};
  return c;
}

}  // namespace

TEST_CASE("steering vector closed forms") {
  const arma::cx_vec a0 = steering_vector(0.0, 4);
  for (int m = 0; m < 4; ++m) {
    CHECK(a0(m).real() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(a0(m).imag() == doctest::Approx(0.0).epsilon(1e-15));
  }
  const arma::cx_vec a1 = steering_vector(M_PI / 2.0, 2);
  CHECK(std::abs(a1(0) - cx(1.0, 0.0)) < 1e-12);
  CHECK(std::abs(a1(1) - cx(-1.0, 0.0)) < 1e-12);
}

TEST_CASE("steering vector norm is the element count") {
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    const double angle = (rng.uniform() - 0.5) * 2.0 * M_PI;
    const int n = 1 + static_cast<int>(rng.uniform() * 12);
    const arma::cx_vec a = steering_vector(angle, n);
    CHECK(arma::dot(arma::conj(a), a).real() == doctest::Approx(n).epsilon(1e-12));
  }
}

TEST_CASE("selector matrix structure") {
  CHECK(arma::norm(selector_matrix(1, 1, 5) - arma::eye(5, 5), "fro") == 0.0);
  const int n = 3, mt = 4;
  for (int i = 1; i <= mt; ++i) {
    const arma::mat ai = selector_matrix(i, mt, n);
    CHECK(arma::norm(ai * ai.t() - arma::eye(n, n), "fro") == 0.0);
    for (int m = 1; m <= mt; ++m) {
      if (m == i) continue;
      CHECK(arma::norm(ai * selector_matrix(m, mt, n).t(), "fro") == 0.0);
    }
  }
  // extraction semantics
  arma::vec v = arma::regspace(1.0, 12.0);
  const arma::vec head = selector_matrix(1, 4, 3) * v;
  CHECK(arma::norm(head - v.subvec(0, 2), 2) == 0.0);
  CHECK_THROWS_AS(selector_matrix(0, 4, 3), std::out_of_range);
  CHECK_THROWS_AS(selector_matrix(5, 4, 3), std::out_of_range);
}

TEST_CASE("channel synthesis is deterministic per seed") {
  const ScenarioConfig cfg = default_scenario();
  const ChannelSet a = synthesize_channels(cfg);
  const ChannelSet b = synthesize_channels(cfg);
  for (int k = 0; k < cfg.n_cu(); ++k) {
    CHECK(arma::norm(a.h[k] - b.h[k], 2) == 0.0);
  }
  for (int q = 0; q < cfg.n_sense_eve(); ++q) {
    CHECK(arma::norm(a.u_eve[q] - b.u_eve[q], 2) == 0.0);
    CHECK(arma::norm(a.a_eve[q] - b.a_eve[q], 2) == 0.0);
  }
  const ChannelSet c = synthesize_channels(cfg, cfg.rng_seed + 1);
  CHECK(arma::norm(a.h[0] - c.h[0], 2) > 0.0);
}

TEST_CASE("rician limit collapses onto the line-of-sight response") {
  ScenarioConfig cfg = tiny_scenario();
  cfg.rician_factor_db = 1e6;
  const ChannelSet ch = synthesize_channels(cfg);
  const arma::cx_vec los =
      steering_vector(azimuth(cfg.tx_positions[0], cfg.cu_positions[0]), cfg.n_antennas);
  const arma::cx_vec h = ch.h[0];
  const double cosine =
      std::abs(arma::cdot(los, h)) / (arma::norm(los, 2) * arma::norm(h, 2));
  CHECK(cosine == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("doubling the CU distance scales mean block energy by 2^-exp") {
  ScenarioConfig near_cfg = tiny_scenario();
  near_cfg.cu_positions = {{30.0, 0.0}};
  ScenarioConfig far_cfg = near_cfg;
  far_cfg.cu_positions = {{60.0, 0.0}};
  double e_near = 0.0, e_far = 0.0;
  const int n_seeds = 10000;
  for (int s = 0; s < n_seeds; ++s) {
    e_near += block_energy(synthesize_channels(near_cfg, s).h[0], 0, near_cfg.n_antennas);
    e_far += block_energy(synthesize_channels(far_cfg, s).h[0], 0, far_cfg.n_antennas);
  }
  const double ratio = e_far / e_near;
  CHECK(ratio == doctest::Approx(std::pow(2.0, -3.0)).epsilon(0.02));
}

TEST_CASE("pathloss monotonicity in distance over seeds") {
  const std::vector<double> xs = {25.0, 40.0, 60.0, 90.0};
  std::vector<double> energy;
  for (double x : xs) {
    ScenarioConfig cfg = tiny_scenario();
    cfg.cu_positions = {{x, 0.0}};
    double acc = 0.0;
    for (int s = 0; s < 1000; ++s) {
      acc += block_energy(synthesize_channels(cfg, 1000 + s).h[0], 0, cfg.n_antennas);
    }
    energy.push_back(acc);
  }
  for (size_t i = 1; i < energy.size(); ++i) CHECK(energy[i] < energy[i - 1]);
}

TEST_CASE("geometry consistency of stored steering vectors") {
  const ScenarioConfig cfg = default_scenario();
  const ChannelSet ch = synthesize_channels(cfg);
  for (int i = 0; i < cfg.m_t(); ++i) {
    const double theta = azimuth(cfg.tx_positions[i], cfg.target_position);
    CHECK(theta == ch.theta[i]);
    CHECK(arma::norm(ch.a_tx[i] - steering_vector(theta, cfg.n_antennas), 2) == 0.0);
  }
  for (int j = 0; j < cfg.m_r(); ++j) {
    CHECK(arma::norm(ch.a_rx[j] - steering_vector(ch.phi[j], cfg.n_antennas), 2) == 0.0);
  }
}

TEST_CASE("channel set invariants") {
  const ScenarioConfig cfg = default_scenario();
  const ChannelSet ch = synthesize_channels(cfg);
  const int n = cfg.n_antennas;
  for (int i = 0; i < ch.m_t; ++i) {
    CHECK(arma::dot(arma::conj(ch.a_tx[i]), ch.a_tx[i]).real() ==
          doctest::Approx(n).epsilon(1e-12));
  }
  // equivalent steering vector: slot i equals (N eta_i a_t^H)^H
  for (int q = 0; q < cfg.n_sense_eve(); ++q) {
    for (int i = 0; i < ch.m_t; ++i) {
      const arma::cx_vec expect =
          static_cast<double>(n) * std::conj(ch.eta(i, q)) * ch.a_tx[i];
      const arma::cx_vec got = ch.a_eve[q].subvec(i * n, (i + 1) * n - 1);
      CHECK(arma::norm(got - expect, 2) == 0.0);
    }
    // equivalent clutter vector against the raw clutter matrices
    const arma::cx_vec ar = steering_vector(ch.omega[q], n);
    for (int i = 0; i < ch.m_t; ++i) {
      const arma::cx_vec expect = ch.clutter[i][q].t() * ar;
      CHECK(arma::norm(ch.u_eve[q].subvec(i * n, (i + 1) * n - 1) - expect, 2) == 0.0);
    }
  }
  CHECK(ch.alpha_var.min() > 0.0);
}

TEST_CASE("coincident nodes are rejected") {
  ScenarioConfig cfg = default_scenario();
  cfg.cu_positions[0] = cfg.target_position;
  CHECK_THROWS_AS(synthesize_channels(cfg), std::invalid_argument);
  ScenarioConfig cfg2 = default_scenario();
  cfg2.info_eve_positions[0] = cfg2.cu_positions[1];
  CHECK_THROWS_AS(synthesize_channels(cfg2), std::invalid_argument);
}

TEST_CASE("config validation catches bad ranges") {
  ScenarioConfig cfg = default_scenario();
  cfg.eavesdrop_prob_threshold = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = default_scenario();
  cfg.false_alarm_prob = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = default_scenario();
  cfg.tx_positions.clear();
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("scenario hash tracks content") {
  const ScenarioConfig a = default_scenario();
  ScenarioConfig b = a;
  CHECK(scenario_hash(a) == scenario_hash(b));
  b.power_budget_dbm += 1.0;
  CHECK(scenario_hash(a) != scenario_hash(b));
}

#pragma once
// Scenario ingestion and channel synthesis: node geometry, Rician fading
// channels toward CUs and information eavesdroppers, target steering
// vectors, and two-scatterer clutter toward sensing eavesdroppers.

#include <vector>

#include "cfisac/common.hpp"

namespace cfisac {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}
inline double azimuth(const Vec2& from, const Vec2& to) {
  return std::atan2(to.y - from.y, to.x - from.x);
}

struct ScenarioConfig {
  std::array<double, 2> field_size_m{100.0, 100.0};
  std::vector<Vec2> tx_positions;
  std::vector<Vec2> rx_positions;
  std::vector<Vec2> cu_positions;
  std::vector<Vec2> info_eve_positions;
  std::vector<Vec2> sense_eve_positions;
  Vec2 target_position{50.0, 50.0};
  int n_antennas = 4;
  double pathloss_ref_db = -40.0;
  double pathloss_exp = 3.0;
  double noise_power_dbm = -100.0;  // sigma^2 and sigma_s^2
  double rician_factor_db = 5.0;
  double rcs_variance = 0.01;
  double power_budget_dbm = 40.0;
  double sinr_threshold_db = 10.0;       // Gamma
  double info_snr_threshold_db = 5.0;    // Omega
  double eavesdrop_prob_threshold = 0.4; // Lambda
  double false_alarm_prob = 0.05;
  long long symbol_count = 3000000;
  std::uint64_t rng_seed = 1;

  int m_t() const { return static_cast<int>(tx_positions.size()); }
  int m_r() const { return static_cast<int>(rx_positions.size()); }
  int n_cu() const { return static_cast<int>(cu_positions.size()); }
  int n_info_eve() const { return static_cast<int>(info_eve_positions.size()); }
  int n_sense_eve() const { return static_cast<int>(sense_eve_positions.size()); }

  double noise_w() const { return dbm_to_watt(noise_power_dbm); }
  double power_w() const { return dbm_to_watt(power_budget_dbm); }
  double sinr_lin() const { return db_to_lin(sinr_threshold_db); }
  double info_snr_lin() const { return db_to_lin(info_snr_threshold_db); }
  double rician_lin() const { return db_to_lin(rician_factor_db); }
  double pathloss_ref_lin() const { return db_to_lin(pathloss_ref_db); }
  double pathloss(double dist_m) const {
    return pathloss_ref_lin() * std::pow(dist_m, -pathloss_exp);
  }

  // Throws std::invalid_argument on any violated invariant, including
  // coincident nodes (zero distance makes the pathloss model blow up).
  void validate() const;
};

// The \S VI topology and parameter set, with artifact defaults for the
// values the reference setup leaves open (N, P, T).
ScenarioConfig default_scenario();

// Half-wavelength ULA response: entry m = exp(j*pi*m*sin(angle)), m=0..n-1.
arma::cx_vec steering_vector(double angle_rad, int n);

// Binary block selector: identity in (1-based) slot i of an n x (n*m_t)
// horizontal layout. Throws std::out_of_range for i outside 1..m_t.
arma::mat selector_matrix(int i, int m_t, int n);

struct ChannelSet {
  int n = 0;
  int m_t = 0;
  int m_r = 0;
  std::vector<arma::cx_vec> h;      // per CU, length N*M_t, stacked over tx
  std::vector<arma::cx_vec> g;      // per information eavesdropper
  std::vector<double> theta;        // AoD tx i -> target
  std::vector<double> phi;          // AoA target -> sensing receiver j
  std::vector<double> omega;        // AoD target -> sensing eavesdropper q
  std::vector<arma::cx_vec> a_tx;   // steering_vector(theta[i], N)
  std::vector<arma::cx_vec> a_rx;   // steering_vector(phi[j], N)
  std::vector<arma::cx_vec> a_eve;  // equivalent target steering, length N*M_t
  std::vector<arma::cx_vec> u_eve;  // equivalent clutter vector, length N*M_t
  // clutter[i][q] maps x_i to the signal received at sensing eavesdropper q.
  std::vector<std::vector<arma::cx_mat>> clutter;
  arma::mat alpha_var;              // M_t x M_r reflection-coefficient variance
  arma::cx_mat eta;                 // M_t x Q target-path coefficients
  std::array<Vec2, 2> scatterers{};

  // Target steering of tx i stacked into the full N*M_t space (slot i).
  arma::cx_vec stacked_tx_steering(int i) const;
};

ChannelSet synthesize_channels(const ScenarioConfig& cfg);
ChannelSet synthesize_channels(const ScenarioConfig& cfg, std::uint64_t seed);

// Canonical text form; independent of how the config was produced.
std::string canonical_scenario_text(const ScenarioConfig& cfg);
std::uint64_t scenario_hash(const ScenarioConfig& cfg);

}  // namespace cfisac

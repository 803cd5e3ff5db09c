#pragma once
// The three secure joint transmit beamforming designs plus the sensing-only
// upper bound: problem construction over the conic layer, globally optimal
// solves, rank-one beamformer recovery, and a first-principles audit of
// every constraint at the returned solution.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfisac/conic.hpp"
#include "cfisac/probability.hpp"
#include "cfisac/scenario.hpp"

namespace cfisac {

enum class Design { CellFreeDetection, SensingSnrMax, Coordinated, SensingOnly };

const char* to_string(Design d);
std::optional<Design> design_from_string(const std::string& s);

struct Association {
  std::vector<int> cu_to_tx;  // 0-based transmitter index per CU
};

// Each CU is served by its geometrically nearest transmitter; ties break to
// the lower index.
Association associate_nearest(const ScenarioConfig& cfg);

struct DesignOptions {
  // SDR-3.1 lists the SINR rows even though the coordinated problem
  // statement omits them; default follows SDR-3.1.
  bool coordinated_include_sinr = true;
  // Restrict the coordinated sensing covariance to per-transmitter diagonal
  // blocks (off by default: S stays a full cross-transmitter variable).
  bool coordinated_blockdiag_s = false;
  conic::SolveOptions solver;
};

struct BuiltProblem {
  conic::SdpProblem sdp;
  std::vector<conic::VarRef> w_vars;  // per CU; dim N*M_t, or N when coordinated
  std::vector<conic::VarRef> s_vars;  // one full block, or M_t diagonal blocks
  Design design = Design::CellFreeDetection;
  Association assoc;
  double power_w = 0.0;  // physical matrices are power_w * solver matrices
  bool coordinated = false;
  bool blockdiag_s = false;
};

BuiltProblem build_p1(const ScenarioConfig& cfg, const ChannelSet& ch,
                      const DesignOptions& opt = {});
BuiltProblem build_p2(const ScenarioConfig& cfg, const ChannelSet& ch,
                      const DesignOptions& opt = {});
BuiltProblem build_p3(const ScenarioConfig& cfg, const ChannelSet& ch,
                      const Association& assoc, const DesignOptions& opt = {});
BuiltProblem build_sensing_only(const ScenarioConfig& cfg, const ChannelSet& ch,
                                const DesignOptions& opt = {});

struct BeamformingSolution {
  Design design = Design::CellFreeDetection;
  std::vector<arma::cx_mat> W;  // per CU, N*M_t, exactly rank one
  arma::cx_mat S;               // N*M_t
  arma::cx_mat R;               // sum_k W_k + S
  std::vector<arma::cx_vec> w;  // rank-one factors
  double objective_value = 0.0;       // design-native objective
  double detection_objective = 0.0;   // mu^T (Psi^H Psi)^{-1} mu at T = 1
  double detection_probability = 0.0; // reported P_D at the scenario's T
  SensingStatistics stats;
  std::vector<double> sinr;                 // per CU
  arma::mat eave_snr;                       // L x K
  std::vector<EavesdropStatistics> eave;    // per sensing eavesdropper
  std::vector<double> tx_power;             // per transmitter
  conic::SolverResult::Status solve_status =
      conic::SolverResult::Status::NumericalFailure;
  int iterations = 0;
  double duality_gap = 0.0;
  double wall_seconds = 0.0;
  std::uint64_t scenario_hash = 0;
};

struct DesignInfeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SolveFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Rank-one recovery hit a degenerate h^H W h; solver-accuracy fault.
struct TightnessError : SolveFailure {
  using SolveFailure::SolveFailure;
};

struct RankOneExtraction {
  std::vector<arma::cx_mat> W;
  std::vector<arma::cx_vec> w;
  arma::cx_mat S;
};

// W_k -> W* h_k h_k^H W* / (h_k^H W* h_k); S -> R* - sum W_k. Preserves R
// exactly, keeps every SINR value, and never increases any information
// leakage quadratic form. Throws TightnessError on degenerate h^H W h.
RankOneExtraction extract_rank1(const std::vector<arma::cx_mat>& w_star,
                                const arma::cx_mat& s_star,
                                const std::vector<arma::cx_vec>& h);

struct AuditItem {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool is_upper_bound = true;  // value <= bound expected
  double rel_margin = 0.0;     // signed; negative means violated
  bool satisfied = true;
};

struct AuditReport {
  std::vector<AuditItem> items;
  bool pass = true;
  double worst_rel_violation = 0.0;
  double detection_probability = 0.0;
  double detection_objective = 0.0;
};

// Recomputes SINR, leakage SNR, eavesdropping probability, per-transmitter
// power, and the detection statistics directly from the solution matrices
// and channel vectors; shares no code with the SDP construction.
AuditReport audit_solution(const BeamformingSolution& sol,
                           const ScenarioConfig& cfg, const ChannelSet& ch,
                           double rel_slack = 1e-6);

// Build + solve + rank-one recovery + statistics for one design. Throws
// DesignInfeasible (certified) or SolveFailure.
BeamformingSolution solve_design(const ScenarioConfig& cfg, const ChannelSet& ch,
                                 Design design, const DesignOptions& opt = {});

}  // namespace cfisac

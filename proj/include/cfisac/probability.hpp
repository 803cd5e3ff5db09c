#pragma once
// Closed-form detection and eavesdropping statistics: the GLRT covariance
// reduction, the non-central chi-square detection probability (first-order
// Marcum Q), the energy-detector eavesdropping probability, and the ratio
// threshold that turns the probability bound into a linear constraint.

#include <utility>
#include <vector>

#include "cfisac/common.hpp"

namespace cfisac {

struct SensingStatistics {
  arma::cx_mat r_phi;
  double lambda_nc = 0.0;
  double threshold_xi = 0.0;
  double p_fa = 0.0;
  double p_d = 0.0;
  double objective = 0.0;  // mu^T (Psi^H Psi)^{-1} mu
};

struct EavesdropStatistics {
  double zeta = 0.0;   // clutter-plus-noise power
  double beta = 0.0;   // target-plus-clutter-plus-noise power
  double p_eave = 0.0;
  double gamma_d = 0.0;
};

// First-order Marcum Q function Q_1(a, b), the right tail of the scaled
// non-central chi-square with two degrees of freedom. Poisson-mixture
// series summed bidirectionally from the dominant term.
double marcum_q1(double a, double b);

// GLRT threshold Xi = -2 ln(p_fa) under the two-degree-of-freedom
// convention (the doubled statistic is chi^2_2 under H0).
double glrt_threshold(double p_fa);

// P_D = Q_1(sqrt(2 lambda), sqrt(Xi)); monotone increasing in lambda.
double detection_probability(double lambda_nc, double p_fa);

// Per-receiver covariance of the reflected-signal correlations:
// entry (m,n) = T*N*atilde_n^H R atilde_m with atilde_i the target steering
// of transmitter i stacked into its slot. Affine in R, Hermitian by
// construction.
arma::cx_mat build_r_phi(const arma::cx_mat& R,
                         const std::vector<arma::cx_vec>& a_tx,
                         long long t_symbols, int n);

// mu^T (Psi^H Psi)^{-1} mu = M_r * 1^T r_phi^{-1} 1. Throws
// std::domain_error when r_phi is singular (no silent pseudo-inverse).
double glrt_objective(const arma::cx_mat& r_phi, int m_r);

// lambda = |mu^T alpha|^2 / (sigma_s^2 * mu^T (Psi^H Psi)^{-1} mu).
double noncentrality(const arma::cx_mat& r_phi, const arma::cx_vec& alpha,
                     double sigma_s2, int m_r);

// zeta = u^H R u + N sigma_s^2, beta = (a+u)^H R (a+u) + N sigma_s^2.
std::pair<double, double> zeta_beta(const arma::cx_mat& R,
                                    const arma::cx_vec& a_q,
                                    const arma::cx_vec& u_q, double sigma_s2,
                                    int n);

// f(x) = x^{-1/(x-1)} extended continuously with f(1) = e^{-1};
// monotone increasing from 0 to 1 on (0, inf).
double eavesdrop_ratio_fn(double x);

// Maximum per-symbol detection probability of the optimal-threshold energy
// detector: f(beta/zeta).
double eavesdrop_probability(double zeta, double beta);

// Unique x > 0 with f(x) = lambda, bisected to |f(x) - lambda| <= 1e-12.
double gamma_d_root(double lambda);

}  // namespace cfisac

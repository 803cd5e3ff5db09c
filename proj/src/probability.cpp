#include "cfisac/probability.hpp"

#include <cmath>
#include <stdexcept>

namespace cfisac {

namespace {

// Poisson(y) pmf at k, computed in log space to survive large arguments.
double pois_pmf(double y, long long k) {
  if (y <= 0.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(-y + static_cast<double>(k) * std::log(y) -
                  std::lgamma(static_cast<double>(k) + 1.0));
}

// Poisson(y) CDF at k.
double pois_cdf(double y, long long k) {
  if (k < 0) return 0.0;
  if (y <= 0.0) return 1.0;
  // Sum from the mode outward; terms away from the mode vanish.
  const long long mode = static_cast<long long>(y);
  const long long lo = std::max(0ll, std::min(k, mode) - 8);
  double t = pois_pmf(y, lo);
  double f = t;
  for (long long m = lo + 1; m <= k; ++m) {
    t *= y / static_cast<double>(m);
    f += t;
    if (m > mode && t < 1e-18 * f) break;
  }
  // Add the left tail below lo.
  double tb = pois_pmf(y, lo);
  for (long long m = lo; m > 0; --m) {
    tb *= static_cast<double>(m) / y;
    f += tb;
    if (tb < 1e-18 * f) break;
  }
  return std::min(f, 1.0);
}

}  // namespace

double marcum_q1(double a, double b) {
  if (!(a >= 0.0) || !(b >= 0.0)) {
    throw std::domain_error("marcum_q1: arguments must be nonnegative");
  }
  const double p = 0.5 * a * a;  // Poisson weight parameter
  const double y = 0.5 * b * b;  // chi-square tail parameter
  if (b == 0.0) return 1.0;
  if (p == 0.0) return std::exp(-y);
  // Far in either tail the double result saturates; short-circuit before the
  // series loses all its mass to rounding.
  if (p - y > 500.0 && a - b > 30.0) return 1.0;
  if (y - p > 500.0 && b - a > 30.0) return 0.0;

  const long long k0 = static_cast<long long>(p);
  const double w0 = pois_pmf(p, k0);
  const double f0 = pois_cdf(y, k0);

  double q = 0.0;   // sum of w_k * F_k
  double c = 0.0;   // sum of w_k * (1 - F_k)
  double wsum = 0.0;

  // Forward from the dominant Poisson term.
  {
    double w = w0;
    double f = f0;
    double pmf_y = pois_pmf(y, k0);
    long long k = k0;
    while (true) {
      q += w * f;
      c += w * (1.0 - f);
      wsum += w;
      if (1.0 - wsum < 1e-18 && k > k0 + 2) break;
      if (k - k0 > 8 && w < 1e-19 * (q + c)) break;
      ++k;
      w *= p / static_cast<double>(k);
      pmf_y *= y / static_cast<double>(k);
      f += pmf_y;
      if (f > 1.0) f = 1.0;
      if (k > k0 + 200000) break;
    }
  }
  // Backward from k0 - 1.
  {
    double w = w0;
    double f = f0;
    double pmf_y = pois_pmf(y, k0);
    for (long long k = k0; k > 0; --k) {
      w *= static_cast<double>(k) / p;
      f -= pmf_y;
      pmf_y *= static_cast<double>(k) / y;
      if (f < 0.0) f = 0.0;
      q += w * f;
      c += w * (1.0 - f);
      wsum += w;
      if (w < 1e-19 * (q + c) && k0 - k > 8) break;
    }
  }
  // q + c equals the captured Poisson mass; report from the smaller side for
  // accuracy near 0 and 1.
  if (q <= c) return std::min(std::max(q, 0.0), 1.0);
  return std::min(std::max(1.0 - c, 0.0), 1.0);
}

double glrt_threshold(double p_fa) {
  if (!(p_fa > 0.0 && p_fa < 1.0)) {
    throw std::domain_error("glrt_threshold: p_fa must lie in (0,1)");
  }
  return -2.0 * std::log(p_fa);
}

double detection_probability(double lambda_nc, double p_fa) {
  if (!(lambda_nc >= 0.0) || !std::isfinite(lambda_nc)) {
    throw std::domain_error("detection_probability: lambda must be finite and >= 0");
  }
  const double xi = glrt_threshold(p_fa);
  return marcum_q1(std::sqrt(2.0 * lambda_nc), std::sqrt(xi));
}

arma::cx_mat build_r_phi(const arma::cx_mat& R,
                         const std::vector<arma::cx_vec>& a_tx,
                         long long t_symbols, int n) {
  const int mt = static_cast<int>(a_tx.size());
  if (R.n_rows != R.n_cols || static_cast<int>(R.n_rows) != n * mt) {
    throw std::invalid_argument("build_r_phi: R must be (N*M_t) square");
  }
  for (const auto& a : a_tx) {
    if (static_cast<int>(a.n_elem) != n) {
      throw std::invalid_argument("build_r_phi: steering vector length mismatch");
    }
  }
  const double scale = static_cast<double>(t_symbols) * static_cast<double>(n);
  arma::cx_mat r_phi(mt, mt);
  for (int m = 0; m < mt; ++m) {
    for (int q = 0; q < mt; ++q) {
      // atilde_q^H R atilde_m restricted to the occupied slots.
      const arma::cx_mat blk = R.submat(q * n, m * n, (q + 1) * n - 1, (m + 1) * n - 1);
      r_phi(m, q) = scale * arma::cdot(a_tx[q], blk * a_tx[m]);
    }
  }
  return hermitize(r_phi);
}

double glrt_objective(const arma::cx_mat& r_phi, int m_r) {
  if (r_phi.n_rows != r_phi.n_cols) {
    throw std::invalid_argument("glrt_objective: r_phi must be square");
  }
  if (m_r < 1) throw std::invalid_argument("glrt_objective: m_r must be >= 1");
  const arma::cx_mat h = hermitize(r_phi);
  const double tr = arma::trace(h).real();
  if (min_eig_herm(h) <= 1e-10 * std::max(tr, 0.0)) {
    throw std::domain_error("glrt_objective: r_phi is singular");
  }
  const arma::cx_vec ones(h.n_rows, arma::fill::ones);
  const arma::cx_vec x = arma::solve(h, ones, arma::solve_opts::likely_sympd);
  return static_cast<double>(m_r) * arma::cdot(ones, x).real();
}

double noncentrality(const arma::cx_mat& r_phi, const arma::cx_vec& alpha,
                     double sigma_s2, int m_r) {
  if (static_cast<int>(alpha.n_elem) != static_cast<int>(r_phi.n_rows) * m_r) {
    throw std::invalid_argument("noncentrality: alpha must have length M_t*M_r");
  }
  if (!(sigma_s2 > 0.0)) {
    throw std::domain_error("noncentrality: sigma_s2 must be positive");
  }
  const cx s = arma::accu(alpha);
  return std::norm(s) / (sigma_s2 * glrt_objective(r_phi, m_r));
}

std::pair<double, double> zeta_beta(const arma::cx_mat& R,
                                    const arma::cx_vec& a_q,
                                    const arma::cx_vec& u_q, double sigma_s2,
                                    int n) {
  if (R.n_rows != R.n_cols || R.n_rows != a_q.n_elem || R.n_rows != u_q.n_elem) {
    throw std::invalid_argument("zeta_beta: dimension mismatch");
  }
  const double floor_w = static_cast<double>(n) * sigma_s2;
  const cx zq = arma::cdot(u_q, R * u_q);
  const arma::cx_vec au = a_q + u_q;
  const cx bq = arma::cdot(au, R * au);
  const double tol = 1e-10 * (std::abs(zq) + std::abs(bq) + floor_w);
  if (std::abs(zq.imag()) > tol || std::abs(bq.imag()) > tol) {
    throw std::invalid_argument("zeta_beta: quadratic forms are not real (R not Hermitian?)");
  }
  return {zq.real() + floor_w, bq.real() + floor_w};
}

double eavesdrop_ratio_fn(double x) {
  if (!(x > 0.0)) throw std::domain_error("eavesdrop_ratio_fn: x must be positive");
  const double r = x - 1.0;
  // f(x) = exp(-ln(x)/(x-1)); the exponent tends to -1 as x -> 1.
  double e;
  if (std::abs(r) < 1e-6) {
    e = -(1.0 - r / 2.0 + r * r / 3.0);
  } else {
    e = -std::log(x) / r;
  }
  return std::exp(e);
}

double eavesdrop_probability(double zeta, double beta) {
  if (!(zeta > 0.0) || !(beta > 0.0)) {
    throw std::domain_error("eavesdrop_probability: powers must be positive");
  }
  return eavesdrop_ratio_fn(beta / zeta);
}

double gamma_d_root(double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw std::domain_error("gamma_d_root: lambda must lie in (0,1)");
  }
  const double f1 = std::exp(-1.0);
  double lo, hi;
  if (lambda < f1) {
    lo = 1e-12;
    hi = 1.0;
  } else if (lambda > f1) {
    lo = 1.0;
    hi = 2.0;
    while (eavesdrop_ratio_fn(hi) < lambda) {
      hi *= 2.0;
      if (hi > 1e12) break;
    }
  } else {
    return 1.0;
  }
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    x = 0.5 * (lo + hi);
    const double fx = eavesdrop_ratio_fn(x);
    if (std::abs(fx - lambda) <= 1e-12) return x;
    if (fx < lambda) {
      lo = x;
    } else {
      hi = x;
    }
    if (hi - lo <= 1e-15 * std::max(1.0, x)) break;
  }
  return x;
}

}  // namespace cfisac

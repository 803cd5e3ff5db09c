#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/distributions/non_central_chi_squared.hpp>

#include "cfisac/probability.hpp"
#include "cfisac/scenario.hpp"

using namespace cfisac;

namespace {

arma::cx_mat random_psd(Rng& rng, int dim, double ridge = 0.0) {
  arma::cx_mat a(dim, dim);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) a(r, c) = rng.cgauss();
  }
  return arma::cx_mat(a * a.t() + ridge * arma::eye<arma::cx_mat>(dim, dim));
}

// Independent bisection on f over [lo, hi] in test code.
double bisect_ratio(double lambda, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (eavesdrop_ratio_fn(mid) < lambda) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("r_phi single transmitter reduction") {
  Rng rng(3);
  const int n = 4;
  const arma::cx_mat r = random_psd(rng, n);
  const std::vector<arma::cx_vec> a = {steering_vector(0.37, n)};
  const arma::cx_mat rp = build_r_phi(r, a, 100, n);
  CHECK(rp.n_rows == 1);
  const cx expect = 100.0 * static_cast<double>(n) * arma::cdot(a[0], r * a[0]);
  CHECK(std::abs(rp(0, 0) - expect) <= 1e-12 * std::abs(expect));
}

TEST_CASE("r_phi of the identity covariance is T*N*N on the diagonal") {
  const int n = 4, mt = 3;
  std::vector<arma::cx_vec> a;
  for (int i = 0; i < mt; ++i) a.push_back(steering_vector(0.2 * i - 0.4, n));
  const arma::cx_mat rp =
      build_r_phi(arma::eye<arma::cx_mat>(n * mt, n * mt), a, 7, n);
  for (int i = 0; i < mt; ++i) {
    CHECK(rp(i, i).real() == doctest::Approx(7.0 * n * n).epsilon(1e-12));
  }
}

TEST_CASE("r_phi is affine in the covariance") {
  Rng rng(5);
  const int n = 3, mt = 2;
  std::vector<arma::cx_vec> a;
  for (int i = 0; i < mt; ++i) a.push_back(steering_vector(0.3 * i, n));
  const arma::cx_mat r1 = random_psd(rng, n * mt);
  const arma::cx_mat r2 = random_psd(rng, n * mt);
  const arma::cx_mat lhs = build_r_phi(r1 + r2, a, 5, n);
  const arma::cx_mat rhs = build_r_phi(r1, a, 5, n) + build_r_phi(r2, a, 5, n);
  CHECK(arma::norm(lhs - rhs, "fro") <= 1e-12 * arma::norm(lhs, "fro"));
  const arma::cx_mat scaled = build_r_phi(arma::cx_mat(2.5 * r1), a, 5, n);
  CHECK(arma::norm(scaled - 2.5 * build_r_phi(r1, a, 5, n), "fro") <=
        1e-12 * arma::norm(scaled, "fro"));
}

TEST_CASE("r_phi matches the sample covariance of simulated symbols") {
  // Draw x ~ CN(0, R) directly and accumulate the reflected-signal
  // correlations; this is the independent oracle for the closed form.
  Rng rng(11);
  const int n = 4, mt = 2;
  const arma::cx_mat r = random_psd(rng, n * mt, 0.5);
  std::vector<arma::cx_vec> a;
  for (int i = 0; i < mt; ++i) a.push_back(steering_vector(0.5 * i - 0.2, n));
  arma::cx_mat chol_l;
  REQUIRE(arma::chol(chol_l, r, "lower"));
  const long long t_draws = 1000000;
  arma::cx_mat acc(mt, mt, arma::fill::zeros);
  arma::cx_vec z(n * mt), s(mt);
  for (long long t = 0; t < t_draws; ++t) {
    for (int i = 0; i < n * mt; ++i) z(i) = rng.cgauss();
    const arma::cx_vec x = chol_l * z;
    for (int i = 0; i < mt; ++i) {
      s(i) = arma::cdot(a[i], x.subvec(i * n, (i + 1) * n - 1));
    }
    acc += arma::conj(s) * s.st();
  }
  acc *= static_cast<double>(n);
  const arma::cx_mat expect = build_r_phi(r, a, t_draws, n);
  CHECK(arma::norm(acc - expect, "fro") <= 0.01 * arma::norm(expect, "fro"));
}

TEST_CASE("glrt objective closed forms") {
  const int mt = 3, mr = 2;
  const double c = 2.5;
  const arma::cx_mat r = c * arma::eye<arma::cx_mat>(mt, mt);
  CHECK(glrt_objective(r, mr) == doctest::Approx(mr * mt / c).epsilon(1e-12));
  arma::cx_mat one(1, 1);
  one(0, 0) = 4.0;
  CHECK(glrt_objective(one, 1) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("glrt objective equals the explicit block-diagonal construction") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    Rng local = rng.fork(trial);
    const int mt = 2 + static_cast<int>(local.uniform() * 3);
    const int mr = 1 + static_cast<int>(local.uniform() * 3);
    const arma::cx_mat rp = random_psd(local, mt, 0.3);
    arma::cx_mat big(mt * mr, mt * mr, arma::fill::zeros);
    for (int j = 0; j < mr; ++j) {
      big.submat(j * mt, j * mt, (j + 1) * mt - 1, (j + 1) * mt - 1) = rp;
    }
    const arma::cx_vec mu(mt * mr, arma::fill::ones);
    const double direct = arma::cdot(mu, arma::cx_vec(arma::inv(big) * mu)).real();
    CHECK(glrt_objective(rp, mr) == doctest::Approx(direct).epsilon(1e-9));
  }
}

TEST_CASE("glrt objective rejects singular input") {
  arma::cx_mat sing(2, 2, arma::fill::ones);
  CHECK_THROWS_AS(glrt_objective(sing, 1), std::domain_error);
}

TEST_CASE("detection probability closed-form anchors") {
  CHECK(glrt_threshold(0.05) == doctest::Approx(5.9914645471079817).epsilon(1e-12));
  CHECK(detection_probability(0.0, 0.05) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(detection_probability(0.0, 0.31) == doctest::Approx(0.31).epsilon(1e-12));
}

TEST_CASE("marcum q matches the scaled non-central chi-square tail") {
  using boost_ncx2 = boost::math::non_central_chi_squared_distribution<double>;
  for (double a : {0.1, 0.7, 1.3, 2.5, 4.0, 8.0, 15.0}) {
    for (double b : {0.2, 1.0, 2.4474, 5.0, 9.0}) {
      const double ours = marcum_q1(a, b);
      const double ref = boost::math::cdf(boost::math::complement(
          boost_ncx2(2.0, a * a), b * b));
      CHECK(std::abs(ours - ref) <= 1e-10);
    }
  }
}

TEST_CASE("marcum identity at zero first argument") {
  for (double b = 0.0; b <= 10.0; b += 0.25) {
    CHECK(std::abs(marcum_q1(0.0, b) - std::exp(-0.5 * b * b)) <= 1e-12);
  }
}

TEST_CASE("detection probability strictly increases in the noncentrality") {
  double prev = -1.0;
  for (double lam = 0.0; lam <= 50.0; lam += 0.5) {
    const double p = detection_probability(lam, 0.05);
    CHECK(p > prev);
    prev = p;
  }
  CHECK(prev <= 1.0);
}

TEST_CASE("detection probability matches simulated non-central draws") {
  const double lambda = 10.0, p_fa = 0.05;
  const double xi = glrt_threshold(p_fa);
  Rng rng(23);
  const long long n = 1000000;
  long long rejects = 0;
  const double mean = std::sqrt(2.0 * lambda);
  for (long long i = 0; i < n; ++i) {
    const double g1 = rng.gauss() + mean;
    const double g2 = rng.gauss();
    if (g1 * g1 + g2 * g2 > xi) ++rejects;
  }
  const double empirical = static_cast<double>(rejects) / n;
  CHECK(std::abs(empirical - detection_probability(lambda, p_fa)) <= 0.005);
}

TEST_CASE("noncentrality scaling and consistency") {
  Rng rng(31);
  const int mt = 2, mr = 2;
  const arma::cx_mat rp = random_psd(rng, mt, 0.2);
  arma::cx_vec alpha(mt * mr);
  for (auto& v : alpha) v = rng.cgauss();
  const double sigma = 0.37;
  CHECK(noncentrality(rp, arma::cx_vec(mt * mr, arma::fill::zeros), sigma, mr) == 0.0);
  const double base = noncentrality(rp, alpha, sigma, mr);
  const cx scale(1.7, -0.4);
  CHECK(noncentrality(rp, arma::cx_vec(scale * alpha), sigma, mr) ==
        doctest::Approx(std::norm(scale) * base).epsilon(1e-12));
  const double manual =
      std::norm(arma::accu(alpha)) / (sigma * glrt_objective(rp, mr));
  CHECK(base == doctest::Approx(manual).epsilon(1e-12));
}

TEST_CASE("zeta beta closed forms") {
  Rng rng(41);
  const int dim = 6, n = 3;
  const double sigma = 0.8;
  const arma::cx_mat r = random_psd(rng, dim);
  arma::cx_vec a(dim), u(dim);
  for (int i = 0; i < dim; ++i) {
    a(i) = rng.cgauss();
    u(i) = rng.cgauss();
  }
  SUBCASE("zero covariance") {
    const auto [z, b] = zeta_beta(arma::cx_mat(dim, dim, arma::fill::zeros), a, u, sigma, n);
    CHECK(z == doctest::Approx(n * sigma).epsilon(1e-14));
    CHECK(b == doctest::Approx(n * sigma).epsilon(1e-14));
  }
  SUBCASE("zero clutter") {
    const auto [z, b] = zeta_beta(r, a, arma::cx_vec(dim, arma::fill::zeros), sigma, n);
    CHECK(z == doctest::Approx(n * sigma).epsilon(1e-14));
    CHECK(b > z);
  }
  SUBCASE("cancellation") {
    const auto [z, b] = zeta_beta(r, arma::cx_vec(-u), u, sigma, n);
    CHECK(b == doctest::Approx(n * sigma).epsilon(1e-12));
    CHECK(b <= z);
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(zeta_beta(r, a.subvec(0, 3), u, sigma, n), std::invalid_argument);
  }
}

TEST_CASE("eavesdropping probability values") {
  CHECK(eavesdrop_probability(1.0, 2.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(eavesdrop_probability(3.0, 3.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(eavesdrop_probability(1.0, 4.0) ==
        doctest::Approx(std::pow(4.0, -1.0 / 3.0)).epsilon(1e-12));
  CHECK_THROWS_AS(eavesdrop_probability(0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(eavesdrop_probability(1.0, -2.0), std::domain_error);
}

TEST_CASE("ratio function is continuous and monotone through one") {
  double prev = 0.0;
  for (double x = 0.05; x <= 6.0; x += 0.05) {
    const double f = eavesdrop_ratio_fn(x);
    CHECK(f > prev);
    prev = f;
  }
  CHECK(std::abs(eavesdrop_ratio_fn(1.0 + 1e-9) - std::exp(-1.0)) < 1e-8);
  CHECK(std::abs(eavesdrop_ratio_fn(1.0 - 1e-9) - std::exp(-1.0)) < 1e-8);
}

TEST_CASE("gamma_d root anchors and oracle") {
  CHECK(gamma_d_root(0.5) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(gamma_d_root(std::exp(-1.0)) == doctest::Approx(1.0).epsilon(1e-12));
  const double oracle = bisect_ratio(0.4, 1.0, 10.0);
  CHECK(gamma_d_root(0.4) == doctest::Approx(oracle).epsilon(1e-9));
  CHECK(gamma_d_root(0.4) == doctest::Approx(1.188).epsilon(1e-3));
  for (double x : {0.2, 0.9, 1.5, 5.0}) {
    CHECK(gamma_d_root(eavesdrop_ratio_fn(x)) == doctest::Approx(x).epsilon(1e-9));
  }
  CHECK(gamma_d_root(0.2) < 1.0);
  CHECK(gamma_d_root(0.5) > 1.0);
  CHECK_THROWS_AS(gamma_d_root(0.0), std::domain_error);
  CHECK_THROWS_AS(gamma_d_root(1.0), std::domain_error);
}

TEST_CASE("threshold equivalence between probability and ratio domains") {
  Rng rng(53);
  for (double lambda : {0.15, 0.3, std::exp(-1.0), 0.4, 0.7}) {
    const double gd = gamma_d_root(lambda);
    for (int t = 0; t < 200; ++t) {
      const double zeta = 0.1 + rng.uniform() * 5.0;
      const double ratio = 0.05 + rng.uniform() * 8.0;
      const double beta = ratio * zeta;
      const bool prob_ok = eavesdrop_probability(zeta, beta) <= lambda + 1e-12;
      const bool ratio_ok = beta / zeta <= gd * (1.0 + 1e-9);
      CHECK(prob_ok == ratio_ok);
    }
  }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "cfisac/conic.hpp"
#include "cfisac/validation.hpp"

using namespace cfisac;
using conic::SdpProblem;
using conic::SolverResult;
using Status = conic::SolverResult::Status;

namespace {

arma::cx_mat random_pd(Rng& rng, int dim, double ridge) {
  arma::cx_mat a(dim, dim);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) a(r, c) = rng.cgauss();
  }
  return arma::cx_mat(a * a.t() + ridge * arma::eye<arma::cx_mat>(dim, dim));
}

}  // namespace

TEST_CASE("minimum eigenvalue program") {
  SdpProblem p;
  const auto x = p.add_psd_var(2);
  arma::cx_mat c(2, 2, arma::fill::zeros);
  c(0, 0) = 1.0;
  c(1, 1) = 2.0;
  p.set_objective(conic::trace_term(x, c));
  p.add_eq(conic::trace_term(x, arma::eye<arma::cx_mat>(2, 2)), 1.0);
  const SolverResult r = conic::solve(p);
  REQUIRE(r.status == Status::Optimal);
  CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(std::abs(r.primal[x.id](0, 0).real() - 1.0) < 1e-6);
  CHECK(std::abs(r.primal[x.id](1, 1).real()) < 1e-6);
  CHECK(r.duality_gap <= 1e-8);
  CHECK(r.max_violation <= 1e-8);
}

TEST_CASE("negative trace equality is certified infeasible") {
  SdpProblem p;
  const auto x = p.add_psd_var(3);
  p.set_objective(conic::trace_term(x, arma::eye<arma::cx_mat>(3, 3)));
  p.add_eq(conic::trace_term(x, arma::eye<arma::cx_mat>(3, 3)), -1.0);
  const SolverResult r = conic::solve(p);
  REQUIRE(r.status == Status::Infeasible);
  REQUIRE(r.certificate_y.n_elem == 1);
  // Farkas direction: b^T y = 1 with -A^T y PSD.
  CHECK(-1.0 * r.certificate_y(0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.certificate_y(0) < 0.0);
}

TEST_CASE("unbounded objective is certified") {
  SdpProblem p;
  const auto x = p.add_psd_var(2);
  arma::cx_mat c(2, 2, arma::fill::zeros);
  c(0, 0) = -1.0;
  p.set_objective(conic::trace_term(x, c));
  // Only the (1,1) entry is pinned; the (0,0) entry can grow without bound.
  arma::cx_mat e11(2, 2, arma::fill::zeros);
  e11(1, 1) = 1.0;
  p.add_eq(conic::trace_term(x, e11), 1.0);
  const SolverResult r = conic::solve(p);
  REQUIRE(r.status == Status::Unbounded);
  REQUIRE(r.certificate_x.size() == 1);
  CHECK(min_eig_herm(r.certificate_x[0]) >= -1e-7);
}

TEST_CASE("hermitian data is handled natively") {
  // min tr(C X) over the unit-trace PSD cone with complex C: the optimum is
  // the smallest eigenvalue of C.
  Rng rng(5);
  const arma::cx_mat c = random_pd(rng, 3, 0.0);
  SdpProblem p;
  const auto x = p.add_psd_var(3);
  p.set_objective(conic::trace_term(x, c));
  p.add_eq(conic::trace_term(x, arma::eye<arma::cx_mat>(3, 3)), 1.0);
  const SolverResult r = conic::solve(p);
  REQUIRE(r.status == Status::Optimal);
  arma::vec ev;
  arma::eig_sym(ev, c);
  CHECK(r.objective == doctest::Approx(ev.min()).epsilon(1e-6));
}

TEST_CASE("inverse quadratic form epigraph with fixed matrices") {
  SUBCASE("identity") {
    SdpProblem p;
    p.add_inverse_quadform_epigraph(
        conic::MatExpr::constant(arma::eye<arma::cx_mat>(2, 2)),
        arma::cx_vec(2, arma::fill::ones), 1.0);
    const SolverResult r = conic::solve(p);
    REQUIRE(r.status == Status::Optimal);
    CHECK(r.objective == doctest::Approx(2.0).epsilon(1e-7));
  }
  SUBCASE("diagonal") {
    SdpProblem p;
    arma::cx_mat d(2, 2, arma::fill::zeros);
    d(0, 0) = 2.0;
    d(1, 1) = 4.0;
    p.add_inverse_quadform_epigraph(conic::MatExpr::constant(d),
                                    arma::cx_vec(2, arma::fill::ones), 1.0);
    const SolverResult r = conic::solve(p);
    REQUIRE(r.status == Status::Optimal);
    CHECK(r.objective == doctest::Approx(0.75).epsilon(1e-7));
  }
  SUBCASE("random positive definite") {
    Rng rng(11);
    for (int t = 0; t < 8; ++t) {
      Rng local = rng.fork(t);
      const arma::cx_mat m = random_pd(local, 4, 0.4);
      SdpProblem p;
      p.add_inverse_quadform_epigraph(conic::MatExpr::constant(m),
                                      arma::cx_vec(4, arma::fill::ones), 1.0);
      const SolverResult r = conic::solve(p);
      REQUIRE(r.status == Status::Optimal);
      const arma::cx_vec mu(4, arma::fill::ones);
      const double direct = arma::cdot(mu, arma::cx_vec(arma::inv(m) * mu)).real();
      CHECK(r.objective == doctest::Approx(direct).epsilon(1e-7));
    }
  }
}

TEST_CASE("epigraph of an affine expression tracks the variable") {
  // X = diag(s, 2s) with tr-like pin s = 3; mu^T X^{-1} mu = 1/3 + 1/6.
  SdpProblem p;
  const auto s = p.add_scalar_var();
  conic::MatExpr x(2);
  arma::cx_mat pick(1, 1);
  pick(0, 0) = 1.0;
  x.at(0, 0).add_term(s, pick);
  pick(0, 0) = 2.0;
  x.at(1, 1).add_term(s, pick);
  p.add_inverse_quadform_epigraph(x, arma::cx_vec(2, arma::fill::ones), 1.0);
  arma::cx_mat one(1, 1);
  one(0, 0) = 1.0;
  p.add_eq(conic::trace_term(s, one), 3.0);
  const SolverResult r = conic::solve(p);
  REQUIRE(r.status == Status::Optimal);
  CHECK(r.objective == doctest::Approx(1.0 / 3.0 + 1.0 / 6.0).epsilon(1e-7));
}

TEST_CASE("synthetic problems with known optima solve to tolerance") {
  const std::string fail = solver_kkt_suite(40, 2024);
  CHECK_MESSAGE(fail.empty(), fail);
}

TEST_CASE("weak duality and KKT residuals on a random instance") {
  Rng rng(31);
  SyntheticSdp s = make_synthetic_sdp(rng, 5, 6);
  const SolverResult r = conic::solve(s.problem);
  REQUIRE(r.status == Status::Optimal);
  CHECK(r.duality_gap <= 1e-8);
  const arma::cx_mat& x = r.primal.at(0);
  const arma::cx_mat& z = r.dual.at(0);
  CHECK(min_eig_herm(x) >= -1e-8 * (1.0 + std::abs(arma::trace(x).real())));
  CHECK(min_eig_herm(z) >= -1e-8 * (1.0 + std::abs(arma::trace(z).real())));
  const double comp = arma::norm(arma::cx_mat(x * z), "fro");
  CHECK(comp <= 10.0 * 1e-8 * (1.0 + arma::norm(x, "fro") * arma::norm(z, "fro")));
}

TEST_CASE("objective scaling leaves the argmin unchanged") {
  Rng rng(47);
  const arma::cx_mat c = random_pd(rng, 3, 0.1);
  auto build = [&](double scale) {
    SdpProblem p;
    const auto x = p.add_psd_var(3);
    conic::LinExpr obj = conic::trace_term(x, c);
    obj *= scale;
    p.set_objective(obj);
    p.add_eq(conic::trace_term(x, arma::eye<arma::cx_mat>(3, 3)), 1.0);
    return p;
  };
  const SolverResult a = conic::solve(build(1.0));
  const SolverResult b = conic::solve(build(137.0));
  REQUIRE(a.status == Status::Optimal);
  REQUIRE(b.status == Status::Optimal);
  CHECK(arma::norm(a.primal.at(0) - b.primal.at(0), "fro") <=
        1e-6 * (1.0 + arma::norm(a.primal.at(0), "fro")));
  CHECK(b.objective == doctest::Approx(137.0 * a.objective).epsilon(1e-9));
}

TEST_CASE("solves are deterministic") {
  Rng rng(59);
  SyntheticSdp s = make_synthetic_sdp(rng, 4, 5);
  const SolverResult a = conic::solve(s.problem);
  const SolverResult b = conic::solve(s.problem);
  REQUIRE(a.status == Status::Optimal);
  CHECK(arma::norm(a.primal.at(0) - b.primal.at(0), "fro") == 0.0);
  CHECK(a.objective == b.objective);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("sdpa dump writes the compiled standard form") {
  SdpProblem p;
  const auto x = p.add_psd_var(2);
  arma::cx_mat c(2, 2);
  c(0, 0) = 1.0;
  c(0, 1) = cx(0.0, 0.5);
  c(1, 0) = cx(0.0, -0.5);
  c(1, 1) = 2.0;
  p.set_objective(conic::trace_term(x, c));
  p.add_eq(conic::trace_term(x, arma::eye<arma::cx_mat>(2, 2)), 1.0);
  p.add_le(conic::trace_term(x, c), 5.0);
  const std::string path = "dump_test.dats";
  conic::dump_sdpa(p, path);
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  int data_lines = 0;
  bool saw_mdim = false;
  while (std::getline(in, line)) {
    if (line.find("= mDIM") != std::string::npos) {
      saw_mdim = true;
      CHECK(line.substr(0, 1) == "2");
    }
    if (!line.empty() && line[0] != '*' && line.find('=') == std::string::npos &&
        std::count(line.begin(), line.end(), ' ') == 4) {
      ++data_lines;
    }
  }
  CHECK(saw_mdim);
  CHECK(data_lines > 4);
}

#pragma once
// Hermitian semidefinite programming: a small modeling layer (PSD matrix
// variables, real affine constraints, affine-PSD lifts, the Schur-complement
// epigraph of an inverse quadratic form) and a dense primal-dual interior
// point solver on the homogeneous self-dual embedding with Nesterov-Todd
// scaling and a Mehrotra predictor-corrector.
//
// Complex Hermitian data is handled natively (no real embedding); solves are
// deterministic and bit-stable for fixed inputs.

#include <map>
#include <string>
#include <vector>

#include "cfisac/common.hpp"

namespace cfisac::conic {

struct VarRef {
  int id = -1;
  int dim = 0;
};

// Complex-valued affine functional of the matrix variables:
//   value = sum_v tr(coeff[v] * X_v) + constant.
// Real functionals (constraints, objectives) must have Hermitian
// coefficients; this is validated where required.
struct LinExpr {
  std::map<int, arma::cx_mat> coeff;
  cx constant{0.0, 0.0};

  LinExpr& add_term(const VarRef& v, const arma::cx_mat& c);
  LinExpr& operator+=(const LinExpr& o);
  LinExpr& operator*=(cx s);
};

LinExpr trace_term(const VarRef& v, const arma::cx_mat& coeff);
// x^H X_v x as a LinExpr (coefficient x x^H).
LinExpr quad_form(const VarRef& v, const arma::cx_vec& x);

// Affine Hermitian matrix expression, entrywise LinExpr, row-major. Only the
// upper triangle is consulted when the expression is lifted.
struct MatExpr {
  int dim = 0;
  std::vector<LinExpr> entries;  // dim*dim

  explicit MatExpr(int d) : dim(d), entries(d * d) {}
  LinExpr& at(int r, int c) { return entries[r * dim + c]; }
  const LinExpr& at(int r, int c) const { return entries[r * dim + c]; }
  static MatExpr constant(const arma::cx_mat& m);
};

struct SolveOptions {
  double gap_tol = 1e-8;
  double feas_tol = 1e-8;
  int max_iter = 200;
  bool verbose = false;
};

struct SolverResult {
  enum class Status { Optimal, Infeasible, Unbounded, MaxIter, NumericalFailure };
  Status status = Status::NumericalFailure;
  // One matrix per declared block (user variables, lifted blocks); slack
  // blocks are excluded.
  std::vector<arma::cx_mat> primal;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double duality_gap = std::numeric_limits<double>::quiet_NaN();
  double max_violation = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  // Infeasible: y with b^T y = 1 and -A^T y PSD. Unbounded: improving ray X
  // with A(X) ~ 0, <C, X> = -1.
  arma::vec certificate_y;
  std::vector<arma::cx_mat> certificate_x;
  // Dual iterates per block, for KKT diagnostics.
  std::vector<arma::cx_mat> dual;
  arma::vec y;

  const arma::cx_mat& matrix(const VarRef& v) const { return primal.at(v.id); }
  double scalar(const VarRef& v) const { return primal.at(v.id)(0, 0).real(); }
};

const char* to_string(SolverResult::Status s);

class SdpProblem {
 public:
  VarRef add_psd_var(int dim, std::string name = {});
  // Nonnegative scalar, stored as a 1x1 PSD block.
  VarRef add_scalar_var(std::string name = {});

  void add_eq(const LinExpr& e, double rhs);
  void add_le(const LinExpr& e, double rhs);
  void add_ge(const LinExpr& e, double rhs);

  // Lifts an affine Hermitian expression into a fresh PSD block with
  // entrywise linking equalities; returns the lifted block.
  VarRef add_psd(const MatExpr& m, std::string name = {});

  // Adds scalar t and the PSD constraint [[X, mu],[mu^H, t]] >= 0, then adds
  // weight*t to the objective. Minimizing weight*t minimizes
  // weight * mu^H X^{-1} mu whenever X is positive definite. Returns the
  // handle to t.
  LinExpr add_inverse_quadform_epigraph(const MatExpr& x, const arma::cx_vec& mu,
                                        double weight);

  void set_objective(const LinExpr& e, bool minimize = true);
  void add_objective_term(const LinExpr& e);

  int num_blocks() const { return static_cast<int>(dims_.size()); }
  int block_dim(int id) const { return dims_[id]; }
  int num_constraints() const { return static_cast<int>(rows_.size()); }

  friend SolverResult solve(const SdpProblem& p, const SolveOptions& opts);
  friend void dump_sdpa(const SdpProblem& p, const std::string& path);

 private:
  enum class RowKind { Eq, Le, Ge };
  struct Row {
    std::vector<std::pair<int, arma::cx_mat>> coeff;  // Hermitian, block-sorted
    double rhs = 0.0;
    RowKind kind = RowKind::Eq;
  };
  void add_row(const LinExpr& e, double rhs, RowKind kind, bool internal);
  void link_entry(const VarRef& y, int r, int c, const LinExpr& target);
  std::vector<int> dims_;
  std::vector<std::string> names_;
  std::vector<Row> rows_;
  LinExpr objective_;
  bool minimize_ = true;
};

SolverResult solve(const SdpProblem& p, const SolveOptions& opts = {});

double evaluate(const LinExpr& e, const SolverResult& r);

// Text dump of the compiled standard form in SDPA sparse style, on the real
// symmetric embedding [[Re, -Im],[Im, Re]], for external cross-checks.
void dump_sdpa(const SdpProblem& p, const std::string& path);

}  // namespace cfisac::conic

#include "cfisac/conic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace cfisac::conic {

namespace {

constexpr double kHermTol = 1e-9;

// Hermitian picker matrices: tr(E Y) extracts Re/Im of Y[r,c].
arma::cx_mat pick_re(int dim, int r, int c) {
  arma::cx_mat e(dim, dim, arma::fill::zeros);
  if (r == c) {
    e(r, r) = 1.0;
  } else {
    e(r, c) = 0.5;
    e(c, r) = 0.5;
  }
  return e;
}

arma::cx_mat pick_im(int dim, int r, int c) {
  arma::cx_mat e(dim, dim, arma::fill::zeros);
  if (r != c) {
    e(r, c) = cx(0.0, 0.5);
    e(c, r) = cx(0.0, -0.5);
  }
  return e;
}

void require_hermitian_coeff(const arma::cx_mat& p, const char* what) {
  const double scale = std::max(1.0, arma::norm(p, "fro"));
  if (arma::norm(p - p.t().eval(), "fro") > kHermTol * scale) {
    throw std::invalid_argument(std::string(what) +
                                ": functional is not real on Hermitian points");
  }
}

}  // namespace

LinExpr& LinExpr::add_term(const VarRef& v, const arma::cx_mat& c) {
  if (v.id < 0) throw std::invalid_argument("LinExpr: unbound variable");
  if (static_cast<int>(c.n_rows) != v.dim || static_cast<int>(c.n_cols) != v.dim) {
    throw std::invalid_argument("LinExpr: coefficient dimension mismatch");
  }
  auto it = coeff.find(v.id);
  if (it == coeff.end()) {
    coeff.emplace(v.id, c);
  } else {
    it->second += c;
  }
  return *this;
}

LinExpr& LinExpr::operator+=(const LinExpr& o) {
  for (const auto& [id, c] : o.coeff) {
    auto it = coeff.find(id);
    if (it == coeff.end()) {
      coeff.emplace(id, c);
    } else {
      it->second += c;
    }
  }
  constant += o.constant;
  return *this;
}

LinExpr& LinExpr::operator*=(cx s) {
  for (auto& [id, c] : coeff) c *= s;
  constant *= s;
  return *this;
}

LinExpr trace_term(const VarRef& v, const arma::cx_mat& coeff) {
  LinExpr e;
  e.add_term(v, coeff);
  return e;
}

LinExpr quad_form(const VarRef& v, const arma::cx_vec& x) {
  return trace_term(v, arma::cx_mat(x * x.t()));
}

MatExpr MatExpr::constant(const arma::cx_mat& m) {
  MatExpr e(static_cast<int>(m.n_rows));
  for (int r = 0; r < e.dim; ++r) {
    for (int c = 0; c < e.dim; ++c) e.at(r, c).constant = m(r, c);
  }
  return e;
}

VarRef SdpProblem::add_psd_var(int dim, std::string name) {
  if (dim < 1) throw std::invalid_argument("add_psd_var: dim must be >= 1");
  dims_.push_back(dim);
  names_.push_back(name.empty() ? "x" + std::to_string(dims_.size() - 1) : std::move(name));
  return VarRef{static_cast<int>(dims_.size()) - 1, dim};
}

VarRef SdpProblem::add_scalar_var(std::string name) {
  return add_psd_var(1, name.empty() ? "s" + std::to_string(dims_.size()) : std::move(name));
}

void SdpProblem::add_row(const LinExpr& e, double rhs, RowKind kind, bool internal) {
  Row row;
  row.rhs = rhs;
  row.kind = kind;
  for (const auto& [id, p] : e.coeff) {
    if (id < 0 || id >= num_blocks()) throw std::invalid_argument("constraint references unknown variable");
    if (!internal) require_hermitian_coeff(p, "constraint");
    arma::cx_mat h = hermitize(p);
    if (arma::norm(h, "fro") == 0.0) continue;
    row.coeff.emplace_back(id, std::move(h));
  }
  if (!internal && std::abs(e.constant.imag()) > kHermTol * (1.0 + std::abs(e.constant))) {
    throw std::invalid_argument("constraint constant must be real");
  }
  row.rhs -= e.constant.real();
  if (row.coeff.empty()) {
    const bool ok = kind == RowKind::Eq ? std::abs(row.rhs) <= 1e-12
                  : kind == RowKind::Le ? row.rhs >= -1e-12
                                        : row.rhs <= 1e-12;
    if (!ok) throw std::invalid_argument("constraint has no variables and cannot hold");
    return;  // vacuous
  }
  rows_.push_back(std::move(row));
}

void SdpProblem::add_eq(const LinExpr& e, double rhs) { add_row(e, rhs, RowKind::Eq, false); }
void SdpProblem::add_le(const LinExpr& e, double rhs) { add_row(e, rhs, RowKind::Le, false); }
void SdpProblem::add_ge(const LinExpr& e, double rhs) { add_row(e, rhs, RowKind::Ge, false); }

void SdpProblem::link_entry(const VarRef& y, int r, int c, const LinExpr& target) {
  const int d = y.dim;
  // Re(Y[r,c]) - Re(target_linear) = Re(const)
  {
    LinExpr row = trace_term(y, pick_re(d, r, c));
    for (const auto& [id, p] : target.coeff) {
      row.add_term(VarRef{id, dims_[id]}, -hermitize(p));
    }
    add_row(row, target.constant.real(), RowKind::Eq, true);
  }
  // Im(Y[r,c]) - Im(target_linear) = Im(const); Im(tr(PX)) = tr(herm(-iP) X).
  {
    LinExpr row = trace_term(y, pick_im(d, r, c));
    bool nonzero = r != c;
    for (const auto& [id, p] : target.coeff) {
      const arma::cx_mat him = hermitize(cx(0.0, -1.0) * p);
      if (arma::norm(him, "fro") > 0.0) {
        row.add_term(VarRef{id, dims_[id]}, -him);
        nonzero = true;
      }
    }
    if (nonzero) add_row(row, target.constant.imag(), RowKind::Eq, true);
  }
}

VarRef SdpProblem::add_psd(const MatExpr& m, std::string name) {
  const int d = m.dim;
  VarRef y = add_psd_var(d, name.empty() ? "lift" : std::move(name));
  for (int r = 0; r < d; ++r) {
    for (int c = r; c < d; ++c) link_entry(y, r, c, m.at(r, c));
  }
  return y;
}

LinExpr SdpProblem::add_inverse_quadform_epigraph(const MatExpr& x,
                                                  const arma::cx_vec& mu,
                                                  double weight) {
  const int d = x.dim;
  if (static_cast<int>(mu.n_elem) != d) {
    throw std::invalid_argument("epigraph: mu length must match expression dimension");
  }
  VarRef y = add_psd_var(d + 1, "epi");
  for (int r = 0; r < d; ++r) {
    for (int c = r; c < d; ++c) link_entry(y, r, c, x.at(r, c));
    // Border column carries mu; the corner stays free and is the epigraph
    // scalar t itself.
    LinExpr border;
    border.constant = mu(r);
    link_entry(y, r, d, border);
  }
  LinExpr t = trace_term(y, pick_re(d + 1, d, d));
  LinExpr scaled = t;
  scaled *= weight;
  add_objective_term(scaled);
  return t;
}

void SdpProblem::set_objective(const LinExpr& e, bool minimize) {
  objective_ = e;
  minimize_ = minimize;
}

void SdpProblem::add_objective_term(const LinExpr& e) { objective_ += e; }

const char* to_string(SolverResult::Status s) {
  switch (s) {
    case SolverResult::Status::Optimal: return "optimal";
    case SolverResult::Status::Infeasible: return "infeasible";
    case SolverResult::Status::Unbounded: return "unbounded";
    case SolverResult::Status::MaxIter: return "max_iter";
    case SolverResult::Status::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

double evaluate(const LinExpr& e, const SolverResult& r) {
  cx v = e.constant;
  for (const auto& [id, p] : e.coeff) {
    v += arma::accu(p.st() % r.primal.at(id));  // tr(P X)
  }
  return v.real();
}

namespace {

struct Compiled {
  std::vector<int> dims;     // declared blocks then inequality slacks
  int n_declared = 0;
  std::vector<arma::cx_mat> c;
  struct CRow {
    std::vector<std::pair<int, arma::cx_mat>> a;
    double b = 0.0;
  };
  std::vector<CRow> rows;
  arma::vec row_scale;  // internal row = row_scale(i) * user row
  double c_scale = 1.0;
  double sign = 1.0;  // +1 minimize, -1 maximize
};

struct Iterate {
  std::vector<arma::cx_mat> x, z;
  arma::vec y;
  double tau = 1.0, kappa = 1.0;
};

struct NtScaling {
  std::vector<arma::cx_mat> g, ginv, w, lx, lz;
  std::vector<arma::vec> sigma;
};

double frob(const arma::cx_mat& m) { return arma::norm(m, "fro"); }

bool chol_lower_jitter(arma::cx_mat& l, arma::cx_mat m) {
  m = hermitize(m);
  double jitter = 0.0;
  const double base = 1e-14 * std::max(1.0, std::abs(arma::trace(m).real()));
  for (int attempt = 0; attempt < 4; ++attempt) {
    if (arma::chol(l, m + jitter * arma::eye<arma::cx_mat>(m.n_rows, m.n_cols), "lower")) {
      return true;
    }
    jitter = jitter == 0.0 ? base : jitter * 100.0;
  }
  return false;
}

// Projects a primal-dual block pair onto exactly complementary faces. The
// split comes from the spectral decomposition of the balanced difference
// X/||X|| - Z/||Z||; near an optimum the induced perturbation is second
// order in the face misalignment, while X Z becomes exactly zero.
void split_faces(arma::cx_mat& x, arma::cx_mat& z) {
  const double xn = arma::norm(x, "fro");
  const double zn = arma::norm(z, "fro");
  if (xn == 0.0 || zn == 0.0) return;
  arma::vec ev;
  arma::cx_mat u;
  if (!arma::eig_sym(ev, u, hermitize(x / xn - z / zn))) return;
  std::vector<arma::uword> pos, neg;
  for (arma::uword i = 0; i < ev.n_elem; ++i) {
    (ev(i) >= 0.0 ? pos : neg).push_back(i);
  }
  arma::cx_mat up(u.n_rows, pos.size()), un(u.n_rows, neg.size());
  for (size_t i = 0; i < pos.size(); ++i) up.col(i) = u.col(pos[i]);
  for (size_t i = 0; i < neg.size(); ++i) un.col(i) = u.col(neg[i]);
  x = pos.empty() ? arma::cx_mat(x.n_rows, x.n_cols, arma::fill::zeros)
                  : arma::cx_mat(up * hermitize(up.t() * x * up) * up.t());
  z = neg.empty() ? arma::cx_mat(z.n_rows, z.n_cols, arma::fill::zeros)
                  : arma::cx_mat(un * hermitize(un.t() * z * un) * un.t());
}

// Largest step a with X + a*D still PSD, given X = L L^H.
double step_to_boundary(const arma::cx_mat& l, const arma::cx_mat& d) {
  arma::cx_mat t1 = arma::solve(arma::trimatl(l), d);
  arma::cx_mat t2 = arma::solve(arma::trimatl(l), t1.t().eval());
  const arma::cx_mat m = hermitize(t2.t());
  arma::vec ev;
  if (!arma::eig_sym(ev, m)) return 0.0;
  const double mn = ev.min();
  if (mn >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / mn;
}

}  // namespace

SolverResult solve(const SdpProblem& p, const SolveOptions& opts) {
  // ----- compile to standard form: min <C,X> s.t. <A_i,X> = b_i, X PSD -----
  Compiled f;
  f.dims = p.dims_;
  f.n_declared = static_cast<int>(p.dims_.size());
  f.sign = p.minimize_ ? 1.0 : -1.0;
  f.rows.reserve(p.rows_.size());
  for (const auto& row : p.rows_) {
    Compiled::CRow r;
    r.a = row.coeff;
    r.b = row.rhs;
    if (row.kind != SdpProblem::RowKind::Eq) {
      const double s = row.kind == SdpProblem::RowKind::Le ? 1.0 : -1.0;
      f.dims.push_back(1);
      arma::cx_mat one(1, 1);
      one(0, 0) = s;
      r.a.emplace_back(static_cast<int>(f.dims.size()) - 1, std::move(one));
    }
    f.rows.push_back(std::move(r));
  }
  const int m = static_cast<int>(f.rows.size());
  const int nb = static_cast<int>(f.dims.size());
  f.row_scale.set_size(m);
  for (int i = 0; i < m; ++i) {
    double s = std::abs(f.rows[i].b);
    for (const auto& [id, a] : f.rows[i].a) s = std::max(s, frob(a));
    const double sc = 1.0 / std::max(s, 1e-12);
    f.row_scale(i) = sc;
    for (auto& [id, a] : f.rows[i].a) a *= sc;
    f.rows[i].b *= sc;
  }
  f.c.assign(nb, arma::cx_mat());
  for (int b = 0; b < nb; ++b) f.c[b] = arma::cx_mat(f.dims[b], f.dims[b], arma::fill::zeros);
  for (const auto& [id, c0] : p.objective_.coeff) {
    require_hermitian_coeff(c0, "objective");
    f.c[id] += f.sign * hermitize(c0);
  }
  double cn = 0.0;
  for (const auto& cb : f.c) cn = std::max(cn, frob(cb));
  f.c_scale = std::max(cn, 1e-12);
  for (auto& cb : f.c) cb /= f.c_scale;

  arma::vec b(m);
  for (int i = 0; i < m; ++i) b(i) = f.rows[i].b;
  const double bnorm = m > 0 ? arma::norm(b, 2) : 0.0;
  double cnorm = 0.0;
  for (const auto& cb : f.c) cnorm += frob(cb) * frob(cb);
  cnorm = std::sqrt(cnorm);
  double nu = 0.0;
  for (int d : f.dims) nu += d;

  // ----- operators -----
  auto apply_a = [&](const std::vector<arma::cx_mat>& x) {
    arma::vec out(m, arma::fill::zeros);
    for (int i = 0; i < m; ++i) {
      double v = 0.0;
      for (const auto& [id, a] : f.rows[i].a) v += ip(a, x[id]);
      out(i) = v;
    }
    return out;
  };
  auto apply_at = [&](const arma::vec& y) {
    std::vector<arma::cx_mat> out(nb);
    for (int bix = 0; bix < nb; ++bix) {
      out[bix] = arma::cx_mat(f.dims[bix], f.dims[bix], arma::fill::zeros);
    }
    for (int i = 0; i < m; ++i) {
      for (const auto& [id, a] : f.rows[i].a) out[id] += y(i) * a;
    }
    return out;
  };
  auto dot_c = [&](const std::vector<arma::cx_mat>& x) {
    double v = 0.0;
    for (int bix = 0; bix < nb; ++bix) v += ip(f.c[bix], x[bix]);
    return v;
  };

  // ----- initial iterate -----
  Iterate it;
  it.x.resize(nb);
  it.z.resize(nb);
  for (int bix = 0; bix < nb; ++bix) {
    it.x[bix] = arma::eye<arma::cx_mat>(f.dims[bix], f.dims[bix]);
    it.z[bix] = arma::eye<arma::cx_mat>(f.dims[bix], f.dims[bix]);
  }
  it.y.zeros(m);

  SolverResult res;
  res.status = SolverResult::Status::MaxIter;
  Iterate best = it;
  double best_score = std::numeric_limits<double>::infinity();
  int best_iter = 0;

  auto package = [&](SolverResult::Status st, int iters) {
    res.status = st;
    res.iterations = iters;
    res.y.set_size(m);
    const double t = it.tau > 0.0 ? it.tau : 1.0;
    res.primal.resize(f.n_declared);
    res.dual.resize(f.n_declared);
    const bool purify = st == SolverResult::Status::Optimal;
    for (int bix = 0; bix < f.n_declared; ++bix) {
      res.primal[bix] = hermitize(it.x[bix] / t);
      res.dual[bix] = hermitize(it.z[bix] / t * f.c_scale);
      if (purify) split_faces(res.primal[bix], res.dual[bix]);
    }
    for (int i = 0; i < m; ++i) res.y(i) = it.y(i) / t * f.row_scale(i) * f.c_scale;
    res.objective = evaluate(p.objective_, res);
    // Relative duality gap on the internal scaled problem.
    double xs = 0.0;
    for (int bix = 0; bix < nb; ++bix) xs += ip(it.x[bix], it.z[bix]);
    const double pobj = dot_c(it.x) / t;
    const double dobj = arma::dot(b, it.y) / t;
    res.duality_gap = std::abs(pobj - dobj) / (1.0 + std::max(std::abs(pobj), std::abs(dobj)));
    // Violation of the user rows at the returned primal.
    double viol = 0.0;
    for (const auto& row : p.rows_) {
      double v = 0.0;
      for (const auto& [id, a] : row.coeff) v += ip(a, res.primal[id]);
      const double denom = 1.0 + std::abs(row.rhs);
      double d = 0.0;
      if (row.kind == SdpProblem::RowKind::Eq) d = std::abs(v - row.rhs);
      if (row.kind == SdpProblem::RowKind::Le) d = std::max(0.0, v - row.rhs);
      if (row.kind == SdpProblem::RowKind::Ge) d = std::max(0.0, row.rhs - v);
      viol = std::max(viol, d / denom);
    }
    for (int bix = 0; bix < f.n_declared; ++bix) {
      const double tr = std::abs(arma::trace(res.primal[bix]).real());
      viol = std::max(viol, std::max(0.0, -min_eig_herm(res.primal[bix])) / (1.0 + tr));
    }
    res.max_violation = viol;
    return res;
  };

  const double inf_tol = std::max(opts.feas_tol, 1e-9);

  auto finish = [&](SolverResult::Status st, int iter) -> SolverResult {
    if (best_score <= 1.0) {
      it = best;
      return package(SolverResult::Status::Optimal, best_iter);
    }
    return package(st, iter);
  };

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    // ----- residuals -----
    const arma::vec ax = apply_a(it.x);
    const arma::vec rp = ax - b * it.tau;
    std::vector<arma::cx_mat> aty = apply_at(it.y);
    std::vector<arma::cx_mat> rd(nb);
    double rd_norm2 = 0.0;
    for (int bix = 0; bix < nb; ++bix) {
      rd[bix] = aty[bix] + it.z[bix] - f.c[bix] * it.tau;
      rd_norm2 += frob(rd[bix]) * frob(rd[bix]);
    }
    const double cx_v = dot_c(it.x);
    const double by_v = m > 0 ? arma::dot(b, it.y) : 0.0;
    const double rg = cx_v - by_v + it.kappa;
    double xz = 0.0;
    for (int bix = 0; bix < nb; ++bix) xz += ip(it.x[bix], it.z[bix]);
    const double mu = (xz + it.tau * it.kappa) / (nu + 1.0);

    // ----- convergence / certificates -----
    const double pres = (m > 0 ? arma::norm(rp / it.tau, 2) : 0.0) / (1.0 + bnorm);
    const double dres = std::sqrt(rd_norm2) / it.tau / (1.0 + cnorm);
    const double pobj = cx_v / it.tau;
    const double dobj = by_v / it.tau;
    const double relgap = std::abs(pobj - dobj) / (1.0 + std::max(std::abs(pobj), std::abs(dobj)));
    if (opts.verbose) {
      std::printf("it %3d  pres %.2e dres %.2e gap %.2e tau %.2e kappa %.2e mu %.2e\n",
                  iter, pres, dres, relgap, it.tau, it.kappa, mu);
    }
    // Complementarity of the descaled pair after purification; the returned
    // matrices must satisfy ||X Z|| <= 10*gap_tol*(1 + ||X|| ||Z||).
    double xfn = 0.0, zfn = 0.0, xz_prod = 0.0;
    for (int bix = 0; bix < nb; ++bix) {
      xfn += frob(it.x[bix]) * frob(it.x[bix]);
      zfn += frob(it.z[bix]) * frob(it.z[bix]);
      const arma::cx_mat xp = purify_psd(it.x[bix], opts.gap_tol);
      const arma::cx_mat zp = purify_psd(it.z[bix], opts.gap_tol);
      const double p2 = frob(xp * zp);
      xz_prod += p2 * p2;
    }
    const double tau2 = it.tau * it.tau;
    const double compl_abs = std::sqrt(xz_prod) * f.c_scale / tau2;
    const double compl_scale = 1.0 + std::sqrt(xfn * zfn) * f.c_scale / tau2;
    if (opts.verbose) {
      std::printf("   purified compl %.3e vs %.3e\n", compl_abs,
                  5.0 * opts.gap_tol * compl_scale);
    }
    const bool converged_linear =
        pres <= opts.feas_tol && dres <= opts.feas_tol && relgap <= opts.gap_tol;
    if (converged_linear && compl_abs <= 5.0 * opts.gap_tol * compl_scale) {
      return package(SolverResult::Status::Optimal, iter);
    }
    // Track the best iterate; when late-stage numerics break down we can
    // still return an Optimal point that meets every advertised bound.
    {
      const double score =
          std::max({pres / opts.feas_tol, dres / opts.feas_tol,
                    relgap / opts.gap_tol,
                    compl_abs / (8.0 * opts.gap_tol * compl_scale)});
      if (score < best_score) {
        best_score = score;
        best = it;
        best_iter = iter;
      }
    }
    if (it.tau <= 1e-6 * std::max(1.0, it.kappa)) {
      if (by_v > 1e-10) {
        double cert2 = 0.0;
        double ynorm = arma::norm(it.y, 2);
        for (int bix = 0; bix < nb; ++bix) {
          cert2 += std::pow(frob(aty[bix] + it.z[bix]) / by_v, 2);
        }
        if (std::sqrt(cert2) <= inf_tol * (1.0 + ynorm / by_v)) {
          package(SolverResult::Status::Infeasible, iter);
          res.certificate_y.set_size(m);
          for (int i = 0; i < m; ++i) res.certificate_y(i) = it.y(i) * f.row_scale(i) / by_v;
          return res;
        }
      }
      if (cx_v < -1e-10) {
        double xn = 0.0;
        for (int bix = 0; bix < nb; ++bix) xn += frob(it.x[bix]);
        if ((m > 0 ? arma::norm(ax, 2) : 0.0) / (-cx_v) <= inf_tol * (1.0 + xn / (-cx_v))) {
          package(SolverResult::Status::Unbounded, iter);
          res.certificate_x.resize(f.n_declared);
          for (int bix = 0; bix < f.n_declared; ++bix) {
            res.certificate_x[bix] = hermitize(it.x[bix] / (-cx_v));
          }
          return res;
        }
      }
    }

    // ----- Nesterov-Todd scaling -----
    NtScaling nt;
    nt.g.resize(nb);
    nt.ginv.resize(nb);
    nt.w.resize(nb);
    nt.lx.resize(nb);
    nt.lz.resize(nb);
    nt.sigma.resize(nb);
    bool nt_ok = true;
    for (int bix = 0; bix < nb && nt_ok; ++bix) {
      if (!chol_lower_jitter(nt.lx[bix], it.x[bix]) ||
          !chol_lower_jitter(nt.lz[bix], it.z[bix])) {
        nt_ok = false;
        break;
      }
      arma::cx_mat u, v;
      arma::vec s;
      if (!arma::svd(u, s, v, arma::cx_mat(nt.lz[bix].t() * nt.lx[bix]))) {
        nt_ok = false;
        break;
      }
      const arma::vec si = 1.0 / arma::sqrt(s);
      nt.g[bix] = nt.lx[bix] * v * arma::diagmat(arma::conv_to<arma::cx_vec>::from(si));
      // G^{-1} = diag(sqrt(s))^{+1}... G^{-1} = diag(s)^{1/2} V^H Lx^{-1}
      arma::cx_mat lxinv = arma::solve(arma::trimatl(nt.lx[bix]),
                                       arma::eye<arma::cx_mat>(f.dims[bix], f.dims[bix]));
      nt.ginv[bix] = arma::diagmat(arma::conv_to<arma::cx_vec>::from(arma::sqrt(s))) *
                     v.t() * lxinv;
      nt.w[bix] = hermitize(nt.g[bix] * nt.g[bix].t());
      nt.sigma[bix] = s;
    }
    if (!nt_ok) return finish(SolverResult::Status::NumericalFailure, iter);

    // ----- Schur complement M[i,j] = <A_i, W A_j W> -----
    arma::mat schur(m, m, arma::fill::zeros);
    std::vector<std::vector<std::pair<int, arma::cx_mat>>> waw(m);
    for (int i = 0; i < m; ++i) {
      waw[i].reserve(f.rows[i].a.size());
      for (const auto& [id, a] : f.rows[i].a) {
        waw[i].emplace_back(id, arma::cx_mat(nt.w[id] * a * nt.w[id]));
      }
    }
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j <= i; ++j) {
        double v = 0.0;
        auto as = f.rows[j].a.begin();
        for (const auto& [id, t] : waw[i]) {
          while (as != f.rows[j].a.end() && as->first < id) ++as;
          if (as == f.rows[j].a.end()) break;
          if (as->first == id) v += ip(as->second, t);
        }
        schur(i, j) = v;
        schur(j, i) = v;
      }
    }
    arma::mat schur_l;
    {
      bool ok = false;
      double jit = 0.0;
      const double base = m > 0 ? 1e-13 * std::max(1.0, arma::trace(schur) / m) : 0.0;
      for (int attempt = 0; attempt < 4 && !ok; ++attempt) {
        ok = m == 0 || arma::chol(schur_l, schur + jit * arma::eye(m, m), "lower");
        jit = jit == 0.0 ? base : jit * 100.0;
      }
      if (!ok) return finish(SolverResult::Status::NumericalFailure, iter);
    }
    auto schur_solve = [&](const arma::vec& rhs) {
      if (m == 0) return arma::vec();
      auto backsolve = [&](const arma::vec& r) {
        arma::vec t1 = arma::solve(arma::trimatl(schur_l), r);
        return arma::vec(arma::solve(arma::trimatu(schur_l.t().eval()), t1));
      };
      arma::vec sol = backsolve(rhs);
      // One round of iterative refinement; the Schur system is the accuracy
      // bottleneck as mu shrinks.
      sol += backsolve(rhs - schur * sol);
      return sol;
    };

    // Generic KKT solve for (rhs1, RHS2, RHS3):
    //   A dX = rhs1,  A^T dy + dZ = RHS2,  dX + W dZ W = RHS3.
    auto kkt = [&](const arma::vec& rhs1, const std::vector<arma::cx_mat>& rhs2,
                   const std::vector<arma::cx_mat>& rhs3, arma::vec& dy,
                   std::vector<arma::cx_mat>& dx, std::vector<arma::cx_mat>& dz) {
      std::vector<arma::cx_mat> tmp(nb);
      for (int bix = 0; bix < nb; ++bix) {
        tmp[bix] = rhs3[bix] - nt.w[bix] * rhs2[bix] * nt.w[bix];
      }
      dy = schur_solve(rhs1 - apply_a(tmp));
      std::vector<arma::cx_mat> atdy = apply_at(dy);
      dx.resize(nb);
      dz.resize(nb);
      for (int bix = 0; bix < nb; ++bix) {
        dz[bix] = hermitize(rhs2[bix] - atdy[bix]);
        dx[bix] = hermitize(rhs3[bix] - nt.w[bix] * dz[bix] * nt.w[bix]);
      }
    };

    // Second solve: RHS (b, C, 0); shared by predictor and corrector.
    arma::vec dy2;
    std::vector<arma::cx_mat> dx2, dz2, zero3(nb);
    for (int bix = 0; bix < nb; ++bix) {
      zero3[bix] = arma::cx_mat(f.dims[bix], f.dims[bix], arma::fill::zeros);
    }
    kkt(b, f.c, zero3, dy2, dx2, dz2);
    double denom = dot_c(dx2) - (m > 0 ? arma::dot(b, dy2) : 0.0) - it.kappa / it.tau;
    if (!(denom < 0.0)) denom = std::min(denom, -1e-14);

    auto combined_step = [&](const std::vector<arma::cx_mat>& rc, double rtk,
                             arma::vec& dy, std::vector<arma::cx_mat>& dx,
                             std::vector<arma::cx_mat>& dz, double& dtau, double& dkappa) {
      std::vector<arma::cx_mat> rhs2(nb);
      for (int bix = 0; bix < nb; ++bix) rhs2[bix] = -rd[bix];
      arma::vec dy1;
      std::vector<arma::cx_mat> dx1, dz1;
      kkt(-rp, rhs2, rc, dy1, dx1, dz1);
      const double num = -rg - dot_c(dx1) + (m > 0 ? arma::dot(b, dy1) : 0.0) - rtk / it.tau;
      dtau = num / denom;
      dkappa = (rtk - it.kappa * dtau) / it.tau;
      dy = dy1 + dtau * dy2;
      dx.resize(nb);
      dz.resize(nb);
      for (int bix = 0; bix < nb; ++bix) {
        dx[bix] = dx1[bix] + dtau * dx2[bix];
        dz[bix] = dz1[bix] + dtau * dz2[bix];
      }
    };

    auto max_step = [&](const std::vector<arma::cx_mat>& dx,
                        const std::vector<arma::cx_mat>& dz, double dtau, double dkappa) {
      double a = 1.0 / 0.99;  // allow a full unit step after the 0.99 factor
      for (int bix = 0; bix < nb; ++bix) {
        a = std::min(a, step_to_boundary(nt.lx[bix], dx[bix]));
        a = std::min(a, step_to_boundary(nt.lz[bix], dz[bix]));
      }
      if (dtau < 0.0) a = std::min(a, -it.tau / dtau);
      if (dkappa < 0.0) a = std::min(a, -it.kappa / dkappa);
      return a;
    };

    // ----- predictor -----
    std::vector<arma::cx_mat> rc(nb);
    for (int bix = 0; bix < nb; ++bix) rc[bix] = -it.x[bix];
    arma::vec dya;
    std::vector<arma::cx_mat> dxa, dza;
    double dtau_a = 0.0, dkap_a = 0.0;
    combined_step(rc, -it.tau * it.kappa, dya, dxa, dza, dtau_a, dkap_a);
    const double alpha_a = std::min(1.0, 0.99 * max_step(dxa, dza, dtau_a, dkap_a));
    double xz_a = 0.0;
    for (int bix = 0; bix < nb; ++bix) {
      xz_a += ip(it.x[bix] + alpha_a * dxa[bix], it.z[bix] + alpha_a * dza[bix]);
    }
    const double mu_a = (xz_a + (it.tau + alpha_a * dtau_a) * (it.kappa + alpha_a * dkap_a)) /
                        (nu + 1.0);
    double sigma = std::pow(std::max(0.0, mu_a / mu), 3.0);
    sigma = std::min(std::max(sigma, 1e-8), 0.9999);
    // Terminal centering: feasibility and gap are in tolerance but the pair
    // is off-center; pure centering pulls X Z toward mu I, which is what the
    // complementarity bound measures.
    if (converged_linear) sigma = 1.0;

    // ----- corrector -----
    for (int bix = 0; bix < nb; ++bix) {
      const arma::cx_mat xt = nt.ginv[bix] * dxa[bix] * nt.ginv[bix].t();
      const arma::cx_mat zt = nt.g[bix].t() * dza[bix] * nt.g[bix];
      const arma::cx_mat h = hermitize(xt * zt);
      const arma::vec& s = nt.sigma[bix];
      arma::cx_mat e(f.dims[bix], f.dims[bix]);
      for (int r = 0; r < f.dims[bix]; ++r) {
        for (int c2 = 0; c2 < f.dims[bix]; ++c2) {
          cx d = -h(r, c2);
          if (r == c2) d += sigma * mu - s(r) * s(r);
          e(r, c2) = d / (0.5 * (s(r) + s(c2)));
        }
      }
      rc[bix] = hermitize(nt.g[bix] * e * nt.g[bix].t());
    }
    arma::vec dy;
    std::vector<arma::cx_mat> dx, dz;
    double dtau = 0.0, dkap = 0.0;
    combined_step(rc, sigma * mu - it.tau * it.kappa - dtau_a * dkap_a,
                  dy, dx, dz, dtau, dkap);
    if (opts.verbose) {
      // Newton-equation residuals of the affine direction, for debugging.
      const arma::vec e1 = apply_a(dxa) - b * dtau_a + rp;
      std::vector<arma::cx_mat> atdya = apply_at(dya);
      double e2 = 0.0, e4 = 0.0;
      for (int bix = 0; bix < nb; ++bix) {
        e2 += frob(atdya[bix] + dza[bix] - f.c[bix] * dtau_a + rd[bix]);
        e4 += frob(dxa[bix] + nt.w[bix] * dza[bix] * nt.w[bix] + it.x[bix]);
      }
      const double e3 = dot_c(dxa) - arma::dot(b, dya) + dkap_a + rg;
      const double e5 = it.kappa * dtau_a + it.tau * dkap_a + it.tau * it.kappa;
      std::printf("   newton(aff): e1 %.2e e2 %.2e e3 %.2e e4 %.2e e5 %.2e "
                  "dtau %.2e alpha_a %.2e sigma %.2e\n",
                  m > 0 ? arma::norm(e1, 2) : 0.0, e2, e3, e4, e5, dtau_a,
                  alpha_a, sigma);
    }
    const double alpha = std::min(1.0, 0.99 * max_step(dx, dz, dtau, dkap));
    if (alpha < 1e-9) return finish(SolverResult::Status::NumericalFailure, iter);

    for (int bix = 0; bix < nb; ++bix) {
      it.x[bix] = hermitize(it.x[bix] + alpha * dx[bix]);
      it.z[bix] = hermitize(it.z[bix] + alpha * dz[bix]);
    }
    if (m > 0) it.y += alpha * dy;
    it.tau += alpha * dtau;
    it.kappa += alpha * dkap;
    res.iterations = iter + 1;
  }
  return finish(SolverResult::Status::MaxIter, opts.max_iter);
}

void dump_sdpa(const SdpProblem& p, const std::string& path) {
  // Real symmetric embedding: H -> [[Re, -Im],[Im, Re]] per block, written as
  // the SDPA-sparse dual pair  max <F0,Y> s.t. <Fi,Y> = ci, Y PSD.
  std::ofstream os(path);
  if (!os) throw std::runtime_error("dump_sdpa: cannot open " + path);
  std::vector<int> dims = p.dims_;
  std::vector<std::pair<int, int>> slack_of_row(p.rows_.size(), {-1, 0});
  for (size_t i = 0; i < p.rows_.size(); ++i) {
    if (p.rows_[i].kind != SdpProblem::RowKind::Eq) {
      dims.push_back(1);
      slack_of_row[i] = {static_cast<int>(dims.size()) - 1,
                         p.rows_[i].kind == SdpProblem::RowKind::Le ? 1 : -1};
    }
  }
  os << "* cfisac conic dump; complex Hermitian blocks in the real embedding\n";
  os << "* [[Re,-Im],[Im,Re]]; constraints <Fi,Y> = ci recover <A_i, X> = b_i\n";
  os << "* with X = (top-left + conj(bottom-right))/2 of Y/1, ci = 2*b_i.\n";
  const int m = static_cast<int>(p.rows_.size());
  os << m << " = mDIM\n" << dims.size() << " = nBLOCK\n";
  for (size_t i = 0; i < dims.size(); ++i) os << 2 * dims[i] << (i + 1 < dims.size() ? " " : "");
  os << " = bLOCKsTRUCT\n";
  for (int i = 0; i < m; ++i) os << 2.0 * p.rows_[i].rhs << (i + 1 < m ? " " : "");
  os << "\n";
  auto write_block = [&](int mat_index, int block, const arma::cx_mat& h) {
    const int n = static_cast<int>(h.n_rows);
    for (int r = 0; r < n; ++r) {
      for (int c = r; c < n; ++c) {
        const double re = h(r, c).real();
        const double im = h(r, c).imag();
        if (re != 0.0) {
          os << mat_index << ' ' << block + 1 << ' ' << r + 1 << ' ' << c + 1 << ' ' << re << '\n';
          os << mat_index << ' ' << block + 1 << ' ' << r + 1 + n << ' ' << c + 1 + n << ' ' << re << '\n';
        }
        if (im != 0.0 && r != c) {
          // upper-triangle entries of the off-diagonal Im blocks
          os << mat_index << ' ' << block + 1 << ' ' << r + 1 << ' ' << c + 1 + n << ' ' << -im << '\n';
          os << mat_index << ' ' << block + 1 << ' ' << c + 1 << ' ' << r + 1 + n << ' ' << im << '\n';
        }
      }
    }
  };
  // F0 = objective (minimization sign applied)
  {
    const double sgn = p.minimize_ ? 1.0 : -1.0;
    for (const auto& [id, c0] : p.objective_.coeff) {
      write_block(0, id, arma::cx_mat(sgn * hermitize(c0)));
    }
  }
  for (int i = 0; i < m; ++i) {
    for (const auto& [id, a] : p.rows_[i].coeff) write_block(i + 1, id, a);
    if (slack_of_row[i].first >= 0) {
      arma::cx_mat one(1, 1);
      one(0, 0) = slack_of_row[i].second;
      write_block(i + 1, slack_of_row[i].first, one);
    }
  }
}

}  // namespace cfisac::conic

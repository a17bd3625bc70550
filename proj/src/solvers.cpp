#include "hypokfem/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hypokfem/analysis.hpp"

namespace hypokfem {

namespace {

// ||A x - b|| / max(||b||, tiny); returns 0 for an exactly satisfied row.
double block_residual(const SparseOperator& A, std::span<const double> x,
                      std::span<const double> b) {
  std::vector<double> r = A.apply(x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  const double nr = norm2(r);
  if (nr == 0.0) return 0.0;
  return nr / std::max(norm2(b), 1e-30);
}

}  // namespace

DiscreteField solve_stationary_primal(const FunctionSpace& space,
                                      const HParams& p, const ScalarFn2& f,
                                      LinearSolveReport* report) {
  p.validate();
  const SparseOperator A = assemble_primal(space, p);
  const std::vector<double> b =
      assemble_rhs_h(space, f, p, FieldTag::MinusConstrained);
  DiscreteField u = make_field(space, FieldTag::MinusConstrained);
  const LinearSolveReport rep = solve(A, b, u.coeffs);
  if (report) *report = rep;
  return u;
}

KKTSolution solve_stationary_kkt(const FunctionSpace& space, const HParams& p,
                                 const ScalarFn2& target,
                                 const VectorFn* extra_flux) {
  p.validate();
  const long n = space.n_dofs;
  const auto& minus = space.minus_set;
  const auto& plus = space.plus_set;

  const SparseOperator a_full = assemble_primal_full(space, p);
  const SparseOperator astar_full = assemble_adjoint_full(space, p);
  const SparseOperator mh = assemble_h_mass(space, p);

  const SparseOperator a11 =
      restricted(a_full.scaled(p.alpha), minus, minus, true);
  const SparseOperator a12 = restricted(mh, minus, plus, false).scaled(-1.0);
  const SparseOperator a21 = restricted(mh, plus, minus, false);
  const SparseOperator a22 = restricted(astar_full, plus, plus, true);
  const SparseOperator sys = block_compose(&a11, &a12, &a21, &a22);

  const std::vector<double> bt =
      assemble_rhs_h(space, target, p, FieldTag::PlusConstrained, extra_flux);
  std::vector<double> b(2 * n, 0.0);
  std::copy(bt.begin(), bt.end(), b.begin() + n);

  KKTSolution out;
  out.U = make_field(space, FieldTag::MinusConstrained);
  out.Z = make_field(space, FieldTag::PlusConstrained);
  out.F = make_field(space, FieldTag::Free);

  std::vector<double> xy;
  out.report = solve(sys, b, xy, 1e-10);
  std::copy(xy.begin(), xy.begin() + n, out.U.coeffs.begin());
  std::copy(xy.begin() + n, xy.end(), out.Z.coeffs.begin());
  for (long i = 0; i < n; ++i) out.F.coeffs[i] = out.Z.coeffs[i] / p.alpha;

  // KKT residuals: primal row alpha A U - M_H Z, adjoint row
  // M_H U + A* Z - M_H d; the control row is exact by construction.
  std::vector<double> r1 = a11.apply(out.U.coeffs);
  const std::vector<double> s1 = a12.apply(out.Z.coeffs);
  for (long i = 0; i < n; ++i) r1[i] += s1[i];
  const double nr1 = norm2(r1);
  const double rel1 = nr1 == 0.0 ? 0.0 : nr1 / std::max(norm2(s1), 1e-30);
  std::vector<double> r2 = a22.apply(out.Z.coeffs);
  std::vector<double> s2 = a21.apply(out.U.coeffs);
  for (long i = 0; i < n; ++i) r2[i] += s2[i] - bt[i];
  const double nr2 = norm2(r2);
  const double rel2 =
      nr2 == 0.0 ? 0.0 : nr2 / std::max(norm2(bt), 1e-30);
  out.max_kkt_residual = std::max(rel1, rel2);

  out.cost = cost(out.U, out.F, target, p);
  return out;
}

KKTSolution solve_box_richardson(const FunctionSpace& space, const HParams& p,
                                 const ScalarFn2& target, BoxBounds bounds,
                                 double omega, double tol, long max_iter,
                                 long log_every, RichardsonLog* log,
                                 const VectorFn* extra_flux) {
  p.validate();
  if (!(omega > 0.0 && omega <= 1.0))
    throw std::invalid_argument("solve_box_richardson: omega in (0, 1]");
  if (!(bounds.lo <= bounds.hi))
    throw std::invalid_argument("solve_box_richardson: lo <= hi required");
  const long n = space.n_dofs;
  const auto& minus = space.minus_set;
  const auto& plus = space.plus_set;

  const Factorization fa(assemble_primal(space, p));
  const Factorization fz(assemble_adjoint(space, p));
  const SparseOperator mh = assemble_h_mass(space, p);
  const SparseOperator ml2 = assemble_l2_mass(space);
  const std::vector<double> bt =
      assemble_rhs_h(space, target, p, FieldTag::PlusConstrained, extra_flux);

  KKTSolution out;
  out.U = make_field(space, FieldTag::MinusConstrained);
  out.Z = make_field(space, FieldTag::PlusConstrained);
  out.F = make_field(space, FieldTag::Free);

  RichardsonLog local;
  RichardsonLog& lg = log ? *log : local;
  lg = RichardsonLog{};

  std::vector<double> zprev(n, 0.0), bdual(n), bprim(n), diff(n);
  for (long it = 1; it <= max_iter; ++it) {
    // dual solve driven by the previous primal state
    std::vector<double> mu = mh.apply(out.U.coeffs);
    for (long i = 0; i < n; ++i) bdual[i] = plus[i] ? 0.0 : bt[i] - mu[i];
    out.Z.coeffs = fz.solve(bdual);
    // nodal clamp of the control
    for (long i = 0; i < n; ++i)
      out.F.coeffs[i] =
          std::clamp(out.Z.coeffs[i] / p.alpha, bounds.lo, bounds.hi);
    // relax the primal state towards the F-driven solve
    std::vector<double> mf = mh.apply(out.F.coeffs);
    for (long i = 0; i < n; ++i) bprim[i] = minus[i] ? 0.0 : mf[i];
    const std::vector<double> w = fa.solve(bprim);
    for (long i = 0; i < n; ++i)
      out.U.coeffs[i] = (1.0 - omega) * out.U.coeffs[i] + omega * w[i];

    for (long i = 0; i < n; ++i) diff[i] = out.Z.coeffs[i] - zprev[i];
    const double inc = dot(diff, ml2.apply(diff));
    zprev = out.Z.coeffs;
    lg.iterations = it;
    lg.last_increment = inc;
    if (it % log_every == 0) lg.logged.push_back(inc);
    if (!std::isfinite(inc) || inc > 1e100)
      throw SolveFailure(
          "solve_box_richardson: diverged after " + std::to_string(it) +
          " iterations (squared dual increment = " + std::to_string(inc) +
          "); the undamped feedback gain exceeds the omega stability range");
    if (inc < tol) {
      lg.converged = true;
      break;
    }
  }
  if (!lg.converged)
    throw SolveFailure(
        "solve_box_richardson: " + std::to_string(max_iter) +
        " iterations exhausted, last squared dual increment = " +
        std::to_string(lg.last_increment));

  // distance from the coupled fixed point (informational)
  std::vector<double> mf = mh.apply(out.F.coeffs);
  for (long i = 0; i < n; ++i) bprim[i] = minus[i] ? 0.0 : mf[i];
  const SparseOperator a_res = assemble_primal(space, p);
  out.max_kkt_residual = block_residual(a_res, out.U.coeffs, bprim);
  out.cost = cost(out.U, out.F, target, p);
  return out;
}

namespace {

SparseOperator theta_operator(const FunctionSpace& space, const HParams& p,
                              double scale, bool unit_diag) {
  return restricted(
      added(assemble_h_mass(space, p), assemble_primal_full(space, p).scaled(scale)),
      space.minus_set, space.minus_set, unit_diag);
}

}  // namespace

ThetaScheme::ThetaScheme(const FunctionSpace& space, const HParams& p,
                         double dt, double theta)
    : dt_(dt),
      theta_(theta),
      rhs_op_(theta_operator(space, p, -(1.0 - theta) * dt, false)),
      lhs_(theta_operator(space, p, theta * dt, true)) {
  if (!(dt > 0.0) || theta < 0.0 || theta > 1.0)
    throw std::invalid_argument("ThetaScheme: dt > 0 and theta in [0, 1]");
}

void ThetaScheme::step(DiscreteField& u, std::span<const double> b_old,
                       std::span<const double> b_new) const {
  std::vector<double> rhs = rhs_op_.apply(u.coeffs);
  for (std::size_t i = 0; i < rhs.size(); ++i)
    rhs[i] += dt_ * (theta_ * b_new[i] + (1.0 - theta_) * b_old[i]);
  u.coeffs = lhs_.solve(rhs);
}

TimedepKKT solve_timedep_kkt(const FunctionSpace& space, const HParams& p,
                             const TimeTarget& target, double T, int K,
                             long max_space_time) {
  p.validate();
  if (K < 2) throw std::invalid_argument("solve_timedep_kkt: K >= 2 required");
  if (!(T > 0.0)) throw std::invalid_argument("solve_timedep_kkt: T > 0");
  const long n = space.n_dofs;
  if (K * n > max_space_time)
    throw std::invalid_argument(
        "solve_timedep_kkt: space-time size K*N = " + std::to_string(K * n) +
        " exceeds the cap " + std::to_string(max_space_time) +
        "; coarsen the grid or raise max_space_time");
  const double dt = T / K;
  const auto& minus = space.minus_set;
  const auto& plus = space.plus_set;

  const SparseOperator mh = assemble_h_mass(space, p);
  const SparseOperator fwd_diag =
      restricted(added(mh, assemble_primal_full(space, p).scaled(dt)), minus,
                 minus, true);
  const SparseOperator fwd_prev =
      restricted(mh, minus, minus, false).scaled(-1.0);
  const SparseOperator fwd_z =
      restricted(mh, minus, plus, false).scaled(-dt / p.alpha);
  const SparseOperator bwd_diag =
      restricted(added(mh, assemble_adjoint_full(space, p).scaled(dt)), plus,
                 plus, true);
  const SparseOperator bwd_next =
      restricted(mh, plus, plus, false).scaled(-1.0);
  const SparseOperator bwd_u = restricted(mh, plus, minus, false).scaled(dt);

  // unknown layout: U^1..U^K then Z^0..Z^{K-1}
  const long nu = static_cast<long>(K) * n;
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(K) *
                (fwd_diag.nnz() + bwd_diag.nnz() + 3 * mh.nnz()));
  auto scatter = [&](const SparseOperator& op, long ro, long co) {
    for (int r = 0; r < op.rows; ++r)
      for (int k = op.row_ptr[r]; k < op.row_ptr[r + 1]; ++k)
        trips.push_back({static_cast<int>(ro + r),
                         static_cast<int>(co + op.col_idx[k]), op.vals[k]});
  };
  std::vector<double> b(2 * nu, 0.0);
  for (int k = 1; k <= K; ++k) {
    const long ro = (k - 1) * n;
    scatter(fwd_diag, ro, ro);
    if (k >= 2) scatter(fwd_prev, ro, ro - n);
    if (k <= K - 1) scatter(fwd_z, ro, nu + static_cast<long>(k) * n);
  }
  for (int k = 0; k <= K - 1; ++k) {
    const long ro = nu + static_cast<long>(k) * n;
    scatter(bwd_diag, ro, ro);
    if (k <= K - 2) scatter(bwd_next, ro, ro + n);
    if (k >= 1) scatter(bwd_u, ro, static_cast<long>(k - 1) * n);
    const std::vector<double> bk = assemble_rhs_h(
        space, target(dt * k), p, FieldTag::PlusConstrained);
    for (long i = 0; i < n; ++i) b[ro + i] = dt * bk[i];
  }
  const SparseOperator sys = SparseOperator::from_triplets(
      static_cast<int>(2 * nu), static_cast<int>(2 * nu), std::move(trips));

  TimedepKKT out;
  std::vector<double> xy;
  out.report = solve(sys, b, xy, 1e-10);

  out.times.resize(K + 1);
  for (int k = 0; k <= K; ++k) out.times[k] = dt * k;
  out.U.assign(K + 1, make_field(space, FieldTag::MinusConstrained));
  out.Z.assign(K + 1, make_field(space, FieldTag::PlusConstrained));
  out.F.assign(K + 1, make_field(space, FieldTag::Free));
  for (int k = 1; k <= K; ++k)
    std::copy(xy.begin() + (k - 1) * n, xy.begin() + k * n,
              out.U[k].coeffs.begin());
  for (int k = 0; k <= K - 1; ++k)
    std::copy(xy.begin() + nu + k * n, xy.begin() + nu + (k + 1) * n,
              out.Z[k].coeffs.begin());
  for (int k = 0; k <= K; ++k)
    for (long i = 0; i < n; ++i)
      out.F[k].coeffs[i] = out.Z[k].coeffs[i] / p.alpha;

  double j = 0;
  for (int k = 1; k <= K; ++k) {
    const double track = h_norm_error(out.U[k], target(out.times[k]), p);
    const double ctrl = h_norm(out.F[k], p);
    j += dt * 0.5 * (track * track + p.alpha * ctrl * ctrl);
  }
  out.cost = j;
  return out;
}

}  // namespace hypokfem

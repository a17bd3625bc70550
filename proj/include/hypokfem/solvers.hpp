#pragma once

#include <functional>
#include <span>
#include <vector>

#include "hypokfem/assembly.hpp"
#include "hypokfem/linalg.hpp"
#include "hypokfem/manufactured.hpp"
#include "hypokfem/space.hpp"

namespace hypokfem {

// Steady transport-diffusion solve A U = (f, .)_H with inflow constraints.
DiscreteField solve_stationary_primal(const FunctionSpace& space,
                                      const HParams& p, const ScalarFn2& f,
                                      LinearSolveReport* report = nullptr);

struct KKTSolution {
  DiscreteField U, Z, F;
  double cost = 0;              // tracking-plus-control cost at the solution
  double max_kkt_residual = 0;  // worst relative residual of the KKT rows
  LinearSolveReport report;
};

// Coupled first-order optimality system for the steady control problem. The
// control is eliminated through alpha F = Z, leaving the 2N system
// [[alpha A, -M_H], [M_H, A*]] [U; Z] = [0; M_H d]. The optional extra_flux
// adds a raw gradient term to the dual right-hand side (used by manufactured
// cases whose dual data is only H^1-consistent).
KKTSolution solve_stationary_kkt(const FunctionSpace& space, const HParams& p,
                                 const ScalarFn2& target,
                                 const VectorFn* extra_flux = nullptr);

struct BoxBounds {
  double lo, hi;  // either may be infinite
};

struct RichardsonLog {
  long iterations = 0;
  bool converged = false;
  double last_increment = 0;           // squared L2 norm of the dual update
  std::vector<double> logged;          // increments captured every log_every
};

// Damped fixed-point iteration for box-constrained control: each sweep solves
// the dual equation with the previous state, clamps F = P_[lo,hi](Z/alpha)
// nodally, then relaxes U towards the primal solve driven by F.
KKTSolution solve_box_richardson(const FunctionSpace& space, const HParams& p,
                                 const ScalarFn2& target, BoxBounds bounds,
                                 double omega = 1e-3, double tol = 1e-10,
                                 long max_iter = 1000000, long log_every = 1000,
                                 RichardsonLog* log = nullptr,
                                 const VectorFn* extra_flux = nullptr);

// One-step theta scheme for the primal evolution
// (M_H + theta dt A) U^{n+1} = (M_H - (1-theta) dt A) U^n
//                              + dt (theta b^{n+1} + (1-theta) b^n),
// with b(t) the H-weighted, inflow-masked load vector.
class ThetaScheme {
 public:
  ThetaScheme(const FunctionSpace& space, const HParams& p, double dt,
              double theta);
  void step(DiscreteField& u, std::span<const double> b_old,
            std::span<const double> b_new) const;
  double dt() const { return dt_; }

 private:
  double dt_, theta_;
  SparseOperator rhs_op_;  // explicit part, inflow rows zeroed
  Factorization lhs_;
};

// Trajectories of the all-at-once space-time optimality system (implicit
// Euler forward and backward). U[0] = 0 and Z[K] = 0 exactly; F = Z/alpha.
struct TimedepKKT {
  std::vector<double> times;        // size K+1
  std::vector<DiscreteField> U, Z, F;
  double cost = 0;                  // right-rectangle discrete cost
  LinearSolveReport report;
};

using TimeTarget = std::function<ScalarFn2(double)>;

TimedepKKT solve_timedep_kkt(const FunctionSpace& space, const HParams& p,
                             const TimeTarget& target, double T, int K,
                             long max_space_time = 200000);

}  // namespace hypokfem

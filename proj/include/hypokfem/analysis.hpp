#pragma once

#include <string>
#include <vector>

#include "hypokfem/assembly.hpp"
#include "hypokfem/manufactured.hpp"
#include "hypokfem/space.hpp"

namespace hypokfem {

// Closed-form constants of the hypocoercive setup.
struct Constants {
  double lambda_min_M = 0, lambda_max_M = 0;
  double lambda_min_N = 0, lambda_max_N = 0;
  double c_eq_plus = 0;    // max(1, lambda_max(M))
  double delta_tilde = 0;  // explicit lower bound on the decay rate
};
Constants constants(const HParams& p, double x_max);

// ||w||_H^2 = ||w||^2 + ||sqrt(M) grad w||^2; error versions measure the
// difference against an analytic comparator (value + gradient).
double l2_norm(const DiscreteField& f);
double l2_error(const DiscreteField& f, const ScalarFn2& exact);
double h_norm(const DiscreteField& f, const HParams& p);
double h_norm_error(const DiscreteField& f, const ScalarFn2& exact,
                    const HParams& p);

// Triple norm: weighted outflow boundary trace (inflow for the dual
// variant), broken gradients of W and W_v, and the sigma-weighted
// grad(.)_v facet jump seminorm.
enum class NormVariant { Primal, Dual };
double triple_norm(const DiscreteField& f, NormVariant variant,
                   const HParams& p);
double triple_norm_error(const DiscreteField& f, const ScalarFn2& exact,
                         NormVariant variant, const HParams& p);

// E(U, F) = 1/2 ||U - target||_H^2 + alpha/2 ||F||_H^2.
double cost(const DiscreteField& u, const DiscreteField& f,
            const ScalarFn2& target, const HParams& p);

// Pairwise experimental orders of convergence; h must be strictly
// decreasing.
std::vector<double> eoc(const std::vector<double>& h,
                        const std::vector<double>& err);

// Decay diagnostics on a trajectory of H-norms sampled every dt: monotone
// flag (increases above 1e-12 fail) and the fitted rate delta of
// ||U||_H^2 ~ exp(-delta t).
struct DecayReport {
  bool monotone = false;
  double fitted_rate = 0;
};
DecayReport decay_report(const std::vector<double>& h_norms, double dt);

// CSV error table: h,dofs,err_H,err_triple,err_triple_dual,eoc_H,eoc_triple.
struct ErrorRow {
  double h = 0;
  int dofs = 0;
  double err_h = 0;
  double err_triple = 0;
  double err_triple_dual = 0;
};
void write_error_csv(const std::string& path,
                     const std::vector<ErrorRow>& rows,
                     const std::vector<std::string>& header_lines);

}  // namespace hypokfem

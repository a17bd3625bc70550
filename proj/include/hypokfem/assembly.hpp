#pragma once

#include <vector>

#include "hypokfem/elements.hpp"
#include "hypokfem/linalg.hpp"
#include "hypokfem/manufactured.hpp"
#include "hypokfem/mesh.hpp"
#include "hypokfem/space.hpp"

namespace hypokfem {

// Parameters of the hypocoercive formulation. M = eps*[[m^3, m^2],[m^2, m]]
// augments the L2 inner product; N = [[M12, M22/2],[M22/2, eps]] is the
// matrix controlling gradient coercivity.
struct HParams {
  double eps = 0.1;
  double m = 0.35;
  double c_sigma = 10.0;
  double alpha = 1.0;

  Sym2 M() const {
    return Sym2{eps * m * m * m, eps * m * m, eps * m};
  }
  Sym2 N() const {
    return Sym2{eps * m * m, 0.5 * eps * m, eps};
  }
  void validate() const;  // throws std::invalid_argument on bad parameters
};

// Plain L2 mass and the H inner product (w,phi) + (M grad w, grad phi).
// All matrices returned by the *_full and mass assemblers are unrestricted;
// constraints are applied afterwards through linalg restriction.
SparseOperator assemble_l2_mass(const FunctionSpace& space);
SparseOperator assemble_h_mass(const FunctionSpace& space, const HParams& p);

// Volume transport-diffusion form
//   sum_K (v W_x, Phi) + (grad(v W_x), M grad Phi) + eps (W_v, Phi_v)
//        + eps (grad W_v, M grad Phi_v),
// its facet stabilisation (gradient-jump transport term on interior + inflow
// facets, and the symmetric interior-penalty term in grad(.)_v on interior +
// v-boundary facets), and their sum. The adjoint volume form is the exact
// transpose of the primal one; the adjoint stabilisation places the
// transport jumps on the test function, treats Gamma^+ as its inflow (with
// the sign of the reversed transport -v), and adds the boundary H-product on
// its outflow Gamma^-, which restores the outflow trace lost in
// transposition. Both boundary terms vanish on the continuous adjoint
// solution, whose H-trace is constrained on Gamma^+ and whose outflow terms
// the transposed volume form carries explicitly.
SparseOperator assemble_primal_volume(const FunctionSpace&, const HParams&);
SparseOperator assemble_primal_stab(const FunctionSpace&, const HParams&);
SparseOperator assemble_primal_full(const FunctionSpace&, const HParams&);
SparseOperator assemble_adjoint_volume(const FunctionSpace&, const HParams&);
SparseOperator assemble_adjoint_stab(const FunctionSpace&, const HParams&);
SparseOperator assemble_adjoint_full(const FunctionSpace&, const HParams&);

// Constrained operators: rows/columns of the tag's constrained set are
// eliminated and replaced by a unit diagonal.
SparseOperator assemble_primal(const FunctionSpace&, const HParams&);
SparseOperator assemble_adjoint(const FunctionSpace&, const HParams&);

// b_i = (g, phi_i)_H = int g phi_i + (M grad g) . grad phi_i, plus an
// optional raw gradient flux int extra_flux . grad phi_i. Entries on the
// tag's constrained set are zeroed.
std::vector<double> assemble_rhs_h(const FunctionSpace& space,
                                   const ScalarFn2& g, const HParams& p,
                                   FieldTag tag,
                                   const VectorFn* extra_flux = nullptr);

// int over facets with the given label of (W^2 + grad W . M grad W) |v| ds,
// one-sided traces.
double boundary_h_seminorm(const DiscreteField& field, const HParams& p,
                           FacetLabel label);

// Affine cell geometry shared by assembly and error evaluation. Columns of J
// are the edge vectors (P1-P0, P2-P0); det > 0 for counterclockwise cells.
struct CellGeom {
  double j00, j01, j10, j11;
  double det;
  double i00, i01, i10, i11;  // inverse of J
};
CellGeom cell_geom(const Mesh& mesh, int c);

}  // namespace hypokfem

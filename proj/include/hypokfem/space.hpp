#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hypokfem/elements.hpp"
#include "hypokfem/mesh.hpp"

namespace hypokfem {

// Which essential constraint a coefficient vector respects. MinusConstrained
// fields vanish on the closure of Gamma^- u Gamma^0 (primal side),
// PlusConstrained on the closure of Gamma^+ u Gamma^0 (dual side). Corner
// and wall-midline nodes belong to both sets.
enum class FieldTag { Free, MinusConstrained, PlusConstrained };

struct FunctionSpace {
  const Mesh* mesh = nullptr;
  int degree = 0;
  LagrangeBasis basis;
  long n_dofs = 0;
  std::vector<int> cell_dofs;       // n_cells x dofs_per_cell
  std::vector<Vertex> dof_coords;
  std::vector<char> minus_set, plus_set;  // 0/1 masks, size n_dofs
  std::vector<char> free_mask;            // all zero, for FieldTag::Free

  explicit FunctionSpace(int deg) : degree(deg), basis(deg) {}
  int dofs_per_cell() const { return basis.size(); }
  std::span<const int> cell_global(int c) const {
    return {&cell_dofs[std::size_t(c) * dofs_per_cell()],
            std::size_t(dofs_per_cell())};
  }
  const std::vector<char>& constraint_mask(FieldTag tag) const;
};

FunctionSpace build_space(const Mesh& mesh, int degree);

struct DiscreteField {
  const FunctionSpace* space = nullptr;
  FieldTag tag = FieldTag::Free;
  std::vector<double> coeffs;
};

DiscreteField make_field(const FunctionSpace& space,
                         FieldTag tag = FieldTag::Free);

// Zero the coefficients of the tag's constrained DOFs and stamp the tag.
void apply_constraint(DiscreteField& f, FieldTag tag);

// Nodal (Lagrange) interpolant of g.
DiscreteField interpolate(const FunctionSpace& space,
                          const std::function<double(double, double)>& g);

// L2 projection of g; the projection mass solve is verified to a relative
// residual of 1e-10.
DiscreteField l2_project(const FunctionSpace& space,
                         const std::function<double(double, double)>& g);

// Clamp nodal coefficients into [lo, hi].
void nodal_project(DiscreteField& f, double lo, double hi);

// Value and gradient of the field at a reference point of a cell.
struct FieldValue {
  double val = 0, dx = 0, dv = 0;
};
FieldValue evaluate(const DiscreteField& f, int cell, double xref, double vref);

// CSV lines "dof_index,x,v,value".
void export_field_csv(const DiscreteField& f, std::ostream& os);

// Legacy ASCII VTK unstructured grid with vertex point data; title goes on
// the free-form description line (carries the run's config hash).
void export_field_vtk(const DiscreteField& f, const std::string& name,
                      const std::string& title, std::ostream& os);

}  // namespace hypokfem

#include "hypokfem/space.hpp"

#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

#include "hypokfem/linalg.hpp"

namespace hypokfem {

const std::vector<char>& FunctionSpace::constraint_mask(FieldTag tag) const {
  switch (tag) {
    case FieldTag::MinusConstrained: return minus_set;
    case FieldTag::PlusConstrained: return plus_set;
    case FieldTag::Free: break;
  }
  return free_mask;
}

FunctionSpace build_space(const Mesh& mesh, int degree) {
  if (degree < 2 || degree > 8)
    throw std::invalid_argument("build_space: degree must be in [2, 8]");
  FunctionSpace sp(degree);
  sp.mesh = &mesh;
  const int r = degree;
  const int per_edge = r - 1;
  const int per_cell_int = (r - 1) * (r - 2) / 2;

  const long n_vert = mesh.n_vertices();
  const long n_edge = mesh.n_facets();
  sp.n_dofs = n_vert + n_edge * per_edge + long(mesh.n_cells()) * per_cell_int;
  const long edge_base = n_vert;
  const long cell_base = n_vert + n_edge * per_edge;

  sp.cell_dofs.resize(std::size_t(mesh.n_cells()) * sp.dofs_per_cell());
  sp.dof_coords.resize(sp.n_dofs);

  const auto& ref_nodes = sp.basis.nodes();
  const auto& ents = sp.basis.entities();
  static const int edge_verts[3][2] = {{0, 1}, {1, 2}, {0, 2}};

  for (int c = 0; c < mesh.n_cells(); ++c) {
    const Cell& cell = mesh.cells[c];
    const Vertex& p0 = mesh.vertices[cell.v[0]];
    const Vertex& p1 = mesh.vertices[cell.v[1]];
    const Vertex& p2 = mesh.vertices[cell.v[2]];
    for (int i = 0; i < sp.dofs_per_cell(); ++i) {
      const NodeEntity& e = ents[i];
      long g = -1;
      if (e.dim == 0) {
        g = cell.v[e.index];
      } else if (e.dim == 1) {
        int la = edge_verts[e.index][0], lb = edge_verts[e.index][1];
        int ga = cell.v[la], gb = cell.v[lb];
        int fid = -1;
        // cell_facets stores facets of local edges (01),(12),(20)
        for (int le = 0; le < 3; ++le) {
          const Facet& f = mesh.facets[mesh.cell_facets[c][le]];
          auto mm = std::minmax(ga, gb);
          if (f.a == mm.first && f.b == mm.second) {
            fid = mesh.cell_facets[c][le];
            break;
          }
        }
        // position e.sub runs from local vertex la to lb; the facet stores
        // its dofs from the lower global vertex id to the higher.
        int pos = (ga < gb) ? e.sub : r - e.sub;
        g = edge_base + long(fid) * per_edge + (pos - 1);
      } else {
        g = cell_base + long(c) * per_cell_int + e.sub;
      }
      sp.cell_dofs[std::size_t(c) * sp.dofs_per_cell() + i] =
          static_cast<int>(g);
      const double xr = ref_nodes[i][0], vr = ref_nodes[i][1];
      sp.dof_coords[g] = {p0.x + (p1.x - p0.x) * xr + (p2.x - p0.x) * vr,
                          p0.v + (p1.v - p0.v) * xr + (p2.v - p0.v) * vr};
    }
  }

  const double tol = 1e-12 * std::max(mesh.x_max, 1.0);
  sp.free_mask.assign(sp.n_dofs, 0);
  sp.minus_set.assign(sp.n_dofs, 0);
  sp.plus_set.assign(sp.n_dofs, 0);
  for (long g = 0; g < sp.n_dofs; ++g) {
    const double x = sp.dof_coords[g].x, v = sp.dof_coords[g].v;
    const bool top_bottom = std::abs(v - 1.0) <= tol || std::abs(v + 1.0) <= tol;
    const bool left = std::abs(x + mesh.x_max) <= tol;
    const bool right = std::abs(x - mesh.x_max) <= tol;
    if (top_bottom || (left && v >= -tol) || (right && v <= tol))
      sp.minus_set[g] = 1;
    if (top_bottom || (left && v <= tol) || (right && v >= -tol))
      sp.plus_set[g] = 1;
  }
  return sp;
}

DiscreteField make_field(const FunctionSpace& space, FieldTag tag) {
  DiscreteField f;
  f.space = &space;
  f.tag = tag;
  f.coeffs.assign(space.n_dofs, 0.0);
  return f;
}

void apply_constraint(DiscreteField& f, FieldTag tag) {
  f.tag = tag;
  if (tag == FieldTag::Free) return;
  const auto& mask = f.space->constraint_mask(tag);
  for (long g = 0; g < f.space->n_dofs; ++g)
    if (mask[g]) f.coeffs[g] = 0.0;
}

DiscreteField interpolate(const FunctionSpace& space,
                          const std::function<double(double, double)>& g) {
  DiscreteField f = make_field(space);
  for (long i = 0; i < space.n_dofs; ++i)
    f.coeffs[i] = g(space.dof_coords[i].x, space.dof_coords[i].v);
  return f;
}

DiscreteField l2_project(const FunctionSpace& space,
                         const std::function<double(double, double)>& g) {
  const Mesh& mesh = *space.mesh;
  const QuadRule rule = triangle_rule(2 * space.degree + 2);
  std::vector<std::array<double, 2>> pts(rule.size());
  for (int q = 0; q < rule.size(); ++q) pts[q] = {rule.x[q], rule.y[q]};
  const Tabulation tab = tabulate(space.basis, pts);

  const int nd = space.dofs_per_cell();
  std::vector<Triplet> trips;
  trips.reserve(std::size_t(mesh.n_cells()) * nd * nd);
  std::vector<double> rhs(space.n_dofs, 0.0);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const Cell& cell = mesh.cells[c];
    const Vertex& p0 = mesh.vertices[cell.v[0]];
    const Vertex& p1 = mesh.vertices[cell.v[1]];
    const Vertex& p2 = mesh.vertices[cell.v[2]];
    const double j11 = p1.x - p0.x, j12 = p2.x - p0.x;
    const double j21 = p1.v - p0.v, j22 = p2.v - p0.v;
    const double detj = j11 * j22 - j12 * j21;
    auto dofs = space.cell_global(c);
    for (int q = 0; q < rule.size(); ++q) {
      const double w = rule.w[q] * std::abs(detj);
      const double x = p0.x + j11 * rule.x[q] + j12 * rule.y[q];
      const double v = p0.v + j21 * rule.x[q] + j22 * rule.y[q];
      const double gv = g(x, v);
      for (int i = 0; i < nd; ++i) {
        rhs[dofs[i]] += w * gv * tab.v(q, i);
        for (int j = 0; j < nd; ++j)
          trips.push_back({dofs[i], dofs[j], w * tab.v(q, i) * tab.v(q, j)});
      }
    }
  }
  SparseOperator mass = SparseOperator::from_triplets(
      static_cast<int>(space.n_dofs), static_cast<int>(space.n_dofs),
      std::move(trips));
  DiscreteField f = make_field(space);
  LinearSolveReport rep = solve(mass, rhs, f.coeffs);
  if (rep.rel_residual > 1e-10)
    throw SolveFailure("l2_project: mass solve residual above 1e-10");
  return f;
}

void nodal_project(DiscreteField& f, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("nodal_project: lo > hi");
  for (double& c : f.coeffs) c = std::min(std::max(c, lo), hi);
}

FieldValue evaluate(const DiscreteField& f, int cell, double xref,
                    double vref) {
  const FunctionSpace& sp = *f.space;
  const Mesh& mesh = *sp.mesh;
  const int nd = sp.dofs_per_cell();
  std::vector<double> val(nd), dx(nd), dy(nd);
  sp.basis.eval(xref, vref, val.data(), dx.data(), dy.data(), nullptr, nullptr,
                nullptr);
  const Cell& cellv = mesh.cells[cell];
  const Vertex& p0 = mesh.vertices[cellv.v[0]];
  const Vertex& p1 = mesh.vertices[cellv.v[1]];
  const Vertex& p2 = mesh.vertices[cellv.v[2]];
  const double j11 = p1.x - p0.x, j12 = p2.x - p0.x;
  const double j21 = p1.v - p0.v, j22 = p2.v - p0.v;
  const double det = j11 * j22 - j12 * j21;
  // rows of J^{-T}
  const double a11 = j22 / det, a12 = -j21 / det;
  const double a21 = -j12 / det, a22 = j11 / det;
  FieldValue out;
  auto dofs = sp.cell_global(cell);
  for (int i = 0; i < nd; ++i) {
    const double c = f.coeffs[dofs[i]];
    out.val += c * val[i];
    out.dx += c * (a11 * dx[i] + a12 * dy[i]);
    out.dv += c * (a21 * dx[i] + a22 * dy[i]);
  }
  return out;
}

void export_field_csv(const DiscreteField& f, std::ostream& os) {
  os << "dof_index,x,v,value\n";
  char buf[160];
  for (long i = 0; i < f.space->n_dofs; ++i) {
    std::snprintf(buf, sizeof buf, "%ld,%.16e,%.16e,%.16e\n", i,
                  f.space->dof_coords[i].x, f.space->dof_coords[i].v,
                  f.coeffs[i]);
    os << buf;
  }
}

void export_field_vtk(const DiscreteField& f, const std::string& name,
                      const std::string& title, std::ostream& os) {
  const Mesh& mesh = *f.space->mesh;
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\n";
  os << "DATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << mesh.n_vertices() << " double\n";
  char buf[160];
  for (const Vertex& p : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "%.16e %.16e 0.0\n", p.x, p.v);
    os << buf;
  }
  os << "CELLS " << mesh.n_cells() << " " << 4 * mesh.n_cells() << "\n";
  for (const Cell& c : mesh.cells)
    os << "3 " << c.v[0] << " " << c.v[1] << " " << c.v[2] << "\n";
  os << "CELL_TYPES " << mesh.n_cells() << "\n";
  for (int c = 0; c < mesh.n_cells(); ++c) os << "5\n";
  os << "POINT_DATA " << mesh.n_vertices() << "\n";
  os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  // vertex DOFs are numbered first and coincide with mesh vertices
  for (int i = 0; i < mesh.n_vertices(); ++i) {
    std::snprintf(buf, sizeof buf, "%.16e\n", f.coeffs[i]);
    os << buf;
  }
}

}  // namespace hypokfem

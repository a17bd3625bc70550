#include "hypokfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

namespace hypokfem {

const char* to_string(FacetLabel l) {
  switch (l) {
    case FacetLabel::Interior: return "interior";
    case FacetLabel::GammaMinus: return "gamma_minus";
    case FacetLabel::GammaPlus: return "gamma_plus";
    case FacetLabel::GammaZero: return "gamma_zero";
  }
  return "?";
}

double Mesh::h_max() const {
  double h = 0;
  for (double d : cell_h) h = std::max(h, d);
  return h;
}

double Mesh::cell_area(int c) const {
  const Vertex& p0 = vertices[cells[c].v[0]];
  const Vertex& p1 = vertices[cells[c].v[1]];
  const Vertex& p2 = vertices[cells[c].v[2]];
  return 0.5 * ((p1.x - p0.x) * (p2.v - p0.v) - (p2.x - p0.x) * (p1.v - p0.v));
}

FacetLabel classify_boundary_point(double x, double v, double x_max) {
  const double tol = 1e-12 * std::max(x_max, 1.0);
  if (std::abs(v - 1.0) <= tol || std::abs(v + 1.0) <= tol)
    return FacetLabel::GammaZero;
  if (std::abs(x + x_max) <= tol)
    return v >= 0.0 ? FacetLabel::GammaMinus : FacetLabel::GammaPlus;
  if (std::abs(x - x_max) <= tol)
    return v <= 0.0 ? FacetLabel::GammaMinus : FacetLabel::GammaPlus;
  throw std::invalid_argument("classify_boundary_point: point not on boundary");
}

Mesh make_rect_mesh(int nx, int nv, double x_max) {
  if (nx < 1 || nv < 1) throw std::invalid_argument("make_rect_mesh: n < 1");
  if (x_max <= 0) throw std::invalid_argument("make_rect_mesh: x_max <= 0");
  Mesh m;
  m.x_max = x_max;
  m.nx = nx;
  m.nv = nv;

  const double dx = 2.0 * x_max / nx, dv = 2.0 / nv;
  m.vertices.reserve((nx + 1) * (nv + 1));
  for (int j = 0; j <= nv; ++j)
    for (int i = 0; i <= nx; ++i)
      m.vertices.push_back({-x_max + i * dx, -1.0 + j * dv});
  auto vid = [&](int i, int j) { return j * (nx + 1) + i; };

  m.cells.reserve(2 * nx * nv);
  for (int j = 0; j < nv; ++j)
    for (int i = 0; i < nx; ++i) {
      int ll = vid(i, j), lr = vid(i + 1, j);
      int ul = vid(i, j + 1), ur = vid(i + 1, j + 1);
      m.cells.push_back({ll, lr, ur});  // below the ll->ur diagonal
      m.cells.push_back({ll, ur, ul});  // above it
    }

  m.cell_h.resize(m.n_cells());
  for (int c = 0; c < m.n_cells(); ++c) {
    double h = 0;
    for (int e = 0; e < 3; ++e) {
      const Vertex& p = m.vertices[m.cells[c].v[e]];
      const Vertex& q = m.vertices[m.cells[c].v[(e + 1) % 3]];
      h = std::max(h, std::hypot(q.x - p.x, q.v - p.v));
    }
    m.cell_h[c] = h;
  }

  std::map<std::pair<int, int>, int> edge_of;
  m.cell_facets.resize(m.n_cells());
  for (int c = 0; c < m.n_cells(); ++c) {
    for (int e = 0; e < 3; ++e) {
      int a = m.cells[c].v[e], b = m.cells[c].v[(e + 1) % 3];
      auto key = std::minmax(a, b);
      auto it = edge_of.find(key);
      if (it == edge_of.end()) {
        Facet f;
        f.a = key.first;
        f.b = key.second;
        f.cell0 = c;
        const Vertex& p = m.vertices[a];
        const Vertex& q = m.vertices[b];
        double tx = q.x - p.x, tv = q.v - p.v;
        f.len = std::hypot(tx, tv);
        // Outward normal of the directed edge a->b of a CCW triangle.
        f.nx = tv / f.len;
        f.nv = -tx / f.len;
        int id = m.n_facets();
        m.facets.push_back(f);
        edge_of.emplace(key, id);
        m.cell_facets[c][e] = id;
      } else {
        m.facets[it->second].cell1 = c;
        m.cell_facets[c][e] = it->second;
      }
    }
  }

  for (Facet& f : m.facets) {
    if (f.cell1 >= 0) {
      f.h_e = 0.5 * (m.cell_h[f.cell0] + m.cell_h[f.cell1]);
      f.label = FacetLabel::Interior;
    } else {
      f.h_e = m.cell_h[f.cell0];
      const Vertex& p = m.vertices[f.a];
      const Vertex& q = m.vertices[f.b];
      f.label = classify_boundary_point(0.5 * (p.x + q.x), 0.5 * (p.v + q.v),
                                        x_max);
    }
  }
  return m;
}

double facet_sigma(const Facet& f, int degree, double c_sigma) {
  return c_sigma * degree * degree / f.h_e;
}

void dump_mesh(const Mesh& mesh, std::ostream& os) {
  for (const Vertex& p : mesh.vertices) os << "v " << p.x << " " << p.v << "\n";
  for (const Cell& c : mesh.cells)
    os << "c " << c.v[0] << " " << c.v[1] << " " << c.v[2] << "\n";
  for (const Facet& f : mesh.facets)
    os << "f " << f.a << " " << f.b << " " << to_string(f.label) << "\n";
}

}  // namespace hypokfem

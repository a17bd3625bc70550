#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace hypokfem {

// Boundary decomposition of the rectangle (-x_max,x_max) x (-1,1) for the
// transport field (v, 0): inflow Gamma^- (left wall v>0, right wall v<0),
// outflow Gamma^+ (left wall v<0, right wall v>0), characteristic Gamma^0
// (top and bottom, v = +-1).
enum class FacetLabel { Interior, GammaMinus, GammaPlus, GammaZero };

const char* to_string(FacetLabel l);

struct Vertex {
  double x = 0, v = 0;
};

struct Cell {
  std::array<int, 3> v{};  // counter-clockwise
};

struct Facet {
  int a = -1, b = -1;        // endpoint vertex ids, a < b
  int cell0 = -1, cell1 = -1;  // cell1 = -1 on the boundary
  double nx = 0, nv = 0;     // unit normal pointing out of cell0
  double len = 0;
  double h_e = 0;            // mean of adjacent cell diameters
  FacetLabel label = FacetLabel::Interior;
};

struct Mesh {
  double x_max = 1.0;
  int nx = 0, nv = 0;
  std::vector<Vertex> vertices;
  std::vector<Cell> cells;
  std::vector<Facet> facets;
  std::vector<double> cell_h;                    // cell diameters
  std::vector<std::array<int, 3>> cell_facets;   // per local edge (01),(12),(20)

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_cells() const { return static_cast<int>(cells.size()); }
  int n_facets() const { return static_cast<int>(facets.size()); }
  double h_max() const;
  double cell_area(int c) const;
};

// Structured triangulation of (-x_max,x_max) x (-1,1) with nx-by-nv quads,
// each split along the bottom-left to top-right diagonal.
Mesh make_rect_mesh(int nx, int nv, double x_max = 1.0);

// Classify a point on the boundary of the rectangle; throws if the point is
// not on the boundary (tolerance 1e-12 relative to the domain size).
FacetLabel classify_boundary_point(double x, double v, double x_max);

// Interior-penalty weight sigma = c_sigma * r^2 / h_e for a facet.
double facet_sigma(const Facet& f, int degree, double c_sigma);

// Plain-text dump: lines "v x y", "c i j k", "f i j label".
void dump_mesh(const Mesh& mesh, std::ostream& os);

}  // namespace hypokfem

#include "doctest.h"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "hypokfem/mesh.hpp"

using namespace hypokfem;

TEST_CASE("structured mesh has the expected entity counts") {
  for (int n : {1, 2, 4}) {
    const Mesh mesh = make_rect_mesh(n, n);
    CHECK(mesh.n_vertices() == (n + 1) * (n + 1));
    CHECK(mesh.n_cells() == 2 * n * n);
    // edges of a triangulated n x n quad grid
    CHECK(mesh.n_facets() == 2 * n * (n + 1) + n * n);
    double area = 0;
    for (int c = 0; c < mesh.n_cells(); ++c) {
      CHECK(mesh.cell_area(c) > 0);
      area += mesh.cell_area(c);
    }
    CHECK(area == doctest::Approx(4.0).epsilon(1e-13));
    CHECK(mesh.h_max() == doctest::Approx(std::sqrt(8.0) / n).epsilon(1e-13));
  }
  const Mesh wide = make_rect_mesh(4, 2, 3.0);
  CHECK(wide.x_max == doctest::Approx(3.0));
  double area = 0;
  for (int c = 0; c < wide.n_cells(); ++c) area += wide.cell_area(c);
  CHECK(area == doctest::Approx(12.0).epsilon(1e-13));
  CHECK_THROWS_AS(make_rect_mesh(0, 2), std::invalid_argument);
  CHECK_THROWS_AS(make_rect_mesh(2, 2, -1.0), std::invalid_argument);
}

TEST_CASE("cells are counterclockwise and facets consistent") {
  const Mesh mesh = make_rect_mesh(3, 3);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto& cell = mesh.cells[c];
    const Vertex& a = mesh.vertices[cell.v[0]];
    const Vertex& b = mesh.vertices[cell.v[1]];
    const Vertex& d = mesh.vertices[cell.v[2]];
    const double twice_area =
        (b.x - a.x) * (d.v - a.v) - (d.x - a.x) * (b.v - a.v);
    CHECK(twice_area > 0);
    CHECK(mesh.cell_area(c) == doctest::Approx(0.5 * twice_area));
    // cell_facets maps local edges (01), (12), (20) to facet ids
    for (int le = 0; le < 3; ++le) {
      const int f = mesh.cell_facets[c][le];
      const int va = cell.v[le], vb = cell.v[(le + 1) % 3];
      CHECK(mesh.facets[f].a == std::min(va, vb));
      CHECK(mesh.facets[f].b == std::max(va, vb));
      CHECK((mesh.facets[f].cell0 == c || mesh.facets[f].cell1 == c));
    }
  }
  for (const Facet& f : mesh.facets) {
    const Vertex& a = mesh.vertices[f.a];
    const Vertex& b = mesh.vertices[f.b];
    CHECK(f.len == doctest::Approx(std::hypot(b.x - a.x, b.v - a.v)));
    // unit normal perpendicular to the edge
    CHECK(std::hypot(f.nx, f.nv) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(std::abs(f.nx * (b.x - a.x) + f.nv * (b.v - a.v)) < 1e-13);
    CHECK(f.h_e > 0);
    if (f.label == FacetLabel::Interior) {
      CHECK(f.cell1 >= 0);
    } else {
      CHECK(f.cell1 == -1);
    }
    // normal points out of cell0: the centroid of cell0 lies behind the facet
    const auto& cell = mesh.cells[f.cell0];
    const double cx =
        (mesh.vertices[cell.v[0]].x + mesh.vertices[cell.v[1]].x +
         mesh.vertices[cell.v[2]].x) /
        3.0;
    const double cv =
        (mesh.vertices[cell.v[0]].v + mesh.vertices[cell.v[1]].v +
         mesh.vertices[cell.v[2]].v) /
        3.0;
    const double mx = 0.5 * (a.x + b.x), mv = 0.5 * (a.v + b.v);
    CHECK((mx - cx) * f.nx + (mv - cv) * f.nv > 0);
  }
}

TEST_CASE("boundary facets carry the transport-splitting labels") {
  const Mesh mesh = make_rect_mesh(4, 4);
  std::map<FacetLabel, int> count;
  for (const Facet& f : mesh.facets) {
    ++count[f.label];
    if (f.label == FacetLabel::Interior) continue;
    const Vertex& a = mesh.vertices[f.a];
    const Vertex& b = mesh.vertices[f.b];
    const double mx = 0.5 * (a.x + b.x), mv = 0.5 * (a.v + b.v);
    if (f.label == FacetLabel::GammaZero) {
      CHECK(std::abs(mv) == doctest::Approx(1.0));
    } else {
      CHECK(std::abs(mx) == doctest::Approx(1.0));
      // inflow where v . n_x < 0, outflow where v . n_x > 0
      const double vn = mv * f.nx;
      if (f.label == FacetLabel::GammaMinus) CHECK(vn < 0);
      if (f.label == FacetLabel::GammaPlus) CHECK(vn > 0);
    }
  }
  // per wall: half the v-edges inflow, half outflow; 4 + 4 top/bottom edges
  CHECK(count[FacetLabel::GammaMinus] == 4);
  CHECK(count[FacetLabel::GammaPlus] == 4);
  CHECK(count[FacetLabel::GammaZero] == 8);
  CHECK(count[FacetLabel::Interior] == mesh.n_facets() - 16);

  CHECK(std::string(to_string(FacetLabel::GammaMinus)) != "");
}

TEST_CASE("boundary point classification") {
  CHECK(classify_boundary_point(-1.0, 0.5, 1.0) == FacetLabel::GammaMinus);
  CHECK(classify_boundary_point(1.0, -0.5, 1.0) == FacetLabel::GammaMinus);
  CHECK(classify_boundary_point(-1.0, -0.5, 1.0) == FacetLabel::GammaPlus);
  CHECK(classify_boundary_point(1.0, 0.5, 1.0) == FacetLabel::GammaPlus);
  CHECK(classify_boundary_point(0.3, 1.0, 1.0) == FacetLabel::GammaZero);
  CHECK(classify_boundary_point(-0.3, -1.0, 1.0) == FacetLabel::GammaZero);
  CHECK(classify_boundary_point(-2.0, 0.25, 2.0) == FacetLabel::GammaMinus);
  CHECK_THROWS_AS(classify_boundary_point(0.0, 0.0, 1.0),
                  std::invalid_argument);
}

TEST_CASE("interior-penalty weight") {
  Facet f;
  f.h_e = 0.5;
  CHECK(facet_sigma(f, 2, 10.0) == doctest::Approx(80.0));
  f.h_e = 0.25;
  CHECK(facet_sigma(f, 4, 10.0) == doctest::Approx(640.0));
}

TEST_CASE("mesh dump lists vertices, cells, and facets") {
  const Mesh mesh = make_rect_mesh(2, 2);
  std::ostringstream os;
  dump_mesh(mesh, os);
  int nv = 0, nc = 0, nf = 0;
  std::istringstream in(os.str());
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("v ", 0) == 0) ++nv;
    if (line.rfind("c ", 0) == 0) ++nc;
    if (line.rfind("f ", 0) == 0) ++nf;
  }
  CHECK(nv == mesh.n_vertices());
  CHECK(nc == mesh.n_cells());
  CHECK(nf == mesh.n_facets());
}

#pragma once

#include <array>
#include <vector>

namespace hypokfem {

// Quadrature rule on the reference triangle {(x,y) : x,y >= 0, x+y <= 1}
// or on the reference segment [0,1] (y empty). All weights positive.
struct QuadRule {
  std::vector<double> x, y, w;
  int exactness = 0;
  int size() const { return static_cast<int>(w.size()); }
};

// Conical-product Gauss rule, exact for all polynomials of total degree
// <= exactness. Weights sum to 1/2. Throws for exactness < 0 or > 40.
QuadRule triangle_rule(int exactness);

// Gauss-Legendre on [0,1], exact to the given degree. Weights sum to 1.
QuadRule edge_rule(int exactness);

// Entity a reference node sits on: dim 0 = vertex (index = which corner),
// dim 1 = edge (index = local edge, sub = 1..r-1 position along the edge in
// local vertex order), dim 2 = cell interior (sub = running counter).
struct NodeEntity {
  int dim = 2;
  int index = 0;
  int sub = 0;
};

// Equispaced Lagrange basis of degree r on the reference triangle with
// vertices (0,0), (1,0), (0,1). Local edges: 0 = (v0,v1), 1 = (v1,v2),
// 2 = (v0,v2). Node order: vertices, edge nodes (per edge, from the lower
// local vertex to the higher), then interior nodes.
class LagrangeBasis {
public:
  explicit LagrangeBasis(int degree);

  int degree() const { return degree_; }
  int size() const { return ndof_; }
  const std::vector<std::array<double, 2>>& nodes() const { return nodes_; }
  const std::vector<NodeEntity>& entities() const { return entities_; }

  // Values and derivatives of every basis function at (x, y). Output arrays
  // must hold size() entries; any pointer may be null to skip that quantity.
  void eval(double x, double y, double* val, double* dx, double* dy,
            double* dxx, double* dxy, double* dyy) const;

private:
  int degree_ = 0;
  int ndof_ = 0;
  std::vector<std::array<double, 2>> nodes_;
  std::vector<NodeEntity> entities_;
  std::vector<std::array<int, 2>> expo_;  // monomial exponents
  std::vector<double> coef_;              // ndof x ndof, coef_[k*ndof+i]: monomial k of phi_i
};

// Basis values/derivatives tabulated at a batch of points; row-major
// [point][dof] layout.
struct Tabulation {
  int npts = 0, ndofs = 0;
  std::vector<double> val, dx, dy, dxx, dxy, dyy;
  double v(int q, int i) const { return val[q * ndofs + i]; }
  double gx(int q, int i) const { return dx[q * ndofs + i]; }
  double gy(int q, int i) const { return dy[q * ndofs + i]; }
  double hxx(int q, int i) const { return dxx[q * ndofs + i]; }
  double hxy(int q, int i) const { return dxy[q * ndofs + i]; }
  double hyy(int q, int i) const { return dyy[q * ndofs + i]; }
};

Tabulation tabulate(const LagrangeBasis& basis,
                    const std::vector<std::array<double, 2>>& pts);

// Tabulation at the points of a quadrature rule (segment rules use y = 0).
Tabulation tabulate(const LagrangeBasis& basis, const QuadRule& rule);

// Symmetric 2x2 matrix [[a11, a12], [a12, a22]].
struct Sym2 {
  double a11 = 0, a12 = 0, a22 = 0;
};

struct Eig2 {
  double lam_min = 0, lam_max = 0;
  std::array<double, 2> vec_min{}, vec_max{};
};

// Closed-form symmetric 2x2 eigendecomposition; lam_min <= lam_max, unit
// orthogonal eigenvectors.
Eig2 eig_sym_2x2(const Sym2& s);

// Matrix square root of a PSD symmetric 2x2 matrix via eigendecomposition;
// negative eigenvalues (roundoff) are clamped to zero.
Sym2 sqrt_psd_2x2(const Sym2& s);

inline std::array<double, 2> apply_sym2(const Sym2& m, double gx, double gy) {
  return {m.a11 * gx + m.a12 * gy, m.a12 * gx + m.a22 * gy};
}

inline double quad_form(const Sym2& m, double gx, double gy) {
  return m.a11 * gx * gx + 2.0 * m.a12 * gx * gy + m.a22 * gy * gy;
}

}  // namespace hypokfem

#include "doctest.h"

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "hypokfem/assembly.hpp"

using namespace hypokfem;

namespace {

double max_entry_diff(const SparseOperator& a, const SparseOperator& b) {
  REQUIRE(a.rows == b.rows);
  REQUIRE(a.cols == b.cols);
  double worst = 0;
  for (int r = 0; r < a.rows; ++r) {
    for (int k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k)
      worst = std::max(worst,
                       std::abs(a.vals[k] - b.coeff(r, a.col_idx[k])));
    for (int k = b.row_ptr[r]; k < b.row_ptr[r + 1]; ++k)
      worst = std::max(worst,
                       std::abs(b.vals[k] - a.coeff(r, b.col_idx[k])));
  }
  return worst;
}

// bump (1-x^2)^2 (1-v^2)^2: vanishes with its gradient on the whole boundary,
// lies in P8, so a degree-8 space represents it exactly
Deriv2 bump(double x, double v) {
  const double px = (1 - x * x) * (1 - x * x), qv = (1 - v * v) * (1 - v * v);
  const double dpx = -4 * x * (1 - x * x), dqv = -4 * v * (1 - v * v);
  const double ddpx = 12 * x * x - 4, ddqv = 12 * v * v - 4;
  Deriv2 d;
  d.val = px * qv;
  d.dx = dpx * qv;
  d.dv = px * dqv;
  d.dxx = ddpx * qv;
  d.dxv = dpx * dqv;
  d.dvv = px * ddqv;
  return d;
}

// f = K u = v u_x - eps u_vv for the bump, with first derivatives
ScalarFn2 bump_forcing(double eps) {
  return [eps](double x, double v) {
    const double px = (1 - x * x) * (1 - x * x),
                 qv = (1 - v * v) * (1 - v * v);
    const double dpx = -4 * x * (1 - x * x), dqv = -4 * v * (1 - v * v);
    const double ddpx = 12 * x * x - 4, ddqv = 12 * v * v - 4;
    const double dddqv = 24 * v;
    Deriv2 d;
    d.val = v * dpx * qv - eps * px * ddqv;
    d.dx = v * ddpx * qv - eps * dpx * ddqv;
    d.dv = dpx * qv + v * dpx * dqv - eps * px * dddqv;
    return d;
  };
}

// g = K* z = -v z_x - eps z_vv for the bump
ScalarFn2 bump_adjoint_forcing(double eps) {
  return [eps](double x, double v) {
    const double px = (1 - x * x) * (1 - x * x),
                 qv = (1 - v * v) * (1 - v * v);
    const double dpx = -4 * x * (1 - x * x), dqv = -4 * v * (1 - v * v);
    const double ddpx = 12 * x * x - 4, ddqv = 12 * v * v - 4;
    const double dddqv = 24 * v;
    Deriv2 d;
    d.val = -v * dpx * qv - eps * px * ddqv;
    d.dx = -v * ddpx * qv - eps * dpx * ddqv;
    d.dv = -dpx * qv - v * dpx * dqv - eps * px * dddqv;
    return d;
  };
}

std::vector<double> residual(const SparseOperator& a,
                             const std::vector<double>& coeffs,
                             const std::vector<double>& b) {
  std::vector<double> r = a.apply(coeffs);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  return r;
}

double max_abs(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("parameter validation") {
  HParams p;
  CHECK_NOTHROW(p.validate());
  p.m = 0.0;  // non-hypocoercive mode is allowed
  CHECK_NOTHROW(p.validate());
  p.eps = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = HParams{};
  p.m = -0.1;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = HParams{};
  p.c_sigma = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = HParams{};
  p.alpha = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);

  const Sym2 M = HParams{}.M();
  CHECK(M.a11 == doctest::Approx(0.1 * 0.35 * 0.35 * 0.35));
  CHECK(M.a12 == doctest::Approx(0.1 * 0.35 * 0.35));
  CHECK(M.a22 == doctest::Approx(0.1 * 0.35));
}

TEST_CASE("mass matrices: symmetry, positivity, reduction at m = 0") {
  const Mesh mesh = make_rect_mesh(4, 4);
  const FunctionSpace space = build_space(mesh, 2);
  HParams p;
  const SparseOperator ml2 = assemble_l2_mass(space);
  const SparseOperator mh = assemble_h_mass(space, p);

  CHECK(max_entry_diff(ml2, ml2.transposed()) == 0.0);
  // the M-weighted gradient pairing rounds asymmetrically at the ulp level
  CHECK(max_entry_diff(mh, mh.transposed()) < 1e-15);

  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> w(space.n_dofs);
  for (int trial = 0; trial < 10; ++trial) {
    for (double& wi : w) wi = unif(rng);
    double ql2 = 0, qh = 0;
    const std::vector<double> l2w = ml2.apply(w);
    const std::vector<double> hw = mh.apply(w);
    for (long i = 0; i < space.n_dofs; ++i) {
      ql2 += w[i] * l2w[i];
      qh += w[i] * hw[i];
    }
    CHECK(ql2 > 0);
    // the H product dominates L2
    CHECK(qh >= ql2 * (1 - 1e-12));
  }

  // constant-1 coefficient vector integrates the constant: 1^T M 1 = |domain|
  std::vector<double> ones(space.n_dofs, 1.0);
  const std::vector<double> m1 = ml2.apply(ones);
  double total = 0;
  for (double v : m1) total += v;
  CHECK(total == doctest::Approx(4.0).epsilon(1e-12));

  HParams p0 = p;
  p0.m = 0.0;
  CHECK(max_entry_diff(assemble_h_mass(space, p0), ml2) < 1e-15);
}

TEST_CASE("adjoint volume form is the exact transpose of the primal one") {
  const Mesh mesh = make_rect_mesh(4, 4);
  const FunctionSpace space = build_space(mesh, 2);
  const HParams p;
  const SparseOperator a = assemble_primal_volume(space, p);
  const SparseOperator at = assemble_adjoint_volume(space, p);
  CHECK(max_entry_diff(at, a.transposed()) <= 1e-14 * a.max_abs());
}

TEST_CASE("full operators are volume plus stabilisation; reduction at m = 0") {
  const Mesh mesh = make_rect_mesh(4, 4);
  const FunctionSpace space = build_space(mesh, 2);
  const HParams p;
  CHECK(max_entry_diff(
            assemble_primal_full(space, p),
            added(assemble_primal_volume(space, p),
                  assemble_primal_stab(space, p))) < 1e-14);
  CHECK(max_entry_diff(
            assemble_adjoint_full(space, p),
            added(assemble_adjoint_volume(space, p),
                  assemble_adjoint_stab(space, p))) < 1e-14);

  HParams p0 = p;
  p0.m = 0.0;
  // every primal facet term carries a factor of M (or m itself)
  CHECK(assemble_primal_stab(space, p0).max_abs() == 0.0);
  // the adjoint keeps its inflow-wall product: int_{Gamma-} w phi |v| ds,
  // a symmetric PSD boundary mass with total weight int_{Gamma-} |v| ds = 1
  const SparseOperator sadj = assemble_adjoint_stab(space, p0);
  CHECK(sadj.max_abs() > 0.0);
  CHECK(max_entry_diff(sadj, sadj.transposed()) < 1e-15);
  std::vector<double> ones(space.n_dofs, 1.0);
  const std::vector<double> s1 = sadj.apply(ones);
  double total = 0;
  for (double v : s1) total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> w(space.n_dofs);
  for (int trial = 0; trial < 10; ++trial) {
    for (double& wi : w) wi = unif(rng);
    const std::vector<double> sw = sadj.apply(w);
    double q = 0;
    for (long i = 0; i < space.n_dofs; ++i) q += w[i] * sw[i];
    CHECK(q >= -1e-12);
  }
}

TEST_CASE("constrained operators carry unit rows on the constrained set") {
  const Mesh mesh = make_rect_mesh(2, 2);
  const FunctionSpace space = build_space(mesh, 2);
  const HParams p;
  const SparseOperator a = assemble_primal(space, p);
  const SparseOperator astar = assemble_adjoint(space, p);
  for (long i = 0; i < space.n_dofs; ++i) {
    if (space.minus_set[i]) {
      CHECK(a.coeff(i, i) == 1.0);
      CHECK(a.row_ptr[i + 1] - a.row_ptr[i] == 1);
    }
    if (space.plus_set[i]) {
      CHECK(astar.coeff(i, i) == 1.0);
      CHECK(astar.row_ptr[i + 1] - astar.row_ptr[i] == 1);
    }
  }
  // columns of the constrained set are eliminated too
  for (long i = 0; i < space.n_dofs; ++i) {
    if (space.minus_set[i]) continue;
    for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k)
      CHECK(space.minus_set[a.col_idx[k]] == 0);
  }
}

TEST_CASE("primal scheme reproduces a representable solution exactly") {
  const double eps = 0.1;
  const Mesh mesh = make_rect_mesh(2, 2);
  const FunctionSpace space = build_space(mesh, 8);
  HParams p;
  p.eps = eps;

  DiscreteField u = interpolate(
      space, [](double x, double v) { return bump(x, v).val; });
  apply_constraint(u, FieldTag::MinusConstrained);

  const SparseOperator a = assemble_primal(space, p);
  const std::vector<double> b =
      assemble_rhs_h(space, bump_forcing(eps), p, FieldTag::MinusConstrained);
  const double res = max_abs(residual(a, u.coeffs, b));
  CHECK(res < 1e-6);
}

TEST_CASE("adjoint scheme needs the commutator flux on the right-hand side") {
  const double eps = 0.1;
  const Mesh mesh = make_rect_mesh(2, 2);
  const FunctionSpace space = build_space(mesh, 8);
  HParams p;
  p.eps = eps;
  const Sym2 M = p.M();

  DiscreteField z = interpolate(
      space, [](double x, double v) { return bump(x, v).val; });
  apply_constraint(z, FieldTag::PlusConstrained);

  const VectorFn flux = [&](double x, double v) -> std::array<double, 2> {
    const Deriv2 d = bump(x, v);
    return {2 * M.a12 * d.dx + M.a22 * d.dv, M.a22 * d.dx};
  };
  const SparseOperator astar = assemble_adjoint(space, p);
  const std::vector<double> b_with = assemble_rhs_h(
      space, bump_adjoint_forcing(eps), p, FieldTag::PlusConstrained, &flux);
  const std::vector<double> b_without = assemble_rhs_h(
      space, bump_adjoint_forcing(eps), p, FieldTag::PlusConstrained);

  const double res_with = max_abs(residual(astar, z.coeffs, b_with));
  const double res_without = max_abs(residual(astar, z.coeffs, b_without));
  CHECK(res_with < 1e-6);
  CHECK(res_without > 100 * res_with);
}

TEST_CASE("weighted boundary seminorm") {
  const Mesh mesh = make_rect_mesh(4, 4);
  const FunctionSpace space = build_space(mesh, 2);
  HParams p0;
  p0.m = 0.0;
  const DiscreteField one =
      interpolate(space, [](double, double) { return 1.0; });
  // int |v| ds over each wall pair
  CHECK(boundary_h_seminorm(one, p0, FacetLabel::GammaPlus) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(boundary_h_seminorm(one, p0, FacetLabel::GammaMinus) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(boundary_h_seminorm(one, p0, FacetLabel::GammaZero) ==
        doctest::Approx(4.0).epsilon(1e-12));

  // linear field picks up the M-weighted gradient part
  HParams p;
  const DiscreteField lin =
      interpolate(space, [](double x, double v) { return x + v; });
  const double grad_part =
      p.eps * p.m * (1 + p.m) * (1 + p.m);  // (1,1) M (1,1)^T
  CHECK(boundary_h_seminorm(lin, p, FacetLabel::GammaPlus) ==
        doctest::Approx(17.0 / 6.0 + grad_part).epsilon(1e-12));
}

TEST_CASE("load vector: partition of unity, flux neutrality, constraints") {
  const Mesh mesh = make_rect_mesh(4, 4);
  const FunctionSpace space = build_space(mesh, 3);
  const HParams p;
  const ScalarFn2 one = [](double, double) { return Deriv2{1, 0, 0, 0, 0, 0}; };
  const std::vector<double> b = assemble_rhs_h(space, one, p, FieldTag::Free);
  double total = 0;
  for (double v : b) total += v;
  CHECK(total == doctest::Approx(4.0).epsilon(1e-12));

  // a constant extra flux integrates against grad of the unity partition
  const VectorFn q = [](double, double) -> std::array<double, 2> {
    return {0.3, -0.2};
  };
  const std::vector<double> bq =
      assemble_rhs_h(space, one, p, FieldTag::Free, &q);
  double total_q = 0;
  for (double v : bq) total_q += v;
  CHECK(total_q == doctest::Approx(4.0).epsilon(1e-12));

  const std::vector<double> bm =
      assemble_rhs_h(space, one, p, FieldTag::MinusConstrained);
  for (long i = 0; i < space.n_dofs; ++i)
    if (space.minus_set[i]) CHECK(bm[i] == 0.0);
}

TEST_CASE("cell geometry") {
  const Mesh mesh = make_rect_mesh(3, 2, 1.5);
  for (int c = 0; c < mesh.n_cells(); c += 2) {
    const CellGeom g = cell_geom(mesh, c);
    const auto& cell = mesh.cells[c];
    const Vertex& p0 = mesh.vertices[cell.v[0]];
    const Vertex& p1 = mesh.vertices[cell.v[1]];
    const Vertex& p2 = mesh.vertices[cell.v[2]];
    CHECK(g.j00 == doctest::Approx(p1.x - p0.x));
    CHECK(g.j10 == doctest::Approx(p1.v - p0.v));
    CHECK(g.j01 == doctest::Approx(p2.x - p0.x));
    CHECK(g.j11 == doctest::Approx(p2.v - p0.v));
    CHECK(g.det == doctest::Approx(2.0 * mesh.cell_area(c)));
    // inverse
    CHECK(g.j00 * g.i00 + g.j01 * g.i10 == doctest::Approx(1.0));
    CHECK(g.j00 * g.i01 + g.j01 * g.i11 == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(g.j10 * g.i00 + g.j11 * g.i10 == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(g.j10 * g.i01 + g.j11 * g.i11 == doctest::Approx(1.0));
  }
}

#include "hypokfem/assembly.hpp"

#include <cmath>
#include <stdexcept>

namespace hypokfem {

void HParams::validate() const {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  if (m < 0.0) throw std::invalid_argument("m must be nonnegative");
  if (!(c_sigma > 0.0)) throw std::invalid_argument("c_sigma must be positive");
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
}

CellGeom cell_geom(const Mesh& mesh, int c) {
  const Cell& cl = mesh.cells[c];
  const Vertex& p0 = mesh.vertices[cl.v[0]];
  const Vertex& p1 = mesh.vertices[cl.v[1]];
  const Vertex& p2 = mesh.vertices[cl.v[2]];
  CellGeom g;
  g.j00 = p1.x - p0.x;
  g.j01 = p2.x - p0.x;
  g.j10 = p1.v - p0.v;
  g.j11 = p2.v - p0.v;
  g.det = g.j00 * g.j11 - g.j01 * g.j10;
  const double inv = 1.0 / g.det;
  g.i00 = g.j11 * inv;
  g.i01 = -g.j01 * inv;
  g.i10 = -g.j10 * inv;
  g.i11 = g.j00 * inv;
  return g;
}

namespace {

// Per-quadrature-point physical derivatives of every cell basis function.
struct CellVals {
  int nq = 0, nd = 0;
  std::vector<double> x, v, w;
  std::vector<double> val, gx, gv, hxx, hxv, hvv;
  double at(const std::vector<double>& a, int q, int i) const {
    return a[q * nd + i];
  }
};

CellVals cell_values(const FunctionSpace& sp, int c, const QuadRule& rule,
                     const Tabulation& ref) {
  const Mesh& mesh = *sp.mesh;
  const CellGeom g = cell_geom(mesh, c);
  const Vertex& p0 = mesh.vertices[mesh.cells[c].v[0]];
  CellVals cv;
  cv.nq = rule.size();
  cv.nd = sp.dofs_per_cell();
  cv.x.resize(cv.nq);
  cv.v.resize(cv.nq);
  cv.w.resize(cv.nq);
  const int n = cv.nq * cv.nd;
  cv.val.resize(n);
  cv.gx.resize(n);
  cv.gv.resize(n);
  cv.hxx.resize(n);
  cv.hxv.resize(n);
  cv.hvv.resize(n);
  for (int q = 0; q < cv.nq; ++q) {
    cv.x[q] = p0.x + g.j00 * rule.x[q] + g.j01 * rule.y[q];
    cv.v[q] = p0.v + g.j10 * rule.x[q] + g.j11 * rule.y[q];
    cv.w[q] = rule.w[q] * std::abs(g.det);
    for (int i = 0; i < cv.nd; ++i) {
      const int k = q * cv.nd + i;
      cv.val[k] = ref.v(q, i);
      cv.gx[k] = g.i00 * ref.gx(q, i) + g.i10 * ref.gy(q, i);
      cv.gv[k] = g.i01 * ref.gx(q, i) + g.i11 * ref.gy(q, i);
      const double a00 = g.i00 * ref.hxx(q, i) + g.i10 * ref.hxy(q, i);
      const double a01 = g.i00 * ref.hxy(q, i) + g.i10 * ref.hyy(q, i);
      const double a10 = g.i01 * ref.hxx(q, i) + g.i11 * ref.hxy(q, i);
      const double a11 = g.i01 * ref.hxy(q, i) + g.i11 * ref.hyy(q, i);
      cv.hxx[k] = a00 * g.i00 + a01 * g.i10;
      cv.hxv[k] = a00 * g.i01 + a01 * g.i11;
      cv.hvv[k] = a10 * g.i01 + a11 * g.i11;
    }
  }
  return cv;
}

// kernel(cv, q, i_test, j_trial) -> integrand value at quadrature point q.
template <typename Kernel>
SparseOperator assemble_cellwise(const FunctionSpace& sp, Kernel&& kernel) {
  const QuadRule rule = triangle_rule(2 * sp.degree + 2);
  const Tabulation ref = tabulate(sp.basis, rule);
  const int nd = sp.dofs_per_cell();
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(sp.mesh->n_cells()) * nd * nd);
  std::vector<double> local(nd * nd);
  for (int c = 0; c < sp.mesh->n_cells(); ++c) {
    const CellVals cv = cell_values(sp, c, rule, ref);
    std::fill(local.begin(), local.end(), 0.0);
    for (int q = 0; q < cv.nq; ++q)
      for (int i = 0; i < nd; ++i)
        for (int j = 0; j < nd; ++j)
          local[i * nd + j] += cv.w[q] * kernel(cv, q, i, j);
    const auto dofs = sp.cell_global(c);
    for (int i = 0; i < nd; ++i)
      for (int j = 0; j < nd; ++j)
        trips.push_back({dofs[i], dofs[j], local[i * nd + j]});
  }
  return SparseOperator::from_triplets(sp.n_dofs, sp.n_dofs, trips);
}

// Two-sided facet evaluation: values, physical gradients and the second
// derivatives entering grad(.)_v, for every basis function of one adjacent
// cell at the facet quadrature points.
struct SideVals {
  std::vector<double> val, gx, gv, hxv, hvv;
};

void eval_side(const FunctionSpace& sp, int cell,
               const std::vector<double>& px, const std::vector<double>& pv,
               SideVals& out) {
  const Mesh& mesh = *sp.mesh;
  const int nd = sp.dofs_per_cell();
  const int nq = static_cast<int>(px.size());
  const CellGeom g = cell_geom(mesh, cell);
  const Vertex& p0 = mesh.vertices[mesh.cells[cell].v[0]];
  out.val.assign(nq * nd, 0.0);
  out.gx.assign(nq * nd, 0.0);
  out.gv.assign(nq * nd, 0.0);
  out.hxv.assign(nq * nd, 0.0);
  out.hvv.assign(nq * nd, 0.0);
  std::vector<double> bv(nd), bx(nd), by(nd), bxx(nd), bxy(nd), byy(nd);
  for (int q = 0; q < nq; ++q) {
    const double dx = px[q] - p0.x, dv = pv[q] - p0.v;
    const double xr = g.i00 * dx + g.i01 * dv;
    const double yr = g.i10 * dx + g.i11 * dv;
    sp.basis.eval(xr, yr, bv.data(), bx.data(), by.data(), bxx.data(),
                  bxy.data(), byy.data());
    for (int i = 0; i < nd; ++i) {
      const int k = q * nd + i;
      out.val[k] = bv[i];
      out.gx[k] = g.i00 * bx[i] + g.i10 * by[i];
      out.gv[k] = g.i01 * bx[i] + g.i11 * by[i];
      const double a01 = g.i00 * bxy[i] + g.i10 * byy[i];
      const double a10 = g.i01 * bxx[i] + g.i11 * bxy[i];
      const double a11 = g.i01 * bxy[i] + g.i11 * byy[i];
      out.hxv[k] = (g.i00 * bxx[i] + g.i10 * bxy[i]) * g.i01 + a01 * g.i11;
      out.hvv[k] = a10 * g.i01 + a11 * g.i11;
    }
  }
}

// Facet stabilisation shared by the primal and adjoint forms. The transport
// part couples the gradient jump of one argument with the gradient average
// of the other across interior facets; the primal form jumps the trial
// function, the adjoint form jumps the test function. On the boundary the
// primal adds the one-sided inflow (Gamma^-) gradient flux, while the
// adjoint adds the corresponding flux on its own inflow (Gamma^+) with the
// reversed-transport sign together with the full boundary H-product on its
// outflow (Gamma^-); the latter restores the outflow trace that transposing
// the volume form hands over with the wrong sign, and both vanish on fields
// whose H-trace the continuous problem constrains there. The grad(.)_v
// interior-penalty part is identical on both sides and lives on interior
// plus v-boundary facets.
SparseOperator assemble_stab(const FunctionSpace& sp, const HParams& p,
                             bool adjoint) {
  const Mesh& mesh = *sp.mesh;
  const Sym2 M = p.M();
  const double eps = p.eps;
  const FacetLabel transport_bnd =
      adjoint ? FacetLabel::GammaPlus : FacetLabel::GammaMinus;
  const QuadRule rule = edge_rule(2 * sp.degree + 1);
  const int nd = sp.dofs_per_cell();
  const int nq = rule.size();
  std::vector<Triplet> trips;
  std::vector<double> px(nq), pv(nq);
  SideVals sv[2];
  std::vector<double> local;
  for (const Facet& f : mesh.facets) {
    const bool interior = f.label == FacetLabel::Interior;
    const bool in_s1 = interior || f.label == transport_bnd;
    const bool in_s2 = interior || f.label == FacetLabel::GammaZero;
    const bool in_outflow = adjoint && f.label == FacetLabel::GammaMinus;
    if (!in_s1 && !in_s2 && !in_outflow) continue;

    const Vertex& a = mesh.vertices[f.a];
    const Vertex& b = mesh.vertices[f.b];
    for (int q = 0; q < nq; ++q) {
      px[q] = a.x + rule.x[q] * (b.x - a.x);
      pv[q] = a.v + rule.x[q] * (b.v - a.v);
    }
    const int nsides = interior ? 2 : 1;
    const int cells[2] = {f.cell0, f.cell1};
    const double jsign[2] = {1.0, -1.0};
    const double acoef = interior ? 0.5 : 1.0;
    for (int s = 0; s < nsides; ++s) eval_side(sp, cells[s], px, pv, sv[s]);
    const double sigma = facet_sigma(f, sp.degree, p.c_sigma);

    local.assign(static_cast<size_t>(nsides) * nsides * nd * nd, 0.0);
    for (int q = 0; q < nq; ++q) {
      const double w = rule.w[q] * f.len;
      const double vcoord = pv[q];
      for (int st = 0; st < nsides; ++st)
        for (int ss = 0; ss < nsides; ++ss) {
          double* blk = &local[(st * nsides + ss) * nd * nd];
          const SideVals& t = sv[st];
          const SideVals& u = sv[ss];
          for (int i = 0; i < nd; ++i) {
            const int ki = q * nd + i;
            const double tgx = t.gx[ki], tgv = t.gv[ki];
            const double thxv = t.hxv[ki], thvv = t.hvv[ki];
            for (int j = 0; j < nd; ++j) {
              const int kj = q * nd + j;
              const double ugx = u.gx[kj], ugv = u.gv[kj];
              const double mgx = M.a11 * ugx + M.a12 * ugv;
              const double mgv = M.a12 * ugx + M.a22 * ugv;
              const double pair = mgx * tgx + mgv * tgv;
              double contrib = 0.0;
              if (in_s1) {
                const double roles =
                    adjoint ? jsign[st] * acoef : jsign[ss] * acoef;
                double term = vcoord * f.nx * roles * pair;
                if (adjoint && !interior) term = -term;
                contrib -= term;
              }
              if (in_outflow)
                contrib -= vcoord * f.nx * (t.val[ki] * u.val[kj] + pair);
              if (in_s2) {
                const double uhxv = u.hxv[kj], uhvv = u.hvv[kj];
                const double mux = M.a11 * uhxv + M.a12 * uhvv;
                const double muv = M.a12 * uhxv + M.a22 * uhvv;
                const double t1 =
                    acoef * (mux * tgx + muv * tgv) * f.nv * jsign[st];
                const double mtx = M.a11 * thxv + M.a12 * thvv;
                const double mtv = M.a12 * thxv + M.a22 * thvv;
                const double t2 =
                    acoef * (mtx * ugx + mtv * ugv) * f.nv * jsign[ss];
                const double jj = f.nv * f.nv * jsign[ss] * jsign[st];
                const double pen =
                    p.m * sigma * jj *
                    (M.a11 * ugx * tgx + M.a12 * (ugx * tgv + ugv * tgx) +
                     M.a22 * ugv * tgv);
                contrib -= eps * (t1 + t2 - pen);
              }
              blk[i * nd + j] += w * contrib;
            }
          }
        }
    }
    for (int st = 0; st < nsides; ++st) {
      const auto rows = sp.cell_global(cells[st]);
      for (int ss = 0; ss < nsides; ++ss) {
        const auto colsd = sp.cell_global(cells[ss]);
        const double* blk = &local[(st * nsides + ss) * nd * nd];
        for (int i = 0; i < nd; ++i)
          for (int j = 0; j < nd; ++j) {
            const double vblk = blk[i * nd + j];
            if (vblk != 0.0) trips.push_back({rows[i], colsd[j], vblk});
          }
      }
    }
  }
  return SparseOperator::from_triplets(sp.n_dofs, sp.n_dofs, trips);
}

SparseOperator add(const SparseOperator& A, const SparseOperator& B) {
  std::vector<Triplet> trips;
  trips.reserve(A.nnz() + B.nnz());
  for (int r = 0; r < A.rows; ++r)
    for (int k = A.row_ptr[r]; k < A.row_ptr[r + 1]; ++k)
      trips.push_back({r, A.col_idx[k], A.vals[k]});
  for (int r = 0; r < B.rows; ++r)
    for (int k = B.row_ptr[r]; k < B.row_ptr[r + 1]; ++k)
      trips.push_back({r, B.col_idx[k], B.vals[k]});
  return SparseOperator::from_triplets(A.rows, A.cols, trips);
}

}  // namespace

SparseOperator assemble_l2_mass(const FunctionSpace& sp) {
  return assemble_cellwise(sp, [](const CellVals& cv, int q, int i, int j) {
    return cv.at(cv.val, q, j) * cv.at(cv.val, q, i);
  });
}

SparseOperator assemble_h_mass(const FunctionSpace& sp, const HParams& p) {
  const Sym2 M = p.M();
  return assemble_cellwise(sp, [M](const CellVals& cv, int q, int i, int j) {
    const double gxj = cv.at(cv.gx, q, j), gvj = cv.at(cv.gv, q, j);
    const double mgx = M.a11 * gxj + M.a12 * gvj;
    const double mgv = M.a12 * gxj + M.a22 * gvj;
    return cv.at(cv.val, q, j) * cv.at(cv.val, q, i) +
           mgx * cv.at(cv.gx, q, i) + mgv * cv.at(cv.gv, q, i);
  });
}

SparseOperator assemble_primal_volume(const FunctionSpace& sp,
                                      const HParams& p) {
  const Sym2 M = p.M();
  const double eps = p.eps;
  return assemble_cellwise(sp, [M, eps](const CellVals& cv, int q, int i,
                                        int j) {
    const double v = cv.v[q];
    const double gxj = cv.at(cv.gx, q, j), gvj = cv.at(cv.gv, q, j);
    const double gxi = cv.at(cv.gx, q, i), gvi = cv.at(cv.gv, q, i);
    // (v W_x, Phi)
    double r = v * gxj * cv.at(cv.val, q, i);
    // (grad(v W_x), M grad Phi) with grad(v W_x) = (v W_xx, W_x + v W_xv)
    const double tx = v * cv.at(cv.hxx, q, j);
    const double tv = gxj + v * cv.at(cv.hxv, q, j);
    r += (M.a11 * tx + M.a12 * tv) * gxi + (M.a12 * tx + M.a22 * tv) * gvi;
    // eps (W_v, Phi_v)
    r += eps * gvj * gvi;
    // eps (grad W_v, M grad Phi_v)
    const double ax = cv.at(cv.hxv, q, j), av = cv.at(cv.hvv, q, j);
    r += eps * ((M.a11 * ax + M.a12 * av) * cv.at(cv.hxv, q, i) +
                (M.a12 * ax + M.a22 * av) * cv.at(cv.hvv, q, i));
    return r;
  });
}

SparseOperator assemble_adjoint_volume(const FunctionSpace& sp,
                                       const HParams& p) {
  return assemble_primal_volume(sp, p).transposed();
}

SparseOperator assemble_primal_stab(const FunctionSpace& sp,
                                    const HParams& p) {
  return assemble_stab(sp, p, false);
}

SparseOperator assemble_adjoint_stab(const FunctionSpace& sp,
                                     const HParams& p) {
  return assemble_stab(sp, p, true);
}

SparseOperator assemble_primal_full(const FunctionSpace& sp,
                                    const HParams& p) {
  return add(assemble_primal_volume(sp, p), assemble_primal_stab(sp, p));
}

SparseOperator assemble_adjoint_full(const FunctionSpace& sp,
                                     const HParams& p) {
  return add(assemble_adjoint_volume(sp, p), assemble_adjoint_stab(sp, p));
}

SparseOperator assemble_primal(const FunctionSpace& sp, const HParams& p) {
  const auto& mask = sp.constraint_mask(FieldTag::MinusConstrained);
  return restricted(assemble_primal_full(sp, p), mask, mask, true);
}

SparseOperator assemble_adjoint(const FunctionSpace& sp, const HParams& p) {
  const auto& mask = sp.constraint_mask(FieldTag::PlusConstrained);
  return restricted(assemble_adjoint_full(sp, p), mask, mask, true);
}

std::vector<double> assemble_rhs_h(const FunctionSpace& sp, const ScalarFn2& g,
                                   const HParams& p, FieldTag tag,
                                   const VectorFn* extra_flux) {
  const Sym2 M = p.M();
  const QuadRule rule = triangle_rule(2 * sp.degree + 2);
  const Tabulation ref = tabulate(sp.basis, rule);
  const int nd = sp.dofs_per_cell();
  std::vector<double> b(sp.n_dofs, 0.0);
  for (int c = 0; c < sp.mesh->n_cells(); ++c) {
    const CellVals cv = cell_values(sp, c, rule, ref);
    const auto dofs = sp.cell_global(c);
    for (int q = 0; q < cv.nq; ++q) {
      const Deriv2 gq = g(cv.x[q], cv.v[q]);
      double fx = M.a11 * gq.dx + M.a12 * gq.dv;
      double fv = M.a12 * gq.dx + M.a22 * gq.dv;
      if (extra_flux) {
        const auto ef = (*extra_flux)(cv.x[q], cv.v[q]);
        fx += ef[0];
        fv += ef[1];
      }
      for (int i = 0; i < nd; ++i)
        b[dofs[i]] += cv.w[q] * (gq.val * cv.at(cv.val, q, i) +
                                 fx * cv.at(cv.gx, q, i) +
                                 fv * cv.at(cv.gv, q, i));
    }
  }
  const auto& mask = sp.constraint_mask(tag);
  for (int i = 0; i < sp.n_dofs; ++i)
    if (mask[i]) b[i] = 0.0;
  return b;
}

double boundary_h_seminorm(const DiscreteField& field, const HParams& p,
                           FacetLabel label) {
  const FunctionSpace& sp = *field.space;
  const Mesh& mesh = *sp.mesh;
  const Sym2 M = p.M();
  const QuadRule rule = edge_rule(2 * sp.degree + 2);
  const int nd = sp.dofs_per_cell();
  const int nq = rule.size();
  std::vector<double> bv(nd), bx(nd), by(nd);
  double total = 0.0;
  for (const Facet& f : mesh.facets) {
    if (f.label != label) continue;
    const Vertex& a = mesh.vertices[f.a];
    const Vertex& b = mesh.vertices[f.b];
    const CellGeom g = cell_geom(mesh, f.cell0);
    const Vertex& p0 = mesh.vertices[mesh.cells[f.cell0].v[0]];
    const auto dofs = sp.cell_global(f.cell0);
    for (int q = 0; q < nq; ++q) {
      const double x = a.x + rule.x[q] * (b.x - a.x);
      const double v = a.v + rule.x[q] * (b.v - a.v);
      const double xr = g.i00 * (x - p0.x) + g.i01 * (v - p0.v);
      const double yr = g.i10 * (x - p0.x) + g.i11 * (v - p0.v);
      sp.basis.eval(xr, yr, bv.data(), bx.data(), by.data(), nullptr, nullptr,
                    nullptr);
      double w = 0.0, wx = 0.0, wv = 0.0;
      for (int i = 0; i < nd; ++i) {
        const double c = field.coeffs[dofs[i]];
        w += c * bv[i];
        wx += c * (g.i00 * bx[i] + g.i10 * by[i]);
        wv += c * (g.i01 * bx[i] + g.i11 * by[i]);
      }
      const double grad_m =
          M.a11 * wx * wx + 2.0 * M.a12 * wx * wv + M.a22 * wv * wv;
      total += rule.w[q] * f.len * std::abs(v) * (w * w + grad_m);
    }
  }
  return total;
}

}  // namespace hypokfem

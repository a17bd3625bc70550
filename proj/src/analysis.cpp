#include "hypokfem/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace hypokfem {

namespace {

constexpr double kPi = 3.14159265358979323846;

ScalarFn2 zero_fn() {
  return [](double, double) { return Deriv2{}; };
}

struct VolumeAcc {
  double l2 = 0, hgrad = 0, grad = 0, gradv = 0;
};

// Broken volume accumulators of field-minus-exact: L2, M-weighted gradient,
// plain gradient, and grad(.)_v (second derivative) parts.
VolumeAcc volume_errors(const DiscreteField& f, const ScalarFn2& exact,
                        const Sym2& M) {
  const FunctionSpace& sp = *f.space;
  const Mesh& mesh = *sp.mesh;
  const QuadRule rule = triangle_rule(2 * sp.degree + 2);
  const Tabulation ref = tabulate(sp.basis, rule);
  const int nd = sp.dofs_per_cell();
  VolumeAcc acc;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const CellGeom g = cell_geom(mesh, c);
    const Vertex& p0 = mesh.vertices[mesh.cells[c].v[0]];
    const auto dofs = sp.cell_global(c);
    for (int q = 0; q < rule.size(); ++q) {
      const double x = p0.x + g.j00 * rule.x[q] + g.j01 * rule.y[q];
      const double v = p0.v + g.j10 * rule.x[q] + g.j11 * rule.y[q];
      const double w = rule.w[q] * std::abs(g.det);
      double rv = 0, rgx = 0, rgy = 0, rhxx = 0, rhxy = 0, rhyy = 0;
      for (int i = 0; i < nd; ++i) {
        const double ci = f.coeffs[dofs[i]];
        rv += ci * ref.v(q, i);
        rgx += ci * ref.gx(q, i);
        rgy += ci * ref.gy(q, i);
        rhxx += ci * ref.hxx(q, i);
        rhxy += ci * ref.hxy(q, i);
        rhyy += ci * ref.hyy(q, i);
      }
      const double fgx = g.i00 * rgx + g.i10 * rgy;
      const double fgv = g.i01 * rgx + g.i11 * rgy;
      const double a00 = g.i00 * rhxx + g.i10 * rhxy;
      const double a01 = g.i00 * rhxy + g.i10 * rhyy;
      const double a10 = g.i01 * rhxx + g.i11 * rhxy;
      const double a11 = g.i01 * rhxy + g.i11 * rhyy;
      const double fhxv = a00 * g.i01 + a01 * g.i11;
      const double fhvv = a10 * g.i01 + a11 * g.i11;
      const Deriv2 e = exact(x, v);
      const double ev = rv - e.val;
      const double egx = fgx - e.dx, egv = fgv - e.dv;
      const double exv = fhxv - e.dxv, evv = fhvv - e.dvv;
      acc.l2 += w * ev * ev;
      acc.hgrad += w * (M.a11 * egx * egx + 2.0 * M.a12 * egx * egv +
                        M.a22 * egv * egv);
      acc.grad += w * (egx * egx + egv * egv);
      acc.gradv += w * (exv * exv + evv * evv);
    }
  }
  return acc;
}

// |v|-weighted H-trace of field-minus-exact over facets with a label.
double boundary_h_error2(const DiscreteField& f, const ScalarFn2& exact,
                         const Sym2& M, FacetLabel label) {
  const FunctionSpace& sp = *f.space;
  const Mesh& mesh = *sp.mesh;
  const QuadRule rule = edge_rule(2 * sp.degree + 2);
  const int nd = sp.dofs_per_cell();
  std::vector<double> bv(nd), bx(nd), by(nd);
  double total = 0.0;
  for (const Facet& fc : mesh.facets) {
    if (fc.label != label) continue;
    const Vertex& a = mesh.vertices[fc.a];
    const Vertex& b = mesh.vertices[fc.b];
    const CellGeom g = cell_geom(mesh, fc.cell0);
    const Vertex& p0 = mesh.vertices[mesh.cells[fc.cell0].v[0]];
    const auto dofs = sp.cell_global(fc.cell0);
    for (int q = 0; q < rule.size(); ++q) {
      const double x = a.x + rule.x[q] * (b.x - a.x);
      const double v = a.v + rule.x[q] * (b.v - a.v);
      const double xr = g.i00 * (x - p0.x) + g.i01 * (v - p0.v);
      const double yr = g.i10 * (x - p0.x) + g.i11 * (v - p0.v);
      sp.basis.eval(xr, yr, bv.data(), bx.data(), by.data(), nullptr, nullptr,
                    nullptr);
      double wv = 0, wx = 0, wvd = 0;
      for (int i = 0; i < nd; ++i) {
        const double ci = f.coeffs[dofs[i]];
        wv += ci * bv[i];
        wx += ci * (g.i00 * bx[i] + g.i10 * by[i]);
        wvd += ci * (g.i01 * bx[i] + g.i11 * by[i]);
      }
      const Deriv2 e = exact(x, v);
      const double ev = wv - e.val;
      const double egx = wx - e.dx, egv = wvd - e.dv;
      total += rule.w[q] * fc.len * std::abs(v) *
               (ev * ev + M.a11 * egx * egx + 2.0 * M.a12 * egx * egv +
                M.a22 * egv * egv);
    }
  }
  return total;
}

// sigma-weighted facet jump seminorm of the field gradient (the exact
// comparator is facet-continuous and drops out).
double jump_seminorm2(const DiscreteField& f, const HParams& p) {
  const FunctionSpace& sp = *f.space;
  const Mesh& mesh = *sp.mesh;
  const Sym2 M = p.M();
  const QuadRule rule = edge_rule(2 * sp.degree + 1);
  const int nd = sp.dofs_per_cell();
  std::vector<double> bx(nd), by(nd);
  double total = 0.0;
  for (const Facet& fc : mesh.facets) {
    if (fc.label != FacetLabel::Interior) continue;
    if (fc.nv == 0.0) continue;
    const double sigma = facet_sigma(fc, sp.degree, p.c_sigma);
    const Vertex& a = mesh.vertices[fc.a];
    const Vertex& b = mesh.vertices[fc.b];
    const int cells[2] = {fc.cell0, fc.cell1};
    for (int q = 0; q < rule.size(); ++q) {
      const double x = a.x + rule.x[q] * (b.x - a.x);
      const double v = a.v + rule.x[q] * (b.v - a.v);
      double jx = 0, jv = 0;
      for (int s = 0; s < 2; ++s) {
        const CellGeom g = cell_geom(mesh, cells[s]);
        const Vertex& p0 = mesh.vertices[mesh.cells[cells[s]].v[0]];
        const auto dofs = sp.cell_global(cells[s]);
        const double xr = g.i00 * (x - p0.x) + g.i01 * (v - p0.v);
        const double yr = g.i10 * (x - p0.x) + g.i11 * (v - p0.v);
        sp.basis.eval(xr, yr, nullptr, bx.data(), by.data(), nullptr, nullptr,
                      nullptr);
        const double sgn = s == 0 ? 1.0 : -1.0;
        for (int i = 0; i < nd; ++i) {
          const double ci = f.coeffs[dofs[i]];
          jx += sgn * ci * (g.i00 * bx[i] + g.i10 * by[i]);
          jv += sgn * ci * (g.i01 * bx[i] + g.i11 * by[i]);
        }
      }
      total += rule.w[q] * fc.len * p.eps * p.m * sigma * fc.nv * fc.nv *
               (M.a11 * jx * jx + 2.0 * M.a12 * jx * jv + M.a22 * jv * jv);
    }
  }
  return total;
}

}  // namespace

Constants constants(const HParams& p, double x_max) {
  Constants c;
  const Eig2 em = eig_sym_2x2(p.M());
  const Eig2 en = eig_sym_2x2(p.N());
  c.lambda_min_M = em.lam_min;
  c.lambda_max_M = em.lam_max;
  c.lambda_min_N = en.lam_min;
  c.lambda_max_N = en.lam_max;
  c.c_eq_plus = std::max(1.0, c.lambda_max_M);
  const double poincare = 4.0 / (kPi * kPi) * (1.0 + x_max * x_max) + 1.0;
  c.delta_tilde = c.lambda_min_N / (c.c_eq_plus * poincare);
  return c;
}

double l2_norm(const DiscreteField& f) { return l2_error(f, zero_fn()); }

double l2_error(const DiscreteField& f, const ScalarFn2& exact) {
  return std::sqrt(volume_errors(f, exact, Sym2{0, 0, 0}).l2);
}

double h_norm(const DiscreteField& f, const HParams& p) {
  return h_norm_error(f, zero_fn(), p);
}

double h_norm_error(const DiscreteField& f, const ScalarFn2& exact,
                    const HParams& p) {
  const VolumeAcc acc = volume_errors(f, exact, p.M());
  return std::sqrt(acc.l2 + acc.hgrad);
}

double triple_norm(const DiscreteField& f, NormVariant variant,
                   const HParams& p) {
  return triple_norm_error(f, zero_fn(), variant, p);
}

double triple_norm_error(const DiscreteField& f, const ScalarFn2& exact,
                         NormVariant variant, const HParams& p) {
  const VolumeAcc acc = volume_errors(f, exact, p.M());
  const FacetLabel side = variant == NormVariant::Primal
                              ? FacetLabel::GammaPlus
                              : FacetLabel::GammaMinus;
  const double bnd = boundary_h_error2(f, exact, p.M(), side);
  return std::sqrt(bnd + acc.grad + acc.gradv + jump_seminorm2(f, p));
}

double cost(const DiscreteField& u, const DiscreteField& f,
            const ScalarFn2& target, const HParams& p) {
  const double track = h_norm_error(u, target, p);
  const double control = h_norm(f, p);
  return 0.5 * track * track + 0.5 * p.alpha * control * control;
}

std::vector<double> eoc(const std::vector<double>& h,
                        const std::vector<double>& err) {
  if (h.size() != err.size())
    throw std::invalid_argument("eoc: size mismatch");
  if (h.size() < 2) throw std::invalid_argument("eoc: need at least 2 rows");
  std::vector<double> rates;
  for (size_t i = 0; i + 1 < h.size(); ++i) {
    if (!(h[i + 1] < h[i]))
      throw std::invalid_argument("eoc: h must be strictly decreasing");
    rates.push_back(std::log(err[i] / err[i + 1]) / std::log(h[i] / h[i + 1]));
  }
  return rates;
}

DecayReport decay_report(const std::vector<double>& h_norms, double dt) {
  if (h_norms.size() < 3)
    throw std::invalid_argument("decay_report: need at least 3 samples");
  DecayReport rep;
  rep.monotone = true;
  for (size_t i = 0; i + 1 < h_norms.size(); ++i)
    if (h_norms[i + 1] > h_norms[i] + 1e-12) rep.monotone = false;
  // least squares on log of the squared norm against time
  const size_t n = h_norms.size();
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (size_t i = 0; i < n; ++i) {
    if (!(h_norms[i] > 0.0))
      throw std::invalid_argument("decay_report: nonpositive norm sample");
    const double t = dt * static_cast<double>(i);
    const double y = 2.0 * std::log(h_norms[i]);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
  }
  const double denom = n * stt - st * st;
  rep.fitted_rate = -(n * sty - st * sy) / denom;
  return rep;
}

void write_error_csv(const std::string& path,
                     const std::vector<ErrorRow>& rows,
                     const std::vector<std::string>& header_lines) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  for (const auto& line : header_lines) out << "# " << line << "\n";
  out << "h,dofs,err_H,err_triple,err_triple_dual,eoc_H,eoc_triple\n";
  char buf[512];
  for (size_t i = 0; i < rows.size(); ++i) {
    const ErrorRow& r = rows[i];
    std::string eoc_h, eoc_t;
    if (i > 0) {
      const double lh = std::log(rows[i - 1].h / r.h);
      std::snprintf(buf, sizeof(buf), "%.6f",
                    std::log(rows[i - 1].err_h / r.err_h) / lh);
      eoc_h = buf;
      std::snprintf(buf, sizeof(buf), "%.6f",
                    std::log(rows[i - 1].err_triple / r.err_triple) / lh);
      eoc_t = buf;
    }
    std::snprintf(buf, sizeof(buf), "%.12e,%d,%.12e,%.12e,%.12e,%s,%s\n", r.h,
                  r.dofs, r.err_h, r.err_triple, r.err_triple_dual,
                  eoc_h.c_str(), eoc_t.c_str());
    out << buf;
  }
}

}  // namespace hypokfem

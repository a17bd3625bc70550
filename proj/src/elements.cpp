#include "hypokfem/elements.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace hypokfem {

namespace {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (t * p1 - p0) / (t * t - 1.0);
      double dt = p1 / pp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    x[i] = -t;
    x[n - 1 - i] = t;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - t * t) * pp * pp);
  }
}

}  // namespace

QuadRule edge_rule(int exactness) {
  if (exactness < 0 || exactness > 40)
    throw std::invalid_argument("edge_rule: unsupported exactness");
  int n = (exactness + 2) / 2;  // 2n-1 >= exactness
  if (n < 1) n = 1;
  std::vector<double> gx, gw;
  gauss_legendre(n, gx, gw);
  QuadRule r;
  r.exactness = exactness;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) {
    r.x[i] = 0.5 * (gx[i] + 1.0);
    r.w[i] = 0.5 * gw[i];
  }
  return r;
}

QuadRule triangle_rule(int exactness) {
  if (exactness < 0 || exactness > 40)
    throw std::invalid_argument("triangle_rule: unsupported exactness");
  // Collapsed square: x = s, y = t(1-s), Jacobian (1-s). The extra factor
  // raises the s-degree by one, hence n covers exactness+1.
  int n = (exactness + 3) / 2;  // 2n-1 >= exactness+1
  if (n < 1) n = 1;
  std::vector<double> gx, gw;
  gauss_legendre(n, gx, gw);
  std::vector<double> s(n), ws(n);
  for (int i = 0; i < n; ++i) {
    s[i] = 0.5 * (gx[i] + 1.0);
    ws[i] = 0.5 * gw[i];
  }
  QuadRule r;
  r.exactness = exactness;
  r.x.reserve(n * n);
  r.y.reserve(n * n);
  r.w.reserve(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      r.x.push_back(s[i]);
      r.y.push_back(s[j] * (1.0 - s[i]));
      r.w.push_back(ws[i] * ws[j] * (1.0 - s[i]));
    }
  return r;
}

LagrangeBasis::LagrangeBasis(int degree) : degree_(degree) {
  if (degree < 1 || degree > 8)
    throw std::invalid_argument("LagrangeBasis: degree out of range");
  const int r = degree;
  ndof_ = (r + 1) * (r + 2) / 2;

  // Vertices, then edge nodes, then interior; barycentric grid (i,j) -> (i/r, j/r).
  auto push = [&](int i, int j, NodeEntity e) {
    nodes_.push_back({double(i) / r, double(j) / r});
    entities_.push_back(e);
  };
  push(0, 0, {0, 0, 0});
  push(r, 0, {0, 1, 0});
  push(0, r, {0, 2, 0});
  for (int t = 1; t < r; ++t) push(t, 0, {1, 0, t});          // edge (v0,v1)
  for (int t = 1; t < r; ++t) push(r - t, t, {1, 1, t});      // edge (v1,v2)
  for (int t = 1; t < r; ++t) push(0, t, {1, 2, t});          // edge (v0,v2)
  int sub = 0;
  for (int i = 1; i < r; ++i)
    for (int j = 1; j < r - i; ++j) push(i, j, {2, 0, sub++});

  for (int d = 0; d <= r; ++d)
    for (int b = 0; b <= d; ++b) expo_.push_back({d - b, b});

  Eigen::MatrixXd V(ndof_, ndof_);
  for (int i = 0; i < ndof_; ++i)
    for (int k = 0; k < ndof_; ++k)
      V(i, k) = std::pow(nodes_[i][0], expo_[k][0]) *
                std::pow(nodes_[i][1], expo_[k][1]);
  Eigen::MatrixXd C = V.fullPivLu().inverse();  // phi_i = sum_k C(k,i) m_k
  coef_.resize(ndof_ * ndof_);
  for (int k = 0; k < ndof_; ++k)
    for (int i = 0; i < ndof_; ++i) coef_[k * ndof_ + i] = C(k, i);
}

void LagrangeBasis::eval(double x, double y, double* val, double* dx,
                         double* dy, double* dxx, double* dxy,
                         double* dyy) const {
  const int r = degree_;
  double px[9], py[9];
  px[0] = py[0] = 1.0;
  for (int k = 1; k <= r; ++k) {
    px[k] = px[k - 1] * x;
    py[k] = py[k - 1] * y;
  }
  auto mono = [&](int a, int b, int da, int db) -> double {
    int aa = a - da, bb = b - db;
    if (aa < 0 || bb < 0) return 0.0;
    double f = 1.0;
    for (int k = 0; k < da; ++k) f *= a - k;
    for (int k = 0; k < db; ++k) f *= b - k;
    return f * px[aa] * py[bb];
  };
  for (int i = 0; i < ndof_; ++i) {
    if (val) val[i] = 0;
    if (dx) dx[i] = 0;
    if (dy) dy[i] = 0;
    if (dxx) dxx[i] = 0;
    if (dxy) dxy[i] = 0;
    if (dyy) dyy[i] = 0;
  }
  for (int k = 0; k < ndof_; ++k) {
    const int a = expo_[k][0], b = expo_[k][1];
    const double m00 = mono(a, b, 0, 0);
    const double m10 = dx || dxy ? mono(a, b, 1, 0) : 0.0;
    const double m01 = dy ? mono(a, b, 0, 1) : 0.0;
    const double m20 = dxx ? mono(a, b, 2, 0) : 0.0;
    const double m11 = dxy ? mono(a, b, 1, 1) : 0.0;
    const double m02 = dyy ? mono(a, b, 0, 2) : 0.0;
    const double* c = &coef_[k * ndof_];
    for (int i = 0; i < ndof_; ++i) {
      if (val) val[i] += c[i] * m00;
      if (dx) dx[i] += c[i] * m10;
      if (dy) dy[i] += c[i] * m01;
      if (dxx) dxx[i] += c[i] * m20;
      if (dxy) dxy[i] += c[i] * m11;
      if (dyy) dyy[i] += c[i] * m02;
    }
  }
}

Tabulation tabulate(const LagrangeBasis& basis,
                    const std::vector<std::array<double, 2>>& pts) {
  Tabulation t;
  t.npts = static_cast<int>(pts.size());
  t.ndofs = basis.size();
  const std::size_t n = std::size_t(t.npts) * t.ndofs;
  t.val.resize(n);
  t.dx.resize(n);
  t.dy.resize(n);
  t.dxx.resize(n);
  t.dxy.resize(n);
  t.dyy.resize(n);
  for (int q = 0; q < t.npts; ++q) {
    const std::size_t off = std::size_t(q) * t.ndofs;
    basis.eval(pts[q][0], pts[q][1], &t.val[off], &t.dx[off], &t.dy[off],
               &t.dxx[off], &t.dxy[off], &t.dyy[off]);
  }
  return t;
}

Tabulation tabulate(const LagrangeBasis& basis, const QuadRule& rule) {
  std::vector<std::array<double, 2>> pts(rule.size());
  for (int q = 0; q < rule.size(); ++q)
    pts[q] = {rule.x[q], rule.y.empty() ? 0.0 : rule.y[q]};
  return tabulate(basis, pts);
}

Eig2 eig_sym_2x2(const Sym2& s) {
  Eig2 e;
  const double mean = 0.5 * (s.a11 + s.a22);
  const double half = 0.5 * (s.a11 - s.a22);
  const double disc = std::hypot(half, s.a12);
  e.lam_max = mean + disc;
  e.lam_min = mean - disc;
  const double scale =
      std::max({std::abs(s.a11), std::abs(s.a22), std::abs(s.a12)});
  if (std::abs(s.a12) <= 1e-15 * std::max(scale, 1e-300)) {
    if (s.a11 >= s.a22) {
      e.vec_max = {1.0, 0.0};
      e.vec_min = {0.0, 1.0};
    } else {
      e.vec_max = {0.0, 1.0};
      e.vec_min = {1.0, 0.0};
    }
    return e;
  }
  // (A - lam_max I) e = 0  =>  e ~ (a12, lam_max - a11)
  double vx = s.a12, vy = e.lam_max - s.a11;
  double nrm = std::hypot(vx, vy);
  e.vec_max = {vx / nrm, vy / nrm};
  e.vec_min = {-e.vec_max[1], e.vec_max[0]};
  return e;
}

Sym2 sqrt_psd_2x2(const Sym2& s) {
  Eig2 e = eig_sym_2x2(s);
  const double l1 = std::sqrt(std::max(e.lam_max, 0.0));
  const double l2 = std::sqrt(std::max(e.lam_min, 0.0));
  const auto& u = e.vec_max;
  const auto& v = e.vec_min;
  Sym2 r;
  r.a11 = l1 * u[0] * u[0] + l2 * v[0] * v[0];
  r.a12 = l1 * u[0] * u[1] + l2 * v[0] * v[1];
  r.a22 = l1 * u[1] * u[1] + l2 * v[1] * v[1];
  return r;
}

}  // namespace hypokfem

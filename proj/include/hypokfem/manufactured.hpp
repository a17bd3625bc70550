#pragma once

#include <array>
#include <cmath>
#include <functional>

namespace hypokfem {

// Truncated bivariate Taylor arithmetic in (x, v). Coefficients store
// (d^a_x d^b_v f)(x0,v0) / (a! b!) for a + b <= Order, ordered by total
// degree and then by b.
template <int Order>
struct Jet {
  static constexpr int order = Order;
  static constexpr int ncoef = (Order + 1) * (Order + 2) / 2;
  std::array<double, ncoef> c{};

  static constexpr int idx(int a, int b) {
    const int d = a + b;
    return d * (d + 1) / 2 + b;
  }
  static Jet constant(double v) {
    Jet j;
    j.c[0] = v;
    return j;
  }
  static Jet seed_x(double x0) {
    Jet j;
    j.c[0] = x0;
    if constexpr (Order >= 1) j.c[idx(1, 0)] = 1.0;
    return j;
  }
  static Jet seed_v(double v0) {
    Jet j;
    j.c[0] = v0;
    if constexpr (Order >= 1) j.c[idx(0, 1)] = 1.0;
    return j;
  }
  double value() const { return c[0]; }
  // Raw partial derivative (Taylor coefficient times a! b!).
  double partial(int a, int b) const {
    double f = 1.0;
    for (int k = 2; k <= a; ++k) f *= k;
    for (int k = 2; k <= b; ++k) f *= k;
    return c[idx(a, b)] * f;
  }

  Jet operator-() const {
    Jet r;
    for (int i = 0; i < ncoef; ++i) r.c[i] = -c[i];
    return r;
  }
  Jet& operator+=(const Jet& o) {
    for (int i = 0; i < ncoef; ++i) c[i] += o.c[i];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (int i = 0; i < ncoef; ++i) c[i] -= o.c[i];
    return *this;
  }
  Jet& operator*=(double s) {
    for (int i = 0; i < ncoef; ++i) c[i] *= s;
    return *this;
  }
  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator+(Jet a, double s) {
    a.c[0] += s;
    return a;
  }
  friend Jet operator+(double s, Jet a) {
    a.c[0] += s;
    return a;
  }
  friend Jet operator-(Jet a, double s) {
    a.c[0] -= s;
    return a;
  }
  friend Jet operator-(double s, const Jet& a) {
    Jet r = -a;
    r.c[0] += s;
    return r;
  }

  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    for (int d1 = 0; d1 <= Order; ++d1)
      for (int b1 = 0; b1 <= d1; ++b1) {
        const double ca = a.c[d1 * (d1 + 1) / 2 + b1];
        if (ca == 0.0) continue;
        const int a1 = d1 - b1;
        for (int d2 = 0; d2 + d1 <= Order; ++d2)
          for (int b2 = 0; b2 <= d2; ++b2) {
            const double cb = b.c[d2 * (d2 + 1) / 2 + b2];
            if (cb == 0.0) continue;
            r.c[idx(a1 + (d2 - b2), b1 + b2)] += ca * cb;
          }
      }
    return r;
  }
};

// Compose a univariate series around f.value() with a jet: result =
// sum_k g_k / k! * (f - f0)^k, where g_k = g^(k)(f0).
template <int Order>
Jet<Order> jet_compose(const Jet<Order>& f,
                       const std::array<double, Order + 1>& g) {
  Jet<Order> delta = f;
  delta.c[0] = 0.0;
  double fact = 1.0;
  for (int k = 2; k <= Order; ++k) fact *= k;
  Jet<Order> res = Jet<Order>::constant(g[Order] / fact);
  for (int k = Order - 1; k >= 0; --k) {
    fact = 1.0;
    for (int j = 2; j <= k; ++j) fact *= j;
    res = res * delta + Jet<Order>::constant(g[k] / fact);
  }
  return res;
}

template <int Order>
Jet<Order> jet_sin(const Jet<Order>& f) {
  const double s = std::sin(f.value()), co = std::cos(f.value());
  std::array<double, Order + 1> g;
  const double cyc[4] = {s, co, -s, -co};
  for (int k = 0; k <= Order; ++k) g[k] = cyc[k % 4];
  return jet_compose(f, g);
}

template <int Order>
Jet<Order> jet_cos(const Jet<Order>& f) {
  const double s = std::sin(f.value()), co = std::cos(f.value());
  std::array<double, Order + 1> g;
  const double cyc[4] = {co, -s, -co, s};
  for (int k = 0; k <= Order; ++k) g[k] = cyc[k % 4];
  return jet_compose(f, g);
}

template <int Order>
Jet<Order> jet_exp(const Jet<Order>& f) {
  std::array<double, Order + 1> g;
  g.fill(std::exp(f.value()));
  return jet_compose(f, g);
}

template <int Order>
Jet<Order> jet_pow(const Jet<Order>& f, int n) {
  Jet<Order> r = Jet<Order>::constant(1.0);
  for (int k = 0; k < n; ++k) r = r * f;
  return r;
}

// d/dx and d/dv lower the order by one.
template <int Order>
Jet<Order - 1> d_x(const Jet<Order>& f) {
  static_assert(Order >= 1);
  Jet<Order - 1> r;
  for (int d = 0; d <= Order - 1; ++d)
    for (int b = 0; b <= d; ++b) {
      const int a = d - b;
      r.c[Jet<Order - 1>::idx(a, b)] = (a + 1) * f.c[Jet<Order>::idx(a + 1, b)];
    }
  return r;
}

template <int Order>
Jet<Order - 1> d_v(const Jet<Order>& f) {
  static_assert(Order >= 1);
  Jet<Order - 1> r;
  for (int d = 0; d <= Order - 1; ++d)
    for (int b = 0; b <= d; ++b) {
      const int a = d - b;
      r.c[Jet<Order - 1>::idx(a, b)] = (b + 1) * f.c[Jet<Order>::idx(a, b + 1)];
    }
  return r;
}

using Jet4 = Jet<4>;

// Fixed benchmark expression library. U is sin^4(pi x) sin^4(pi v);
// Forcing = v U_x - eps U_vv; Dual = alpha * Forcing; Target = U - v Dual_x
// - eps Dual_vv.
enum class BenchmarkExpr { U, Forcing, Dual, Target };

Jet4 eval_jet(BenchmarkExpr expr, double alpha, double eps, double x,
              double v);

// Pointwise value with first and second derivatives (second derivatives may
// be zero for data defined only almost everywhere).
struct Deriv2 {
  double val = 0, dx = 0, dv = 0, dxx = 0, dxv = 0, dvv = 0;
};

using ScalarFn2 = std::function<Deriv2(double, double)>;
using VectorFn = std::function<std::array<double, 2>(double, double)>;

// u = sin^4(pi x) sin^4(pi v), the stationary benchmark solution.
ScalarFn2 benchmark_u();

// f = v u_x - eps u_vv with exact derivatives (drives the primal equation).
ScalarFn2 primal_forcing(double eps);

// Manufactured stationary optimal-control triple: z = alpha f, f = K u,
// target = u + K* z. dual_flux is the commutator flux
// q = (2 M12 z_x + M22 z_v, M22 z_x) that the dual right-hand side carries so
// that (u, z, f) satisfies the discrete optimality system exactly; M is the
// hypocoercivity matrix eps*[[m^3, m^2], [m^2, m]].
struct OcManufactured {
  double alpha = 1, eps = 0.1, m = 0.35;
  ScalarFn2 u, z, f, target;
  VectorFn dual_flux;
};
OcManufactured oc_manufactured(double alpha, double eps, double m);

// Rotating-in-time benchmark u(t) = sin(t) u and its forcing u_t + K u.
ScalarFn2 timedep_exact(double t);
ScalarFn2 timedep_forcing(double eps, double t);

// Control targets: clipped ellipse bump, disc indicator, and the pulsating
// Gaussian (1 - cos 2 pi t) exp(-25 (x^2 + v^2)).
ScalarFn2 target_ellipse();
ScalarFn2 target_disc();
ScalarFn2 timedep_target(double t);

}  // namespace hypokfem

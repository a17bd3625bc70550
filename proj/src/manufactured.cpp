#include "hypokfem/manufactured.hpp"

namespace hypokfem {

namespace {

constexpr double kPi = 3.14159265358979323846;

template <int KOut, int KIn>
Jet<KOut> truncate(const Jet<KIn>& f) {
  static_assert(KOut <= KIn);
  Jet<KOut> r;
  for (int i = 0; i < Jet<KOut>::ncoef; ++i) r.c[i] = f.c[i];
  return r;
}

template <int K>
Jet<K> sin4_jet(double x, double v) {
  const auto sx = jet_sin(kPi * Jet<K>::seed_x(x));
  const auto sv = jet_sin(kPi * Jet<K>::seed_v(v));
  return jet_pow(sx, 4) * jet_pow(sv, 4);
}

// f = v u_x - eps u_vv for u = sin^4 sin^4.
template <int K>
Jet<K> forcing_jet(double eps, double x, double v) {
  const auto u = sin4_jet<K + 2>(x, v);
  const auto ux = truncate<K>(d_x(u));
  const auto uvv = d_v(d_v(u));
  return Jet<K>::seed_v(v) * ux - eps * uvv;
}

// target = u + K* z = u - v z_x - eps z_vv for z = alpha f.
template <int K>
Jet<K> target_jet(double alpha, double eps, double x, double v) {
  const auto z = alpha * forcing_jet<K + 2>(eps, x, v);
  const auto zx = truncate<K>(d_x(z));
  const auto zvv = d_v(d_v(z));
  return sin4_jet<K>(x, v) - Jet<K>::seed_v(v) * zx - eps * zvv;
}

Deriv2 to_deriv2(const Jet<2>& j) {
  Deriv2 d;
  d.val = j.c[0];
  d.dx = j.c[Jet<2>::idx(1, 0)];
  d.dv = j.c[Jet<2>::idx(0, 1)];
  d.dxx = 2.0 * j.c[Jet<2>::idx(2, 0)];
  d.dxv = j.c[Jet<2>::idx(1, 1)];
  d.dvv = 2.0 * j.c[Jet<2>::idx(0, 2)];
  return d;
}

}  // namespace

Jet4 eval_jet(BenchmarkExpr expr, double alpha, double eps, double x,
              double v) {
  switch (expr) {
    case BenchmarkExpr::U:
      return sin4_jet<4>(x, v);
    case BenchmarkExpr::Forcing:
      return forcing_jet<4>(eps, x, v);
    case BenchmarkExpr::Dual:
      return alpha * forcing_jet<4>(eps, x, v);
    case BenchmarkExpr::Target:
      return target_jet<4>(alpha, eps, x, v);
  }
  return {};
}

ScalarFn2 benchmark_u() {
  return [](double x, double v) { return to_deriv2(sin4_jet<2>(x, v)); };
}

ScalarFn2 primal_forcing(double eps) {
  return [eps](double x, double v) {
    return to_deriv2(forcing_jet<2>(eps, x, v));
  };
}

OcManufactured oc_manufactured(double alpha, double eps, double m) {
  OcManufactured oc;
  oc.alpha = alpha;
  oc.eps = eps;
  oc.m = m;
  oc.u = benchmark_u();
  oc.f = primal_forcing(eps);
  oc.z = [alpha, eps](double x, double v) {
    return to_deriv2(alpha * forcing_jet<2>(eps, x, v));
  };
  oc.target = [alpha, eps](double x, double v) {
    return to_deriv2(target_jet<2>(alpha, eps, x, v));
  };
  const double m12 = eps * m * m, m22 = eps * m;
  oc.dual_flux = [alpha, eps, m12, m22](double x, double v) {
    const auto z = alpha * forcing_jet<1>(eps, x, v);
    const double zx = z.c[Jet<1>::idx(1, 0)];
    const double zv = z.c[Jet<1>::idx(0, 1)];
    return std::array<double, 2>{2.0 * m12 * zx + m22 * zv, m22 * zx};
  };
  return oc;
}

ScalarFn2 timedep_exact(double t) {
  const double st = std::sin(t);
  return [st](double x, double v) {
    Deriv2 d = to_deriv2(sin4_jet<2>(x, v));
    d.val *= st;
    d.dx *= st;
    d.dv *= st;
    d.dxx *= st;
    d.dxv *= st;
    d.dvv *= st;
    return d;
  };
}

ScalarFn2 timedep_forcing(double eps, double t) {
  const double st = std::sin(t), ct = std::cos(t);
  return [eps, st, ct](double x, double v) {
    const auto j = ct * sin4_jet<2>(x, v) + st * forcing_jet<2>(eps, x, v);
    return to_deriv2(j);
  };
}

ScalarFn2 target_ellipse() {
  return [](double x, double v) {
    const double ax = 0.09, bv = 0.25;  // semi-axes 0.3 and 0.5, squared
    const double g = 1.0 - x * x / ax - v * v / bv;
    Deriv2 d;
    if (g <= 0.0) return d;
    const double s = std::sqrt(g);
    d.val = s;
    d.dx = -x / (ax * s);
    d.dv = -v / (bv * s);
    d.dxx = -1.0 / (ax * s) - x * x / (ax * ax * s * s * s);
    d.dvv = -1.0 / (bv * s) - v * v / (bv * bv * s * s * s);
    d.dxv = -x * v / (ax * bv * s * s * s);
    return d;
  };
}

ScalarFn2 target_disc() {
  return [](double x, double v) {
    Deriv2 d;
    d.val = (x * x + v * v <= 1.0 / 16.0) ? 1.0 : 0.0;
    return d;
  };
}

ScalarFn2 timedep_target(double t) {
  const double a = 1.0 - std::cos(2.0 * kPi * t);
  return [a](double x, double v) {
    const double w = std::exp(-25.0 * (x * x + v * v));
    Deriv2 d;
    d.val = a * w;
    d.dx = a * (-50.0 * x) * w;
    d.dv = a * (-50.0 * v) * w;
    d.dxx = a * (2500.0 * x * x - 50.0) * w;
    d.dvv = a * (2500.0 * v * v - 50.0) * w;
    d.dxv = a * (2500.0 * x * v) * w;
    return d;
  };
}

}  // namespace hypokfem

#include "doctest.h"

#include <cmath>
#include <random>

#include "hypokfem/manufactured.hpp"

using namespace hypokfem;

namespace {

constexpr double kPi = 3.14159265358979323846;

// hand-expanded derivatives of S(t) = sin^4(pi t)
double S0(double t) { return std::pow(std::sin(kPi * t), 4); }
double S1(double t) {
  const double s = std::sin(kPi * t), c = std::cos(kPi * t);
  return 4 * kPi * s * s * s * c;
}
double S2(double t) {
  const double s = std::sin(kPi * t), c = std::cos(kPi * t);
  return 4 * kPi * kPi * s * s * (3 * c * c - s * s);
}
double S3(double t) {
  const double s = std::sin(kPi * t), c = std::cos(kPi * t);
  return 4 * kPi * kPi * kPi * (6 * s * c * c * c - 10 * s * s * s * c);
}
double S4(double t) {
  const double s = std::sin(kPi * t), c = std::cos(kPi * t);
  return 4 * kPi * kPi * kPi * kPi *
         (6 * c * c * c * c - 48 * s * s * c * c + 10 * s * s * s * s);
}

}  // namespace

TEST_CASE("jet arithmetic reproduces polynomial partials") {
  const double x0 = 0.37, v0 = -0.22;
  const Jet4 x = Jet4::seed_x(x0), v = Jet4::seed_v(v0);
  const Jet4 p = (x + 2.0 * v) * (x + 2.0 * v);
  CHECK(p.value() == doctest::Approx((x0 + 2 * v0) * (x0 + 2 * v0)));
  CHECK(p.partial(1, 0) == doctest::Approx(2 * (x0 + 2 * v0)));
  CHECK(p.partial(0, 1) == doctest::Approx(4 * (x0 + 2 * v0)));
  CHECK(p.partial(2, 0) == doctest::Approx(2.0));
  CHECK(p.partial(1, 1) == doctest::Approx(4.0));
  CHECK(p.partial(0, 2) == doctest::Approx(8.0));
  CHECK(p.partial(3, 0) == doctest::Approx(0.0));

  const Jet4 q = jet_pow(x, 4);
  CHECK(q.partial(4, 0) == doctest::Approx(24.0));
  CHECK(q.partial(3, 0) == doctest::Approx(24.0 * x0));
}

TEST_CASE("jet elementary functions match chain-rule identities") {
  const double x0 = 0.31, v0 = 0.47;
  const Jet4 xv = Jet4::seed_x(x0) * Jet4::seed_v(v0);
  const Jet4 s = jet_sin(xv);
  CHECK(s.value() == doctest::Approx(std::sin(x0 * v0)));
  CHECK(s.partial(1, 0) == doctest::Approx(v0 * std::cos(x0 * v0)));
  CHECK(s.partial(1, 1) ==
        doctest::Approx(std::cos(x0 * v0) - x0 * v0 * std::sin(x0 * v0)));
  const Jet4 c = jet_cos(xv);
  CHECK(c.partial(0, 1) == doctest::Approx(-x0 * std::sin(x0 * v0)));
  const Jet4 e = jet_exp(Jet4::seed_x(x0));
  CHECK(e.partial(4, 0) == doctest::Approx(std::exp(x0)));
  // sin^2 + cos^2 = 1 holds jet-wise
  const Jet4 one = s * s + c * c;
  CHECK(one.value() == doctest::Approx(1.0));
  for (int a = 0; a <= 4; ++a)
    for (int b = 0; a + b <= 4; ++b)
      if (a + b > 0) CHECK(std::abs(one.partial(a, b)) < 1e-12);
}

TEST_CASE("jet differentiation operators shift coefficients") {
  const Jet4 f = jet_sin(Jet4::seed_x(0.4)) * jet_cos(Jet4::seed_v(-0.3));
  const Jet<3> fx = d_x(f);
  const Jet<3> fv = d_v(f);
  for (int a = 0; a <= 3; ++a)
    for (int b = 0; a + b <= 3; ++b) {
      CHECK(fx.partial(a, b) == doctest::Approx(f.partial(a + 1, b)));
      CHECK(fv.partial(a, b) == doctest::Approx(f.partial(a, b + 1)));
    }
}

TEST_CASE("benchmark solution matches its hand-expanded derivatives") {
  const ScalarFn2 u = benchmark_u();
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    const double x = unif(rng), v = unif(rng);
    const Deriv2 d = u(x, v);
    CHECK(d.val == doctest::Approx(S0(x) * S0(v)).epsilon(1e-12));
    CHECK(d.dx == doctest::Approx(S1(x) * S0(v)).epsilon(1e-12));
    CHECK(d.dv == doctest::Approx(S0(x) * S1(v)).epsilon(1e-12));
    CHECK(d.dxx == doctest::Approx(S2(x) * S0(v)).epsilon(1e-11));
    CHECK(d.dxv == doctest::Approx(S1(x) * S1(v)).epsilon(1e-11));
    CHECK(d.dvv == doctest::Approx(S0(x) * S2(v)).epsilon(1e-11));
  }
}

TEST_CASE("primal forcing applies the transport-diffusion operator") {
  const double eps = 0.07;
  const ScalarFn2 f = primal_forcing(eps);
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    const double x = unif(rng), v = unif(rng);
    const Deriv2 d = f(x, v);
    CHECK(d.val ==
          doctest::Approx(v * S1(x) * S0(v) - eps * S0(x) * S2(v))
              .epsilon(1e-11));
    CHECK(d.dx ==
          doctest::Approx(v * S2(x) * S0(v) - eps * S1(x) * S2(v))
              .epsilon(1e-10));
    CHECK(d.dv == doctest::Approx(S1(x) * (S0(v) + v * S1(v)) -
                                  eps * S0(x) * S3(v))
                      .epsilon(1e-10));
  }
}

TEST_CASE("expression jets agree with the hand expansion up to order four") {
  const double alpha = 0.7, eps = 0.07;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const double x = unif(rng), v = unif(rng);
    const Jet4 ju = eval_jet(BenchmarkExpr::U, alpha, eps, x, v);
    CHECK(ju.partial(0, 0) == doctest::Approx(S0(x) * S0(v)).epsilon(1e-12));
    CHECK(ju.partial(1, 0) == doctest::Approx(S1(x) * S0(v)).epsilon(1e-12));
    CHECK(ju.partial(2, 2) == doctest::Approx(S2(x) * S2(v)).epsilon(1e-10));
    CHECK(ju.partial(0, 4) == doctest::Approx(S0(x) * S4(v)).epsilon(1e-10));

    const Jet4 jf = eval_jet(BenchmarkExpr::Forcing, alpha, eps, x, v);
    CHECK(jf.partial(0, 0) ==
          doctest::Approx(v * S1(x) * S0(v) - eps * S0(x) * S2(v))
              .epsilon(1e-11));

    // the dual expression is alpha times the forcing, jet-wise
    const Jet4 jz = eval_jet(BenchmarkExpr::Dual, alpha, eps, x, v);
    for (int a = 0; a <= 4; ++a)
      for (int b = 0; a + b <= 4; ++b)
        CHECK(jz.partial(a, b) ==
              doctest::Approx(alpha * jf.partial(a, b)).epsilon(1e-10));

    // target = u - v z_x - eps z_vv
    const Jet4 jt = eval_jet(BenchmarkExpr::Target, alpha, eps, x, v);
    const double zx = alpha * (v * S2(x) * S0(v) - eps * S1(x) * S2(v));
    const double zvv =
        alpha * (S1(x) * (2 * S1(v) + v * S2(v)) - eps * S0(x) * S4(v));
    CHECK(jt.partial(0, 0) ==
          doctest::Approx(S0(x) * S0(v) - v * zx - eps * zvv).epsilon(1e-9));
  }
}

TEST_CASE("manufactured control triple satisfies its defining identities") {
  const double alpha = 0.013, eps = 0.05, m = 0.42;
  const OcManufactured mc = oc_manufactured(alpha, eps, m);
  CHECK(mc.alpha == alpha);
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    const double x = unif(rng), v = unif(rng);
    const Deriv2 u = mc.u(x, v);
    const Deriv2 z = mc.z(x, v);
    const Deriv2 f = mc.f(x, v);
    const Deriv2 t = mc.target(x, v);
    // f = K u, z = alpha f
    CHECK(f.val == doctest::Approx(v * u.dx - eps * u.dvv).epsilon(1e-11));
    CHECK(z.val == doctest::Approx(alpha * f.val).epsilon(1e-12));
    CHECK(z.dx == doctest::Approx(alpha * f.dx).epsilon(1e-12));
    CHECK(z.dv == doctest::Approx(alpha * f.dv).epsilon(1e-12));
    // target = u + K* z
    CHECK(t.val ==
          doctest::Approx(u.val - v * z.dx - eps * z.dvv).epsilon(1e-10));
    // commutator flux q = (2 M12 z_x + M22 z_v, M22 z_x)
    const auto q = mc.dual_flux(x, v);
    const double m12 = eps * m * m, m22 = eps * m;
    CHECK(q[0] == doctest::Approx(2 * m12 * z.dx + m22 * z.dv).epsilon(1e-11));
    CHECK(q[1] == doctest::Approx(m22 * z.dx).epsilon(1e-11));
  }
  // solution vanishes on the whole boundary
  CHECK(mc.u(1.0, 0.3).val == doctest::Approx(0.0));
  CHECK(mc.u(0.3, -1.0).val == doctest::Approx(0.0));
}

TEST_CASE("time-dependent benchmark") {
  const double eps = 0.1, t = 0.6;
  const ScalarFn2 u0 = benchmark_u();
  const ScalarFn2 ut = timedep_exact(t);
  const ScalarFn2 ft = timedep_forcing(eps, t);
  const ScalarFn2 f0 = primal_forcing(eps);
  for (const auto& [x, v] : {std::pair{0.3, 0.4}, {-0.7, 0.1}, {0.05, -0.9}}) {
    CHECK(ut(x, v).val == doctest::Approx(std::sin(t) * u0(x, v).val));
    CHECK(ut(x, v).dx == doctest::Approx(std::sin(t) * u0(x, v).dx));
    // u_t + K u = cos(t) u + sin(t) (v u_x - eps u_vv)
    CHECK(ft(x, v).val == doctest::Approx(std::cos(t) * u0(x, v).val +
                                          std::sin(t) * f0(x, v).val));
  }
}

TEST_CASE("control targets") {
  const ScalarFn2 ell = target_ellipse();
  CHECK(ell(0.0, 0.0).val == doctest::Approx(1.0));
  CHECK(ell(0.15, 0.0).val ==
        doctest::Approx(std::sqrt(1.0 - 0.15 * 0.15 / 0.09)));
  CHECK(ell(0.0, 0.25).val ==
        doctest::Approx(std::sqrt(1.0 - 0.25 * 0.25 / 0.25)));
  CHECK(ell(0.4, 0.0).val == doctest::Approx(0.0));
  CHECK(ell(0.9, 0.9).val == doctest::Approx(0.0));

  const ScalarFn2 disc = target_disc();
  CHECK(disc(0.1, 0.2).val == doctest::Approx(1.0));
  CHECK(disc(0.0, 0.0).val == doctest::Approx(1.0));
  CHECK(disc(0.2, 0.2).val == doctest::Approx(0.0));
  CHECK(disc(0.9, 0.0).val == doctest::Approx(0.0));

  const ScalarFn2 pulse = timedep_target(0.5);
  CHECK(pulse(0.1, 0.1).val ==
        doctest::Approx(2.0 * std::exp(-25.0 * 0.02)));
  CHECK(timedep_target(0.0)(0.1, 0.1).val == doctest::Approx(0.0));
  CHECK(timedep_target(1.0)(0.2, -0.1).val == doctest::Approx(0.0));
}

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "qhyper/identities.hpp"
#include "qhyper/params.hpp"
#include "qhyper/quadrature.hpp"

using namespace qhyper;

namespace {

QContext ctx_at(double q) {
  QContext c;
  c.q = q;
  return c;
}

}  // namespace

TEST(CircleQuadrature, FourierOrthogonality) {
  const int N = 32;
  for (int k = -N + 1; k < N; ++k) {
    const cplx v = circle_quadrature([k](cplx z) { return std::pow(z, k); }, N);
    if (k == 0) {
      EXPECT_NEAR(std::abs(v - 1.0), 0.0, 1e-14);
    } else {
      EXPECT_NEAR(std::abs(v), 0.0, 1e-14) << "k = " << k;
    }
  }
}

TEST(CircleQuadrature, GeometricSeriesConstantTerm) {
  const cplx a = std::polar(0.5, 0.8);
  const cplx v = circle_quadrature([a](cplx z) { return z / (z - a); }, 64);
  EXPECT_NEAR(std::abs(v - 1.0), 0.0, 1e-12);
}

TEST(CircleQuadrature, NodeOverloadSeesAngles) {
  const cplx v = circle_quadrature(
      [](const CircleNode& n) { return cplx{std::cos(n.theta) * std::cos(n.theta), 0.0}; }, 16);
  EXPECT_NEAR(v.real(), 0.5, 1e-15);
}

TEST(CircleQuadrature, NonFiniteNodeReported) {
  try {
    circle_quadrature([](const CircleNode& n) { return n.theta == 0.0 ? cplx{NAN, 0} : 1.0; }, 8);
    FAIL() << "expected EvaluationError";
  } catch (const EvaluationError& e) {
    EXPECT_EQ(e.node(), 0u);
  }
}

TEST(BilateralSum, TwoSidedGeometric) {
  const auto c = ctx_at(0.5);
  const cplx v = bilateral_sum([](int m) { return cplx{std::pow(0.5, std::abs(m)), 0.0}; }, c);
  EXPECT_NEAR(std::abs(v - 3.0), 0.0, 1e-12);
}

TEST(BilateralSum, ConstantTermDiverges) {
  EXPECT_THROW(bilateral_sum([](int) { return cplx{1.0, 0.0}; }, ctx_at(0.5)),
               TailDivergenceError);
}

TEST(BilateralSum, OrderIndependent) {
  const auto c = ctx_at(0.5);
  auto term = [](int m) {
    return std::polar(std::exp(-0.3 * m * m), 0.7 * m) * (m % 3 == 0 ? 2.0 : -1.3);
  };
  const cplx fixed = bilateral_sum(term, c);
  // Ascending and descending plain loops over a range wider than the cutoff.
  cplx up{0.0, 0.0};
  cplx down{0.0, 0.0};
  for (int m = -60; m <= 60; ++m) up += term(m);
  for (int m = 60; m >= -60; --m) down += term(m);
  EXPECT_NEAR(std::abs(fixed - up), 0.0, 1e-13 * std::abs(up));
  EXPECT_NEAR(std::abs(fixed - down), 0.0, 1e-13 * std::abs(up));
}

TEST(TorusIntegrate, ZeroDimensional) {
  const auto c = ctx_at(0.5);
  const cplx v = sun_torus_integrate(
      [](const TorusPoint& p) { return p.z[0] * 3.0 + static_cast<double>(p.m[0]); }, 1, c);
  EXPECT_EQ(v, cplx(3.0, 0.0));
}

TEST(TorusIntegrate, OrthogonalityInFreeFugacity) {
  auto c = ctx_at(0.5);
  c.quad_points = 16;
  c.sum_m_max = 10;
  for (int n : {2, 3}) {
    for (int k : {1, 2, -3}) {
      const cplx v = sun_torus_integrate(
          [k](const TorusPoint& p) {
            double w = 1.0;
            for (int m : p.m) w *= std::pow(0.1, 2 * std::abs(m));
            return std::pow(p.z[0], k) * w;
          },
          n, c);
      EXPECT_NEAR(std::abs(v), 0.0, 1e-14) << "n = " << n << " k = " << k;
    }
  }
}

TEST(TorusIntegrate, TwoComponentsMatchExplicitCircle) {
  auto c = ctx_at(0.4);
  c.quad_points = 48;
  auto f = [](cplx z1, cplx z2, int m1, int m2) {
    const cplx a{0.3, 0.2};
    return (1.0 + a * z1 + std::conj(a) * z2 * z2) * std::exp(-0.5 * (m1 * m1 + m2 * m2)) *
           std::polar(1.0, 0.2 * m1);
  };
  const cplx v = sun_torus_integrate(
      [&](const TorusPoint& p) { return f(p.z[0], p.z[1], p.m[0], p.m[1]); }, 2, c);
  // z1 = e^{i phi}, z2 = 1/z1, m2 = -m1, phi on shifted nodes, 1/2! Weyl factor.
  cplx oracle{0.0, 0.0};
  const int N = 64;
  for (int m = -30; m <= 30; ++m) {
    cplx s{0.0, 0.0};
    for (int j = 0; j < N; ++j) {
      const cplx z = std::polar(1.0, kTwoPi * (j + 0.5) / N);
      s += f(z, 1.0 / z, m, -m);
    }
    oracle += s / static_cast<double>(N);
  }
  oracle *= 0.5;
  EXPECT_NEAR(std::abs(v - oracle), 0.0, 1e-13 * std::abs(oracle));
}

TEST(TorusIntegrate, ThreeComponentConstraints) {
  auto c = ctx_at(0.5);
  c.quad_points = 8;
  c.sum_m_max = 3;
  bool ok = true;
  sun_torus_integrate(
      [&](const TorusPoint& p) {
        const cplx prod = p.z[0] * p.z[1] * p.z[2];
        ok = ok && std::abs(prod - 1.0) < 1e-14 && p.m[0] + p.m[1] + p.m[2] == 0;
        return cplx{std::exp(-5.0 * (p.m[0] * p.m[0] + p.m[1] * p.m[1])), 0.0};
      },
      3, c);
  EXPECT_TRUE(ok);
}

TEST(PoleGuard, InteriorModuliPass) {
  const double q = 0.5;
  auto c = ctx_at(q);
  c.sum_m_max = 4;
  std::vector<FlavorParam> f(6);
  for (int i = 0; i < 6; ++i) f[i].fugacity = std::polar(std::pow(q, 1.0 / 6), 0.3 * i);
  EXPECT_GT(pole_guard(f, c), 0.0);
}

TEST(PoleGuard, PoleOnContourRaises) {
  auto c = ctx_at(0.5);
  c.sum_m_max = 4;
  std::vector<FlavorParam> f(6);
  for (auto& x : f) x.fugacity = std::pow(0.5, 1.0 / 6);
  f[2].fugacity = std::polar(1.0, 0.4);
  try {
    pole_guard(f, c);
    FAIL() << "expected PoleError";
  } catch (const PoleError& e) {
    EXPECT_EQ(e.index(), 2u);
  }
}

TEST(PoleGuard, MatchesBruteForceEnumeration) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const double q = 0.5;
    auto c = ctx_at(q);
    c.sum_m_max = 10;
    const auto ps = gen_balanced_params(seed, IdentityKind::i_transform, 2, q);
    const auto flavors = detail::i_flavors(ps.t_flavors(), ps.s_flavors());
    double brute = INFINITY;
    for (const auto& f : flavors) {
      const double a = std::abs(f.fugacity);
      for (int m = -c.sum_m_max; m <= c.sum_m_max; ++m) {
        for (int k = 0; k < 300; ++k) {
          if (f.coupling == Coupling::z) {
            const double r = std::pow(q, -k - 0.5 * std::abs(f.charge + m)) / a;
            brute = std::fmin(brute, std::fabs(r - 1.0));
          } else {
            const double r = a * std::pow(q, k + 0.5 * std::abs(f.charge - m));
            brute = std::fmin(brute, std::fabs(r - 1.0));
          }
        }
      }
    }
    EXPECT_NEAR(pole_guard(flavors, c), brute, 1e-12 * brute) << "seed " << seed;
  }
}

TEST(Generator, SixFlavorBalanced) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ps = gen_balanced_params(seed, IdentityKind::six_flavor, 1, 0.5);
    ASSERT_EQ(ps.flavors.size(), 6u);
    cplx prod{1.0, 0.0};
    int charges = 0;
    for (const auto& f : ps.flavors) {
      prod *= f.fugacity;
      charges += f.charge;
    }
    EXPECT_NEAR(std::abs(prod - 0.5), 0.0, 1e-14);
    EXPECT_EQ(charges, 0);
    EXPECT_NO_THROW(check_balancing(ps));
  }
}

TEST(Generator, ITransformBalanced) {
  for (int n : {1, 2, 3}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto ps = gen_balanced_params(seed, IdentityKind::i_transform, n, 0.6);
      EXPECT_EQ(ps.flavors.size(), static_cast<std::size_t>(4 * n));
      EXPECT_NO_THROW(check_balancing(ps));
      int tau = 0;
      for (const auto& f : ps.t_flavors()) tau += f.charge;
      EXPECT_EQ(((tau % n) + n) % n, 0);
    }
  }
}

TEST(Generator, Deterministic) {
  for (auto kind : {IdentityKind::six_flavor, IdentityKind::i_transform, IdentityKind::star_triangle,
                    IdentityKind::star_star, IdentityKind::ybe}) {
    const auto a = gen_balanced_params(42, kind, 2, 0.5);
    const auto b = gen_balanced_params(42, kind, 2, 0.5);
    ASSERT_EQ(a.flavors.size(), b.flavors.size());
    for (std::size_t i = 0; i < a.flavors.size(); ++i) {
      EXPECT_EQ(a.flavors[i].fugacity, b.flavors[i].fugacity);
      EXPECT_EQ(a.flavors[i].charge, b.flavors[i].charge);
    }
    EXPECT_EQ(a.spectral, b.spectral);
    const auto other = gen_balanced_params(43, kind, 2, 0.5);
    EXPECT_NE(a.flavors[0].fugacity, other.flavors[0].fugacity);
  }
}

TEST(Generator, DefaultProfileClearsPoles) {
  for (double q : {0.4, 0.5, 0.6}) {
    const auto c = ctx_at(q);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto ps = gen_balanced_params(seed, IdentityKind::six_flavor, 1, q);
      EXPECT_NO_THROW(pole_guard(ps, c)) << "q = " << q << " seed " << seed;
    }
  }
}

TEST(Generator, LatticeShapes) {
  const auto st = gen_balanced_params(3, IdentityKind::star_triangle, 1, 0.5);
  EXPECT_EQ(st.flavors.size(), 3u);
  EXPECT_NEAR(st.spectral[0] + st.spectral[1] + st.spectral[2], 0.5, 1e-14);
  const auto ss = gen_balanced_params(3, IdentityKind::star_star, 2, 0.5);
  EXPECT_EQ(ss.flavors.size(), 8u);
  double sum = 0.0;
  for (double v : ss.spectral) sum += v;
  EXPECT_NEAR(sum, 2.0, 1e-14);
  EXPECT_THROW(gen_balanced_params(1, IdentityKind::six_flavor, 1, 1.0), PreconditionError);
}

TEST(Generator, BalancingViolationDetected) {
  auto ps = gen_balanced_params(5, IdentityKind::six_flavor, 1, 0.5);
  ps.flavors[0].fugacity *= 1.0 + 1e-9;
  EXPECT_THROW(check_balancing(ps), PreconditionError);
  ps = gen_balanced_params(5, IdentityKind::six_flavor, 1, 0.5);
  ps.flavors[0].charge += 1;
  EXPECT_THROW(check_balancing(ps), PreconditionError);
}

// Convergence on the seeded six-flavor integrand.

class SixFlavorIntegrand : public ::testing::Test {
 protected:
  static cplx lhs_at(int nodes, int mmax) {
    auto c = ctx_at(0.5);
    c.quad_points = nodes;
    c.sum_m_max = mmax;
    c.rel_tol = 1.0;  // only the value is of interest here
    CheckOptions opt;
    opt.refine = false;
    const auto ps = gen_balanced_params(7, IdentityKind::six_flavor, 1, 0.5);
    return check_sum_integral(ps, c, opt).lhs;
  }
};

TEST_F(SixFlavorIntegrand, NodeDoublingAgrees) {
  const cplx a = lhs_at(512, 80);
  const cplx b = lhs_at(1024, 80);
  EXPECT_NEAR(std::abs(a - b), 0.0, 1e-10 * std::abs(b));
}

TEST_F(SixFlavorIntegrand, ChargeCutoffDoublingAgrees) {
  const cplx a = lhs_at(512, 80);
  const cplx b = lhs_at(512, 160);
  EXPECT_NEAR(std::abs(a - b), 0.0, 1e-10 * std::abs(b));
}

TEST_F(SixFlavorIntegrand, GeometricConvergenceInNodes) {
  const cplx ref = lhs_at(1024, 80);
  double prev = INFINITY;
  for (int N : {16, 32, 64}) {
    const double err = std::abs(lhs_at(N, 80) - ref);
    // Each doubling at least squares down the error ratio; ask for a factor 4.
    if (err > 1e-14 * std::abs(ref)) {
      EXPECT_LT(err, prev / 4.0) << "N = " << N;
    }
    prev = err;
  }
}

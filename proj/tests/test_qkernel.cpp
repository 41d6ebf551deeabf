#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "qhyper/qkernel.hpp"

using namespace qhyper;

namespace {

QContext ctx_at(double q) {
  QContext c;
  c.q = q;
  return c;
}

// Euler's pentagonal series sum_k (-1)^k q^{k(3k-1)/2}, k over all integers.
// Summed in long double with compensation; at q = 0.9 the terms cancel badly.
double pentagonal(double q) {
  long double sum = 1.0L;
  long double c = 0.0L;
  auto add = [&](long double v) {
    const long double y = v - c;
    const long double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  };
  for (int k = 1; k < 400; ++k) {
    const long double sign = (k % 2) ? -1.0L : 1.0L;
    const long double a = std::pow(static_cast<long double>(q), k * (3.0L * k - 1) / 2);
    const long double b = std::pow(static_cast<long double>(q), k * (3.0L * k + 1) / 2);
    add(sign * a);
    add(sign * b);
    if (a < 1e-30L) break;
  }
  return static_cast<double>(sum);
}

}  // namespace

TEST(QpochInf, TrivialArguments) {
  const auto c = ctx_at(0.5);
  EXPECT_EQ(qpoch_inf(0.0, c), cplx(1.0, 0.0));
  EXPECT_EQ(qpoch_inf(1.0, c), cplx(0.0, 0.0));
}

TEST(QpochInf, EulerFunctionAtHalf) {
  const auto c = ctx_at(0.5);
  const cplx v = qpoch_inf(0.5, c);
  EXPECT_NEAR(v.real(), pentagonal(0.5), 1e-14);
  EXPECT_NEAR(v.real(), 0.2887880951, 1e-10);
  EXPECT_EQ(v.imag(), 0.0);
}

TEST(QpochInf, MatchesPentagonalSeries) {
  for (double q : {0.3, 0.5, 0.7, 0.9}) {
    const cplx v = qpoch_inf(q, ctx_at(q));
    EXPECT_NEAR(v.real(), pentagonal(q), 1e-12) << "q = " << q;
  }
}

TEST(QpochInf, TruncationDoublingWithinTailBound) {
  const std::vector<cplx> ws{{0.3, 0.4}, {-0.9, 0.1}, {0.0, 1.0}, {0.99, 0.0}, {-1.0, 0.0}};
  for (double q : {0.2, 0.5, 0.9}) {
    for (cplx w : ws) {
      const std::int64_t n = 40;
      const cplx a = qpoch_truncated(w, q, n);
      const cplx b = qpoch_truncated(w, q, 2 * n);
      const double bound = qpoch_tail_bound(std::abs(w), q, n);
      // |log(b/a)| <= bound  =>  |b - a| <= |a| (e^bound - 1)
      EXPECT_LE(std::abs(b - a), std::abs(a) * std::expm1(bound) + 1e-15)
          << "q = " << q << " w = " << w;
    }
  }
}

TEST(QpochInf, AgreesWithPlainProduct) {
  const auto c = ctx_at(0.6);
  const cplx w{0.7, -0.5};
  EXPECT_NEAR(std::abs(qpoch_inf(w, c) - qpoch_truncated(w, 0.6, 400)), 0.0, 1e-14);
}

TEST(QpochInf, RejectsBadNome) {
  EXPECT_THROW(qpoch_inf(0.1, ctx_at(1.0)), PreconditionError);
  EXPECT_THROW(qpoch_inf(0.1, ctx_at(0.0)), PreconditionError);
  EXPECT_THROW(qpoch_inf(0.1, ctx_at(-0.2)), PreconditionError);
}

TEST(QpochInf, TruncationCapRaises) {
  auto c = ctx_at(0.999);
  c.product_truncation = 10;
  EXPECT_THROW(qpoch_inf(0.5, c), TruncationError);
}

TEST(QpochInf, LargeArgumentStaysFinite) {
  // 1e6 * q^i crosses 1 only after ~20 factors; the scaled form keeps it finite.
  const auto c = ctx_at(0.5);
  const ScaledComplex s = qpoch_scaled(cplx{1e6, 0.0}, c);
  EXPECT_TRUE(std::isfinite(s.log_abs()));
}

TEST(QpochRatio, Telescoping) {
  const auto c = ctx_at(0.5);
  const double w = 0.3;
  const std::array<std::pair<cplx, cplx>, 1> one{{{0.5 * w, w}}};
  EXPECT_NEAR(qpoch_ratio(one, c).real(), 1.0 / (1.0 - w), 1e-14);

  for (double q : {0.3, 0.5, 0.8}) {
    const cplx z{0.2, 0.6};
    for (int k = 1; k <= 5; ++k) {
      const std::array<std::pair<cplx, cplx>, 1> p{{{std::pow(q, k) * z, z}}};
      cplx expect{1.0, 0.0};
      for (int j = 0; j < k; ++j) expect /= (1.0 - std::pow(q, j) * z);
      EXPECT_NEAR(std::abs(qpoch_ratio(p, ctx_at(q)) - expect), 0.0,
                  4e-15 * std::abs(expect))
          << "q = " << q << " k = " << k;
    }
  }
}

TEST(QpochRatio, IdenticalArgumentsGiveOne) {
  const std::array<std::pair<cplx, cplx>, 2> p{{{{0.4, 0.1}, {0.4, 0.1}}, {-0.7, -0.7}}};
  EXPECT_NEAR(std::abs(qpoch_ratio(p, ctx_at(0.5)) - 1.0), 0.0, 1e-15);
}

TEST(QpochRatio, MatchesComposedProducts) {
  const double q = 0.45;
  const std::array<std::pair<cplx, cplx>, 4> p{{{{0.3, 0.2}, {-0.5, 0.1}},
                                                {{0.9, 0.0}, {0.1, -0.8}},
                                                {{-0.2, 0.7}, {0.6, 0.6}},
                                                {{0.05, 0.0}, {0.0, -0.95}}}};
  // Oracle: plain products at a fixed, generous factor count.
  cplx expect{1.0, 0.0};
  for (const auto& [a, b] : p) expect *= qpoch_truncated(a, q, 200) / qpoch_truncated(b, q, 200);
  EXPECT_NEAR(std::abs(qpoch_ratio(p, ctx_at(q)) - expect), 0.0, 1e-13 * std::abs(expect));
}

TEST(QpochRatio, DenominatorZeroIsPoleWithIndex) {
  const std::array<std::pair<cplx, cplx>, 3> p{{{0.1, 0.2}, {0.3, 0.25}, {0.5, 1.0}}};
  try {
    qpoch_ratio(p, ctx_at(0.5));
    FAIL() << "expected PoleError";
  } catch (const PoleError& e) {
    EXPECT_EQ(e.index(), 2u);
  }
}

TEST(QpochRatio, NumeratorZeroGivesZero) {
  const std::array<std::pair<cplx, cplx>, 1> p{{{2.0, 0.1}}};  // 1 - 2 * 0.5 = 0
  EXPECT_EQ(qpoch_ratio(p, ctx_at(0.5)), cplx(0.0, 0.0));
}

TEST(ChiralBlock, NegativeChargeMonomial) {
  const auto c = ctx_at(0.4);
  const cplx x = std::polar(0.8, 0.9);
  for (int p = 1; p <= 3; ++p) {
    // B(x, -p) from its defining Pochhammer ratio, |q^{-p/2} x| < 1 here.
    const double qh = std::pow(0.4, -0.5 * p);
    const cplx direct = qpoch_truncated(0.4 * qh / x, 0.4, 300) / qpoch_truncated(qh * x, 0.4, 300);
    if (std::abs(qh * x) >= 1.0) continue;
    const cplx v = chiral_block(x, -p, c).value();
    EXPECT_NEAR(std::abs(v - direct), 0.0, 1e-12 * std::abs(direct)) << "p = " << p;
  }
}

TEST(ChiralBlock, ZeroChargeDefinition) {
  const auto c = ctx_at(0.5);
  const cplx x = std::polar(1.0, 0.3);
  const cplx expect = qpoch_truncated(0.5 / x, 0.5, 200) / qpoch_truncated(x, 0.5, 200);
  EXPECT_NEAR(std::abs(chiral_block(x, 0, c).value() - expect), 0.0, 1e-13 * std::abs(expect));
}

TEST(KAlpha, Symmetric) {
  const auto c = ctx_at(0.5);
  EXPECT_NEAR(k_alpha(0.05, c), k_alpha(-0.05, c), 1e-12);
  for (double a : {0.01, 0.07, 0.12}) {
    EXPECT_NEAR(k_alpha(a, c), k_alpha(-a, c), 1e-12 * k_alpha(a, c));
  }
}

TEST(KAlpha, ZeroStableUnderDoubledCutoff) {
  const auto c = ctx_at(0.5);
  // Direct summation of the defining series at two cutoffs.
  auto direct = [](int terms) {
    double s = 0.0;
    for (int n = 1; n <= terms; ++n) {
      const double qn = std::pow(0.5, n);
      s += 2.0 * qn / (n * (1.0 - qn * qn));
    }
    return std::exp(s);
  };
  const double k0 = k_alpha(0.0, c);
  EXPECT_GT(k0, 0.0);
  EXPECT_NEAR(direct(60), direct(120), 1e-12);
  EXPECT_NEAR(k0, direct(120), 1e-12);
}

TEST(KAlpha, DivergentDomainRejected) {
  const auto c = ctx_at(0.5);
  const double edge = -std::log(0.5) / 4.0;
  EXPECT_THROW(k_alpha(edge, c), DomainError);
  EXPECT_THROW(k_alpha(-1.1 * edge, c), DomainError);
}

TEST(KCrossing, ProductOracleAndRatio) {
  const double q = 0.5;
  const auto c = ctx_at(q);
  const double s = 0.17;
  const double expect = (qpoch_truncated(std::pow(q, 2 * s), q * q, 200) /
                         qpoch_truncated(std::pow(q, 2 - 2 * s), q * q, 200))
                            .real();
  EXPECT_NEAR(k_crossing(s, c), expect, 1e-14 * expect);
  // k(s) / k(1/2 - s) = (q^{2s};q) / (q^{1-2s};q)
  const double lhs = k_crossing(s, c) / k_crossing(0.5 - s, c);
  const double rhs = (qpoch_truncated(std::pow(q, 2 * s), q, 200) /
                      qpoch_truncated(std::pow(q, 1 - 2 * s), q, 200))
                         .real();
  EXPECT_NEAR(lhs, rhs, 1e-13 * rhs);
}

TEST(Gamma, ClassicalValues) {
  EXPECT_NEAR(std::abs(gamma_fn(1.0) - 1.0), 0.0, 1e-14);
  EXPECT_NEAR(gamma_fn(0.5).real(), std::sqrt(kPi), 1e-13);
  EXPECT_NEAR(gamma_fn(0.5).real(), 1.7724539, 1e-7);
  EXPECT_NEAR(gamma_fn(2.5).real(), 1.5 * 0.5 * std::sqrt(kPi), 1e-13);
  EXPECT_NEAR(gamma_fn(2.5).real(), 1.3293404, 1e-7);
}

TEST(Gamma, RecurrenceOnComplexPoints) {
  for (cplx x : {cplx{0.3, 0.2}, cplx{2.7, -1.4}, cplx{-1.3, 0.5}, cplx{5.5, 3.0}}) {
    const cplx lhs = gamma_fn(x + 1.0);
    const cplx rhs = x * gamma_fn(x);
    EXPECT_NEAR(std::abs(lhs - rhs), 0.0, 1e-12 * std::abs(rhs)) << x;
  }
}

TEST(Gamma, ReflectionFormula) {
  const cplx x{0.3, 0.7};
  const cplx lhs = gamma_fn(x) * gamma_fn(1.0 - x);
  const cplx rhs = kPi / std::sin(kPi * x);
  EXPECT_NEAR(std::abs(lhs - rhs), 0.0, 1e-12 * std::abs(rhs));
}

TEST(Gamma, PolesRaise) {
  EXPECT_THROW(gamma_fn(0.0), PoleError);
  EXPECT_THROW(gamma_fn(-3.0), PoleError);
  EXPECT_NO_THROW(gamma_fn(-2.5));
}

TEST(ClassicalLimit, Examples) {
  EXPECT_EQ(classical_limit_ratio(1.7, 1.7, ctx_at(0.9)), cplx(1.0, 0.0));
  EXPECT_NEAR(std::abs(classical_limit_ratio(2.0, 1.0, ctx_at(0.999)) - 1.0), 0.0, 1e-2);
  const cplx oracle = gamma_fn(1.0) / gamma_fn(2.5);
  EXPECT_NEAR(oracle.real(), 0.752253, 1e-6);
  const cplx v = classical_limit_ratio(2.5, 1.0, ctx_at(1.0 - 1e-4));
  EXPECT_NEAR(std::abs(v - oracle), 0.0, 1e-3);
}

TEST(ClassicalLimit, MonotoneApproach) {
  const cplx oracle = gamma_fn(1.0) / gamma_fn(2.5);
  double prev = INFINITY;
  for (int k = 4; k <= 10; ++k) {
    const double q = 1.0 - std::ldexp(1.0, -k);
    const double dev = std::abs(classical_limit_ratio(2.5, 1.0, ctx_at(q)) - oracle);
    EXPECT_LE(dev, prev) << "k = " << k;
    prev = dev;
  }
}

#pragma once

// Scalar special functions: infinite q-Pochhammer symbols and their ratios,
// the weight normalizations, Euler's gamma function and the q -> 1 ratio.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <utility>

#include "qhyper/context.hpp"
#include "qhyper/error.hpp"
#include "qhyper/scaled_complex.hpp"

namespace qhyper {

namespace detail {

// A factor this close to zero is treated as an exact zero of the product.
inline constexpr double kFactorZeroTol = 1e-13;

struct ProductOutcome {
  ScaledComplex value;
  bool hit_zero = false;
  std::int64_t factors = 0;
};

// prod_{i>=0} (1 - w q^i), stopping once |w| q^n / ((1-q)(1-|w| q^n)) is
// below tail_tol. The bound dominates |log| of the discarded tail.
// Factors are accumulated in extended precision with exact power-of-two
// rescaling and rounded once at the end, so the truncated product is
// correct to about an ulp.
inline ProductOutcome certified_product(cplx w, const QContext& ctx) {
  using ld = long double;
  ProductOutcome out;
  const double q = ctx.q;
  const ld log_q = std::log(static_cast<ld>(q));
  const double abs_w = std::abs(w);
  if (!std::isfinite(abs_w)) {
    throw PreconditionError("qpoch_inf: non-finite argument");
  }
  ld wr = w.real();
  ld wim = w.imag();
  double abs_wi = abs_w;
  ld pr = 1.0L;
  ld pi = 0.0L;
  std::int64_t exp2 = 0;
  auto finish = [&] {
    out.value = ScaledComplex::from_parts(
        {static_cast<double>(pr), static_cast<double>(pi)}, exp2);
  };
  const double inv_one_minus_q = 1.0 / (1.0 - q);
  for (std::int64_t i = 0;; ++i) {
    if (abs_wi < 1.0 &&
        abs_wi * inv_one_minus_q / (1.0 - abs_wi) < ctx.tail_tol) {
      out.factors = i;
      finish();
      return out;
    }
    if (i >= ctx.product_truncation) {
      throw TruncationError(
          "qpoch_inf: tail bound not reached within " +
          std::to_string(ctx.product_truncation) + " factors (|w| = " +
          std::to_string(abs_w) + ", q = " + std::to_string(q) + ")");
    }
    const ld fr = 1.0L - wr;
    const ld fi = -wim;
    if (fr * fr + fi * fi <= static_cast<ld>(kFactorZeroTol) * kFactorZeroTol) {
      out.value = ScaledComplex::zero();
      out.hit_zero = true;
      out.factors = i + 1;
      return out;
    }
    const ld r = pr * fr - pi * fi;
    pi = pr * fi + pi * fr;
    pr = r;
    if ((i + 1) % 64 == 0) {
      int e = 0;
      std::frexp(std::fmax(std::fabs(pr), std::fabs(pi)), &e);
      pr = std::ldexp(pr, -e);
      pi = std::ldexp(pi, -e);
      exp2 += e;
      // Re-anchor q^i to avoid drift from repeated multiplication.
      const ld scale = std::exp(static_cast<ld>(i + 1) * log_q);
      wr = static_cast<ld>(w.real()) * scale;
      wim = static_cast<ld>(w.imag()) * scale;
      abs_wi = abs_w * static_cast<double>(scale);
    } else {
      wr *= q;
      wim *= q;
      abs_wi *= q;
    }
  }
}

}  // namespace detail

/// Infinite q-Pochhammer symbol (w;q)_inf in scaled form. The truncation is
/// certified against ctx.tail_tol; an exactly vanishing factor yields zero.
inline ScaledComplex qpoch_scaled(cplx w, const QContext& ctx) {
  return detail::certified_product(w, ctx).value;
}

/// (w;q)_inf = prod_{i>=0} (1 - w q^i).
inline cplx qpoch_inf(cplx w, const QContext& ctx) {
  ctx.validate();
  return qpoch_scaled(w, ctx).value();
}

/// Plain product of exactly `factors` terms, no scaling and no certificate.
/// Used as a second evaluation path.
inline cplx qpoch_truncated(cplx w, double q, std::int64_t factors) {
  cplx p{1.0, 0.0};
  cplx wi = w;
  for (std::int64_t i = 0; i < factors; ++i) {
    p *= (1.0 - wi);
    wi *= q;
  }
  return p;
}

/// Bound on |log| of the tail dropped by qpoch_truncated(w, q, factors).
inline double qpoch_tail_bound(double abs_w, double q, std::int64_t factors) {
  const double t = abs_w * std::pow(q, static_cast<double>(factors));
  if (t >= 1.0) return INFINITY;
  return t / ((1.0 - q) * (1.0 - t));
}

/// prod_k (num_k;q)_inf / (den_k;q)_inf in scaled form.
inline ScaledComplex qpoch_ratio_scaled(
    std::span<const std::pair<cplx, cplx>> pairs, const QContext& ctx) {
  ScaledComplex acc;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto den = detail::certified_product(pairs[k].second, ctx);
    if (den.hit_zero) {
      throw PoleError("qpoch_ratio: denominator Pochhammer vanishes (pair " +
                          std::to_string(k) + ", factor " +
                          std::to_string(den.factors - 1) + ")",
                      k);
    }
    const auto num = detail::certified_product(pairs[k].first, ctx);
    if (num.hit_zero) return ScaledComplex::zero();
    acc *= num.value;
    acc /= den.value;
  }
  return acc;
}

/// prod_k (num_k;q)_inf / (den_k;q)_inf, evaluated without intermediate
/// overflow. Throws PoleError carrying the offending pair index.
inline cplx qpoch_ratio(std::span<const std::pair<cplx, cplx>> pairs,
                        const QContext& ctx) {
  ctx.validate();
  return qpoch_ratio_scaled(pairs, ctx).value();
}

/// Chiral block B(x, k) = (q^{1+k/2}/x;q)_inf / (q^{k/2} x;q)_inf for an
/// integer charge k. Negative charges use
///   B(x, -p) = (-q^{1/2}/x)^p B(x, p),
/// which keeps both Pochhammer arguments small.
inline ScaledComplex chiral_block(cplx x, int k, const QContext& ctx) {
  const int p = k < 0 ? -k : k;
  const double qh = qpow(ctx.q, 0.5 * p);
  const std::array<std::pair<cplx, cplx>, 1> pair{
      {{ctx.q * qh / x, qh * x}}};
  ScaledComplex b = qpoch_ratio_scaled(pair, ctx);
  if (k < 0 && !b.is_zero()) {
    const cplx mono = -std::sqrt(ctx.q) / x;
    for (int i = 0; i < p; ++i) b.mul(mono);
  }
  return b;
}

/// Printed normalization
///   k(alpha) = exp( - sum_{n != 0} e^{4 alpha n} / (n (q^n - q^{-n})) ).
/// Requires |4 alpha| < -ln q - margin.
inline double k_alpha(SpectralParam alpha, const QContext& ctx,
                      double margin = 0.05) {
  ctx.validate();
  const double lq = -std::log(ctx.q);
  if (!(std::fabs(4.0 * alpha) < lq - margin)) {
    throw DomainError("k_alpha: |4 alpha| = " +
                      std::to_string(std::fabs(4.0 * alpha)) +
                      " outside convergence domain (< " +
                      std::to_string(lq - margin) + ")");
  }
  // Pair n and -n: each pair contributes
  //   (e^{4 alpha n} + e^{-4 alpha n}) q^n / (n (1 - q^{2n})).
  double sum = 0.0;
  const double ratio = std::exp(4.0 * std::fabs(alpha)) * ctx.q;
  for (int n = 1; n < 100000; ++n) {
    const double qn = std::pow(ctx.q, n);
    const double term = (std::exp(4.0 * alpha * n) + std::exp(-4.0 * alpha * n)) *
                        qn / (n * (1.0 - qn * qn));
    sum += term;
    // Remaining terms are dominated by a geometric series of this ratio.
    if (term * ratio / (1.0 - ratio) < ctx.tail_tol * std::fabs(sum)) break;
  }
  return std::exp(sum);
}

/// Normalization (q^{2s};q^2)_inf / (q^{2-2s};q^2)_inf. It satisfies
/// k(s) / k(1/2 - s) = (q^{2s};q)_inf / (q^{1-2s};q)_inf, the relation the
/// star-triangle relation needs from the weight normalization.
inline double k_crossing(SpectralParam s, const QContext& ctx) {
  ctx.validate();
  QContext sq = ctx;
  sq.q = ctx.q * ctx.q;
  const std::array<std::pair<cplx, cplx>, 1> pair{
      {{qpow(ctx.q, 2.0 * s), qpow(ctx.q, 2.0 - 2.0 * s)}}};
  return qpoch_ratio_scaled(pair, sq).value().real();
}

/// Euler gamma function for complex argument (Lanczos, g = 7, n = 9, with
/// reflection for Re x < 1/2).
inline cplx gamma_fn(cplx x) {
  if (x.imag() == 0.0 && x.real() <= 0.0 &&
      std::fabs(x.real() - std::round(x.real())) < 1e-14) {
    throw PoleError("gamma_fn: pole at non-positive integer " +
                        std::to_string(x.real()),
                    0);
  }
  static constexpr std::array<double, 9> kCoef{
      0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
      771.32342877765313,   -176.61502916214059,   12.507343278686905,
      -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
  if (x.real() < 0.5) {
    return kPi / (std::sin(kPi * x) * gamma_fn(1.0 - x));
  }
  const cplx z = x - 1.0;
  cplx acc = kCoef[0];
  for (std::size_t i = 1; i < kCoef.size(); ++i) {
    acc += kCoef[i] / (z + static_cast<double>(i));
  }
  const cplx t = z + 7.5;
  return std::sqrt(kTwoPi) * std::exp((z + 0.5) * std::log(t) - t) * acc;
}

/// (q^a;q)_inf / (q^b;q)_inf * (1-q)^{a-b}; tends to Gamma(b)/Gamma(a) as
/// q -> 1. Evaluated in log space (both Pochhammers underflow near q = 1).
inline cplx classical_limit_ratio(cplx a, cplx b, const QContext& ctx) {
  ctx.validate();
  if (b.imag() == 0.0 && b.real() <= 0.0 &&
      std::fabs(b.real() - std::round(b.real())) < 1e-14) {
    throw PoleError("classical_limit_ratio: q^beta hits a denominator zero", 0);
  }
  if (a == b) return {1.0, 0.0};
  const std::array<std::pair<cplx, cplx>, 1> pair{
      {{qpow(ctx.q, a), qpow(ctx.q, b)}}};
  const ScaledComplex r = qpoch_ratio_scaled(pair, ctx);
  if (r.is_zero()) return {0.0, 0.0};
  return std::exp(r.log() + (a - b) * std::log(1.0 - ctx.q));
}

inline cplx classical_limit_ratio(double alpha, double beta,
                                  const QContext& ctx) {
  return classical_limit_ratio(cplx{alpha, 0.0}, cplx{beta, 0.0}, ctx);
}

}  // namespace qhyper

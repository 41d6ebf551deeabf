#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>

#include "qhyper/error.hpp"

namespace qhyper {

using cplx = std::complex<double>;

/// Real spectral parameter (alpha, beta, gamma, eta, u, v, t_i ...).
using SpectralParam = double;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Global numeric context. Every evaluation is a pure function of its
/// arguments and one of these.
struct QContext {
  double q = 0.5;
  /// Upper bound on retained Pochhammer factors; each product stops earlier
  /// once its tail bound is certified below `tail_tol`.
  std::int64_t product_truncation = 2'000'000;
  double tail_tol = 1e-16;
  /// Bilateral charge sums run over |m| <= sum_m_max.
  int sum_m_max = 80;
  /// Trapezoid nodes per unit circle.
  int quad_points = 512;
  /// Target relative residual for identity checks.
  double rel_tol = 1e-8;
  /// Certification threshold for the outermost retained terms of a bilateral
  /// sum, relative to the largest term.
  double sum_tol = 1e-15;
  /// Minimum distance between a denominator pole radius and the unit circle.
  double pole_clearance = 1e-6;

  /// Throws PreconditionError when an invariant is violated.
  void validate() const {
    if (!(q > 0.0 && q < 1.0)) {
      throw PreconditionError("QContext: q must satisfy 0 < q < 1, got " +
                              std::to_string(q));
    }
    if (product_truncation < 1) {
      throw PreconditionError("QContext: product_truncation must be >= 1");
    }
    if (quad_points < 4 || quad_points % 2 != 0) {
      throw PreconditionError("QContext: quad_points must be even and >= 4");
    }
    if (sum_m_max < 1) {
      throw PreconditionError("QContext: sum_m_max must be >= 1");
    }
    if (!(tail_tol > 0.0) || !(rel_tol > 0.0) || !(sum_tol > 0.0) ||
        !(pole_clearance > 0.0)) {
      throw PreconditionError("QContext: tolerances must be positive");
    }
  }

  QContext with_q(double new_q) const {
    QContext c = *this;
    c.q = new_q;
    return c;
  }
};

/// q^x for real or complex exponent, principal branch (q is a positive real).
inline double qpow(double q, double x) { return std::exp(x * std::log(q)); }
inline cplx qpow(double q, cplx x) { return std::exp(x * std::log(q)); }

}  // namespace qhyper

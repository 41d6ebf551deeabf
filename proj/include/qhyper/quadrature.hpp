#pragma once

// Unit-circle trapezoid rule, certified bilateral charge sums and the
// constrained SU(n) torus integral built from them.

#include <cmath>
#include <algorithm>
#include <complex>
#include <cstddef>
#include <string>
#include <type_traits>
#include <vector>

#include "qhyper/context.hpp"
#include "qhyper/error.hpp"

namespace qhyper {

struct CircleNode {
  double theta;
  cplx z;
};

namespace detail {

template <class F>
cplx call_on_node(F& f, const CircleNode& node) {
  if constexpr (std::is_invocable_v<F&, const CircleNode&>) {
    return f(node);
  } else {
    return f(node.z);
  }
}

inline bool finite(cplx v) {
  return std::isfinite(v.real()) && std::isfinite(v.imag());
}

}  // namespace detail

/// Equal-weight trapezoid rule (1/N) sum_k f(e^{2 pi i k / N}), i.e. the
/// contour integral of f(z) dz / (2 pi i z). `f` takes either a cplx node or
/// a CircleNode (angle and fugacity).
template <class F>
cplx circle_quadrature(F&& f, int nodes) {
  if (nodes < 1) throw PreconditionError("circle_quadrature: nodes < 1");
  cplx acc{0.0, 0.0};
  for (int k = 0; k < nodes; ++k) {
    const double theta = kTwoPi * k / nodes;
    const CircleNode node{theta, std::polar(1.0, theta)};
    const cplx v = detail::call_on_node(f, node);
    if (!detail::finite(v)) {
      throw EvaluationError(
          "circle_quadrature: non-finite integrand at node " +
              std::to_string(k),
          static_cast<std::size_t>(k));
    }
    acc += v;
  }
  return acc / static_cast<double>(nodes);
}

/// Consecutive negligible shells after which a bilateral sum stops early.
inline constexpr int kQuietShells = 3;

/// sum_{m=-M}^{M} term(m) in the fixed order 0, 1, -1, 2, -2, ... The sum
/// stops once kQuietShells consecutive shells {j, -j} are below
/// ctx.sum_tol times the largest term; reaching M = ctx.sum_m_max without
/// that certificate is a TailDivergenceError.
template <class F>
cplx bilateral_sum(F&& term, const QContext& ctx) {
  const int M = ctx.sum_m_max;
  cplx total = term(0);
  double running_max = std::abs(total);
  int quiet = 0;
  double edge = 0.0;
  for (int j = 1; j <= M; ++j) {
    const cplx up = term(j);
    const cplx down = term(-j);
    total += up;
    total += down;
    edge = std::fmax(std::abs(up), std::abs(down));
    running_max = std::fmax(running_max, edge);
    if (!detail::finite(total)) {
      throw EvaluationError("bilateral_sum: non-finite term at m = " + std::to_string(j),
                            static_cast<std::size_t>(j));
    }
    quiet = (edge <= ctx.sum_tol * running_max) ? quiet + 1 : 0;
    if (quiet >= kQuietShells) return total;
  }
  if (running_max > 0.0 && !(edge <= ctx.sum_tol * running_max)) {
    throw TailDivergenceError(
        "bilateral_sum: no decay by |m| = " + std::to_string(M) +
        " (edge/max = " + std::to_string(edge / running_max) + ")");
  }
  return total;
}

/// One evaluation point of the SU(n) torus: angles, fugacities and charges
/// of all n components (the last one fixed by the constraints).
struct TorusPoint {
  std::vector<double> theta;
  std::vector<cplx> z;
  std::vector<int> m;
};

struct TorusOptions {
  /// Multiply by 1/n! (Weyl group order).
  bool weyl = true;
  /// n >= 3: throw TailDivergenceError unless the outer charge shell is
  /// below sum_tol relative to the largest slice.
  bool certify_tail = true;
  /// n >= 3: receives outer-shell / largest-slice when non-null.
  double* shell_ratio = nullptr;
};

/// Integrates f over z_1..z_{n-1} on unit circles with z_n = (z_1...z_{n-1})^{-1}
/// and sums over m_1..m_{n-1} in [-M, M] with m_n = -sum m_k. Each contour
/// carries the dz/(2 pi i z) normalization (trapezoid mean). n = 1 evaluates
/// f at z = 1, m = 0.
template <class F>
cplx sun_torus_integrate(F&& f, int n, const QContext& ctx,
                         TorusOptions opts = {}) {
  if (n < 1) throw PreconditionError("sun_torus_integrate: n < 1");
  TorusPoint pt;
  pt.theta.assign(n, 0.0);
  pt.z.assign(n, cplx{1.0, 0.0});
  pt.m.assign(n, 0);
  if (n == 1) {
    const cplx v = f(static_cast<const TorusPoint&>(pt));
    if (!detail::finite(v)) {
      throw EvaluationError("sun_torus_integrate: non-finite integrand", 0);
    }
    return v;
  }
  double weyl = 1.0;
  if (opts.weyl) {
    for (int k = 2; k <= n; ++k) weyl /= k;
  }
  if (n == 2) {
    // One free circle: the adaptive bilateral sum applies directly.
    const cplx total = bilateral_sum(
        [&](int m) {
          pt.m[0] = m;
          pt.m[1] = -m;
          return circle_quadrature(
              [&](const CircleNode& node) {
                pt.theta[0] = node.theta;
                pt.theta[1] = -node.theta;
                pt.z[0] = node.z;
                pt.z[1] = std::conj(node.z);
                return f(static_cast<const TorusPoint&>(pt));
              },
              ctx.quad_points);
        },
        ctx);
    return total * weyl;
  }
  const int free = n - 1;
  const int N = ctx.quad_points;
  const int M = ctx.sum_m_max;

  std::vector<int> charge(free, -M);
  std::vector<int> node(free, 0);
  cplx total{0.0, 0.0};
  double running_max = 0.0;
  double shell_max = 0.0;
  std::size_t node_counter = 0;
  double inv_nodes = 1.0;
  for (int k = 0; k < free; ++k) inv_nodes /= N;

  for (;;) {
    bool on_shell = false;
    int msum = 0;
    for (int k = 0; k < free; ++k) {
      pt.m[k] = charge[k];
      msum += charge[k];
      if (charge[k] == M || charge[k] == -M) on_shell = true;
    }
    pt.m[free] = -msum;

    cplx slice{0.0, 0.0};
    std::fill(node.begin(), node.end(), 0);
    for (;;) {
      double theta_sum = 0.0;
      for (int k = 0; k < free; ++k) {
        const double th = kTwoPi * node[k] / N;
        pt.theta[k] = th;
        pt.z[k] = std::polar(1.0, th);
        theta_sum += th;
      }
      pt.theta[free] = -theta_sum;
      pt.z[free] = std::polar(1.0, -theta_sum);
      const cplx v = f(static_cast<const TorusPoint&>(pt));
      if (!detail::finite(v)) {
        throw EvaluationError(
            "sun_torus_integrate: non-finite integrand at point " +
                std::to_string(node_counter),
            node_counter);
      }
      slice += v;
      ++node_counter;
      int k = 0;
      while (k < free && ++node[k] == N) node[k++] = 0;
      if (k == free) break;
    }
    slice *= inv_nodes;
    total += slice;
    const double a = std::abs(slice);
    running_max = std::fmax(running_max, a);
    if (on_shell) shell_max = std::fmax(shell_max, a);

    int k = 0;
    while (k < free && ++charge[k] > M) charge[k++] = -M;
    if (k == free) break;
  }
  if (opts.shell_ratio) *opts.shell_ratio = running_max > 0.0 ? shell_max / running_max : 0.0;
  if (opts.certify_tail && running_max > 0.0 && !(shell_max <= ctx.sum_tol * running_max)) {
    throw TailDivergenceError(
        "sun_torus_integrate: charge sum not decayed at |m| = " +
        std::to_string(M) + " (shell/max = " +
        std::to_string(shell_max / running_max) + ")");
  }
  return total * weyl;
}

}  // namespace qhyper

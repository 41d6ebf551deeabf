#pragma once

// The multivariate sum/integral I(t, s) on the SU(n) torus, its tilde
// parameter map, the V-function, and the multi-spin face weight built on I.

#include <cmath>
#include <complex>
#include <span>
#include <algorithm>
#include <string>
#include <vector>

#include "qhyper/context.hpp"
#include "qhyper/error.hpp"
#include "qhyper/params.hpp"
#include "qhyper/qkernel.hpp"
#include "qhyper/quadrature.hpp"
#include "qhyper/scaled_complex.hpp"
#include "qhyper/weights.hpp"

namespace qhyper {

namespace detail {

inline void check_i_shape(std::span<const FlavorParam> t,
                          std::span<const FlavorParam> s, int n) {
  if (n < 1) throw PreconditionError("eval_I: n < 1");
  if (t.size() != static_cast<std::size_t>(2 * n) ||
      s.size() != static_cast<std::size_t>(2 * n)) {
    throw PreconditionError("eval_I: need 2n flavors on each side");
  }
}

inline std::vector<FlavorParam> i_flavors(std::span<const FlavorParam> t,
                                          std::span<const FlavorParam> s) {
  std::vector<FlavorParam> f;
  for (auto x : t) {
    x.coupling = Coupling::z;
    f.push_back(x);
  }
  for (auto x : s) {
    x.coupling = Coupling::inverse_z;
    f.push_back(x);
  }
  return f;
}

inline ScaledComplex ipow(cplx base, int e) {
  ScaledComplex r;
  if (e >= 0) {
    for (int i = 0; i < e; ++i) r.mul(base);
  } else {
    for (int i = 0; i < -e; ++i) r.div(base);
  }
  return r;
}

}  // namespace detail

/// I(t, s) = (1/n!) sum_{m} int prod_k [prod_j B(t_j z_k, tau_j + m_k)
///   B(s_j / z_k, kappa_j - m_k)] * prod_{j<k} q^{-d/2} (1 - q^{d/2} z_j/z_k)
///   (1 - q^{d/2} z_k/z_j) * prod_k z_k^{-2n m_k},   d = m_j - m_k,
/// on the torus prod z_k = 1, sum m_k = 0 with dz/(2 pi i z) per contour.
/// Charges are the FlavorParam charges (tau for t, kappa for s).
inline cplx eval_I(std::span<const FlavorParam> t, std::span<const FlavorParam> s,
                   int n, const QContext& ctx, TorusOptions opts = {}) {
  ctx.validate();
  detail::check_i_shape(t, s, n);
  const auto flavors = detail::i_flavors(t, s);
  pole_guard(flavors, ctx);
  return sun_torus_integrate(
      [&](const TorusPoint& p) {
        ScaledComplex v;
        double phase = 0.0;
        for (int k = 0; k < n; ++k) {
          const cplx z = p.z[k];
          const int m = p.m[k];
          for (const auto& f : t) v *= chiral_block(f.fugacity * z, f.charge + m, ctx);
          for (const auto& f : s) {
            v *= chiral_block(f.fugacity * std::conj(z), f.charge - m, ctx);
          }
          phase -= 2.0 * n * m * p.theta[k];
        }
        for (int j = 0; j < n; ++j) {
          for (int k = j + 1; k < n; ++k) {
            const double qd = qpow(ctx.q, 0.5 * (p.m[j] - p.m[k]));
            const cplx w = p.z[j] * std::conj(p.z[k]);
            v.mul((1.0 - qd * w) * (1.0 - qd * std::conj(w)) / qd);
          }
        }
        v.mul(std::polar(1.0, phase));
        return v.value();
      },
      n, ctx, opts);
}

inline cplx eval_I(const ParameterSet& ps, const QContext& ctx, TorusOptions opts = {}) {
  return eval_I(ps.t_flavors(), ps.s_flavors(), ps.n, ctx, opts);
}

/// Tilde map t_j -> (prod t)^{1/n} / t_j, tau_j -> (sum tau)/n - tau_j
/// (principal branch), applied to both flavor families.
inline ParameterSet tilde_map(const ParameterSet& ps) {
  if (ps.kind != IdentityKind::i_transform) {
    throw PreconditionError("tilde_map: needs an I-transform parameter set");
  }
  const int n = ps.n;
  ParameterSet out = ps;
  auto map_family = [&](std::size_t offset) {
    cplx prod{1.0, 0.0};
    int charge = 0;
    for (int j = 0; j < 2 * n; ++j) {
      prod *= ps.flavors[offset + j].fugacity;
      charge += ps.flavors[offset + j].charge;
    }
    if (charge % n != 0) {
      throw PreconditionError("tilde_map: charge sum " + std::to_string(charge) +
                              " not divisible by n = " + std::to_string(n));
    }
    const cplx root = std::exp(std::log(prod) / static_cast<double>(n));
    for (int j = 0; j < 2 * n; ++j) {
      auto& f = out.flavors[offset + j];
      f.fugacity = root / ps.flavors[offset + j].fugacity;
      f.charge = charge / n - ps.flavors[offset + j].charge;
    }
  };
  map_family(0);
  map_family(2 * n);
  return out;
}

/// prod_{j,k} B(t_j s_k, tau_j + kappa_k).
inline ScaledComplex flavor_pair_block(std::span<const FlavorParam> t,
                                       std::span<const FlavorParam> s,
                                       const QContext& ctx) {
  ScaledComplex b;
  for (const auto& tj : t) {
    for (const auto& sk : s) {
      b *= chiral_block(tj.fugacity * sk.fugacity, tj.charge + sk.charge, ctx);
    }
  }
  return b;
}

/// Monomial of the transformation:
///   (-1)^T (prod t)^T q^{-nT/2} prod_j t_j^{-n tau_j} prod_k s_k^{-n kappa_k},
/// T = sum tau.
inline ScaledComplex transformation_monomial(const ParameterSet& ps, const QContext& ctx) {
  const int n = ps.n;
  int T = 0;
  cplx tprod{1.0, 0.0};
  for (const auto& f : ps.t_flavors()) {
    T += f.charge;
    tprod *= f.fugacity;
  }
  ScaledComplex m = detail::ipow(tprod, T);
  m.mul(qpow(ctx.q, -0.5 * n * T) * ((T % 2 == 0) ? 1.0 : -1.0));
  for (const auto& f : ps.flavors) m *= detail::ipow(f.fugacity, -n * f.charge);
  return m;
}

/// V(t, s) = sum_m int [d_m z] prod_{i=1}^4 B(t_i z, m + tau_i) B(t_i/z, tau_i - m)
///   B(s_i/z, kappa_i - m) B(s_i z, kappa_i + m) * z^{-8m},
/// [d_m z] = S(z|m) dz/(4 pi i z). Evaluated with its own single-circle
/// loop, independent of the torus integrator.
inline cplx eval_V(std::span<const FlavorParam> t, std::span<const FlavorParam> s,
                   const QContext& ctx) {
  ctx.validate();
  if (t.size() != 4 || s.size() != 4) {
    throw PreconditionError("eval_V: needs 4 + 4 flavors");
  }
  pole_guard(detail::i_flavors(t, s), ctx);
  return bilateral_sum(
      [&](int m) {
        return circle_quadrature(
            [&](const CircleNode& node) {
              const cplx z = node.z;
              const cplx zi = std::conj(z);
              ScaledComplex v;
              for (int i = 0; i < 4; ++i) {
                v *= chiral_block(t[i].fugacity * z, m + t[i].charge, ctx);
                v *= chiral_block(t[i].fugacity * zi, t[i].charge - m, ctx);
                v *= chiral_block(s[i].fugacity * zi, s[i].charge - m, ctx);
                v *= chiral_block(s[i].fugacity * z, s[i].charge + m, ctx);
              }
              v.mul(0.5 * self_weight_s(Spin(node.theta, m), ctx) *
                    std::polar(1.0, -8.0 * m * node.theta));
              return v.value();
            },
            ctx.quad_points);
      },
      ctx);
}

/// Result of the multi-spin face weight, with branch bookkeeping.
struct MultiSpinR {
  cplx value;
  std::vector<std::string> flags;
};

namespace detail {

// Principal square root; flags arguments within `tol` of the negative axis.
inline cplx flagged_sqrt(cplx v, const char* what, std::vector<std::string>& flags,
                         double tol = 1e-8) {
  if (v.real() < 0.0 && std::fabs(v.imag()) <= tol * std::abs(v)) {
    flags.push_back(std::string("branch-ambiguous:") + what);
  }
  return std::sqrt(v);
}

inline int integral_charge(double v, const char* what) {
  const double r = std::round(v);
  if (std::fabs(v - r) > 1e-12) {
    throw PreconditionError(std::string("multispin_r: non-integer charge ") + what +
                            " = " + std::to_string(v));
  }
  return static_cast<int>(r);
}

}  // namespace detail

/// Crossing parameter fixed by the balancing condition of I under the
/// spectral substitution of the multi-spin face weight.
inline constexpr double kMultiSpinEta = -0.25;

/// Builds the I-transform parameter set of the multi-spin face weight:
///   t_j = q^{-2(u-v)}/z_{c_j}, t_{n+j} = q^{-2(u'-v')}/z_{b_j},
///   s_j = q^{2(u'-v-eta)} z_{a_j}, s_{n+j} = q^{2(u-v'-eta)} z_{d_j},
///   tau_j = -2(U-V) - C_j, tau_{n+j} = -2(U'-V') - B_j,
///   kappa_j = 2(U'-V) + A_j, kappa_{n+j} = 2(U-V') + D_j.
inline ParameterSet multispin_parameters(SpectralPair u, SpectralPair U, SpectralPair v,
                                         SpectralPair V, const MultiSpin& a,
                                         const MultiSpin& b, const MultiSpin& c,
                                         const MultiSpin& d, const QContext& ctx) {
  const std::size_t n = a.size();
  if (n == 0 || b.size() != n || c.size() != n || d.size() != n) {
    throw PreconditionError("multispin_r: corners must share a common length n >= 1");
  }
  const double eta = kMultiSpinEta;
  ParameterSet ps;
  ps.kind = IdentityKind::i_transform;
  ps.n = static_cast<int>(n);
  ps.q = ctx.q;
  ps.flavors.resize(4 * n);
  const int tau_c = detail::integral_charge(-2.0 * (U.first - V.first), "tau");
  const int tau_b = detail::integral_charge(-2.0 * (U.second - V.second), "tau'");
  const int kap_a = detail::integral_charge(2.0 * (U.second - V.first), "kappa");
  const int kap_d = detail::integral_charge(2.0 * (U.first - V.second), "kappa'");
  const double rt_c = qpow(ctx.q, -2.0 * (u.first - v.first));
  const double rt_b = qpow(ctx.q, -2.0 * (u.second - v.second));
  const double rs_a = qpow(ctx.q, 2.0 * (u.second - v.first - eta));
  const double rs_d = qpow(ctx.q, 2.0 * (u.first - v.second - eta));
  for (std::size_t j = 0; j < n; ++j) {
    const auto& cj = c.components[j];
    const auto& bj = b.components[j];
    const auto& aj = a.components[j];
    const auto& dj = d.components[j];
    ps.flavors[j] = {rt_c * std::conj(cj.fugacity()), tau_c - cj.charge, Coupling::z};
    ps.flavors[n + j] = {rt_b * std::conj(bj.fugacity()), tau_b - bj.charge, Coupling::z};
    ps.flavors[2 * n + j] = {rs_a * aj.fugacity(), kap_a + aj.charge, Coupling::inverse_z};
    ps.flavors[3 * n + j] = {rs_d * dj.fugacity(), kap_d + dj.charge,
                             Coupling::inverse_z};
  }
  return ps;
}

/// k_n: the printed k for n = 2, 1 otherwise (flagged).
inline double multispin_k(int n, SpectralParam x, const QContext& ctx,
                          std::vector<std::string>& flags) {
  if (n == 2) return k_alpha(x, ctx);
  if (flags.empty() || flags.back() != "k_n=1") flags.push_back("k_n=1");
  return 1.0;
}

/// R_{u|U, v|V}(a b; c d) = rho * (prod_{j,k} B(t_j s_k, tau_j + kappa_k))^{-1/2} * I(t, s),
/// rho = sqrt(S(c|C) S(b|B)) / (k_n(eta-u+v) k_n(eta-u'+v') k_n(u'-v) k_n(u-v')),
/// eta = -1/4. Square roots are principal; near-negative-axis arguments are
/// flagged.
inline MultiSpinR multispin_r(SpectralPair u, SpectralPair U, SpectralPair v,
                              SpectralPair V, const MultiSpin& a, const MultiSpin& b,
                              const MultiSpin& c, const MultiSpin& d,
                              const QContext& ctx) {
  ctx.validate();
  MultiSpinR out;
  const ParameterSet ps = multispin_parameters(u, U, v, V, a, b, c, d, ctx);
  check_balancing(ps);
  const int n = ps.n;
  const double eta = kMultiSpinEta;
  const double kprod = multispin_k(n, eta - u.first + v.first, ctx, out.flags) *
                       multispin_k(n, eta - u.second + v.second, ctx, out.flags) *
                       multispin_k(n, u.second - v.first, ctx, out.flags) *
                       multispin_k(n, u.first - v.second, ctx, out.flags);
  const cplx rho =
      detail::flagged_sqrt(s_multi(c, ctx) * s_multi(b, ctx), "rho", out.flags) / kprod;
  const cplx block = flavor_pair_block(ps.t_flavors(), ps.s_flavors(), ctx).value();
  const cplx inv_root = 1.0 / detail::flagged_sqrt(block, "flavor-block", out.flags);
  out.value = rho * inv_root * eval_I(ps, ctx);
  return out;
}

}  // namespace qhyper

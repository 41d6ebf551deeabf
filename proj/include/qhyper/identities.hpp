#pragma once

// Two-sided residual checkers for the relations of the model: the
// star-triangle relation, the six-flavor sum/integral identity, the
// transformation of I, I vs. V, the star-star relation, the IRF Yang-Baxter
// equation, the q -> 1 limit, and the positivity scan.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qhyper/context.hpp"
#include "qhyper/error.hpp"
#include "qhyper/integrals.hpp"
#include "qhyper/params.hpp"
#include "qhyper/qkernel.hpp"
#include "qhyper/quadrature.hpp"
#include "qhyper/report.hpp"
#include "qhyper/scaled_complex.hpp"
#include "qhyper/weights.hpp"

namespace qhyper {

struct CheckOptions {
  /// Re-run at doubled quad_points and sum_m_max when the residual is not
  /// at least 10x below tolerance.
  bool refine = true;
  /// Record how much each side moves under independent doubling of
  /// quad_points and of sum_m_max (diagnostics.doubling). The sum_m_max run
  /// also tightens sum_tol by 1e-4.
  bool doubling = false;
  double budget_s = kDefaultBudgetSeconds;
};

struct Sides {
  cplx lhs;
  cplx rhs;
};

inline QContext doubled(const QContext& c) {
  QContext d = c;
  d.quad_points *= 2;
  d.sum_m_max *= 2;
  return d;
}

namespace detail {

inline double rel_change(cplx a, cplx b) {
  const double s = std::fmax(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

inline void check_budget(const Budget& b, const ResidualReport& r, const Stopwatch& sw) {
  if (b.exceeded()) {
    ResidualReport partial = r;
    partial.runtime_ms = sw.ms();
    partial.pass = false;
    partial.add_flag("partial");
    throw BudgetError("checker exceeded its wall-clock budget of " +
                          std::to_string(b.limit_seconds()) + " s",
                      partial);
  }
}

// Shared driver: evaluate, optionally refine and measure doubling deltas.
template <class Eval>
ResidualReport run_two_sided(ResidualReport r, const QContext& ctx,
                             const CheckOptions& opt, Eval&& eval) {
  const Stopwatch sw;
  const Budget budget = Budget::seconds(opt.budget_s);
  r.settings = ctx;
  Sides s = eval(ctx);
  finalize(r, s.lhs, s.rhs);
  check_budget(budget, r, sw);
  if (opt.refine && !(r.rel_residual < ctx.rel_tol / 10.0)) {
    const QContext d = doubled(ctx);
    s = eval(d);
    r.settings = d;
    r.settings.rel_tol = ctx.rel_tol;
    finalize(r, s.lhs, s.rhs);
    r.add_flag("refined");
    check_budget(budget, r, sw);
  }
  if (opt.doubling) {
    QContext dn = r.settings;
    dn.quad_points *= 2;
    const Sides sn = eval(dn);
    check_budget(budget, r, sw);
    // The m-sum stops on quiet shells well before the cap, so the m axis is
    // perturbed by doubling the cap and tightening the quiet threshold.
    QContext dm = r.settings;
    dm.sum_m_max *= 2;
    dm.sum_tol *= 1e-4;
    const Sides sm = eval(dm);
    const double d_lhs = std::fmax(rel_change(s.lhs, sn.lhs), rel_change(s.lhs, sm.lhs));
    const double d_rhs = std::fmax(rel_change(s.rhs, sn.rhs), rel_change(s.rhs, sm.rhs));
    r.diagnostics["doubling"] = {
        {"quad_points", {{"lhs", rel_change(s.lhs, sn.lhs)}, {"rhs", rel_change(s.rhs, sn.rhs)}}},
        {"sum_m_max", {{"lhs", rel_change(s.lhs, sm.lhs)}, {"rhs", rel_change(s.rhs, sm.rhs)}}},
        {"max", std::fmax(d_lhs, d_rhs)}};
  }
  r.runtime_ms = sw.ms();
  return r;
}

inline std::vector<FlavorParam> spins_as_flavors(std::span<const Spin> spins) {
  std::vector<FlavorParam> f;
  for (const auto& s : spins) f.push_back({s.fugacity(), s.charge, Coupling::both});
  return f;
}

// Flavors seen by the integration variable through W_s(external, z):
// x0 z_e (charge m_e) and x0 / z_e (charge -m_e), each coupled both ways.
inline void add_weight_flavors(std::vector<FlavorParam>& out, const WeightKernel& k,
                               const Spin& e) {
  out.push_back({k.x0 * e.fugacity(), e.charge, Coupling::both});
  out.push_back({k.x0 * std::conj(e.fugacity()), -e.charge, Coupling::both});
}

inline std::vector<std::string> convention_flags(WeightConvention c) {
  return {c.sign_label(), c.norm_label()};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Star-triangle relation

/// LHS = sum_m int [d_m z] W_{eta-gamma}(z, i) W_{eta-beta}(j, z) W_{eta-alpha}(k, z),
/// RHS = W_alpha(i, j) W_beta(k, i) W_gamma(k, j), eta = alpha + beta + gamma,
/// which must equal the crossing parameter of the convention.
inline ResidualReport check_star_triangle(SpectralParam alpha, SpectralParam beta,
                                          SpectralParam gamma,
                                          const std::array<Spin, 3>& spins,
                                          const QContext& ctx,
                                          WeightConvention conv = {},
                                          CheckOptions opt = {}) {
  ctx.validate();
  const double eta = conv.eta();
  if (!(std::fabs(alpha + beta + gamma - eta) <= 1e-13)) {
    throw PreconditionError("check_star_triangle: alpha + beta + gamma != eta = " +
                            std::to_string(eta));
  }
  ResidualReport r;
  r.identity = "star-triangle";
  r.q = ctx.q;
  r.flavors = detail::spins_as_flavors(spins);
  r.spectral = {alpha, beta, gamma};
  r.convention_flags = detail::convention_flags(conv);
  const auto& [si, sj, sk] = spins;
  auto eval = [&](const QContext& c) {
    const WeightKernel wg(eta - gamma, eta, c, conv);
    const WeightKernel wb(eta - beta, eta, c, conv);
    const WeightKernel wa(eta - alpha, eta, c, conv);
    std::vector<FlavorParam> guard;
    detail::add_weight_flavors(guard, wg, si);
    detail::add_weight_flavors(guard, wb, sj);
    detail::add_weight_flavors(guard, wa, sk);
    pole_guard(guard, c);
    const cplx lhs = bilateral_sum(
        [&](int m) {
          return circle_quadrature(
              [&](const CircleNode& node) {
                const Spin z(node.theta, m);
                ScaledComplex v = wg(z, si, c);
                v *= wb(sj, z, c);
                v *= wa(sk, z, c);
                v.mul(0.5 * self_weight_s(z, c));
                return v.value();
              },
              c.quad_points);
        },
        c);
    ScaledComplex rhs = boltzmann_w_scaled(alpha, eta, si, sj, c, conv);
    rhs *= boltzmann_w_scaled(beta, eta, sk, si, c, conv);
    rhs *= boltzmann_w_scaled(gamma, eta, sk, sj, c, conv);
    return Sides{lhs, rhs.value()};
  };
  return detail::run_two_sided(std::move(r), ctx, opt, eval);
}

/// Spectral triple of a star-triangle parameter set in a given convention:
/// the generated values sum to 1/2; the printed sign uses their negatives.
inline std::array<double, 3> star_triangle_spectral(const ParameterSet& ps,
                                                    WeightConvention conv) {
  if (ps.spectral.size() != 3) {
    throw PreconditionError("star-triangle set needs three spectral values");
  }
  const double sgn = conv.sign == CrossingSign::printed ? -1.0 : 1.0;
  return {sgn * ps.spectral[0], sgn * ps.spectral[1], sgn * ps.spectral[2]};
}

inline std::array<Spin, 3> star_triangle_spins(const ParameterSet& ps) {
  if (ps.flavors.size() != 3) throw PreconditionError("star-triangle set needs 3 spins");
  std::array<Spin, 3> s;
  for (int i = 0; i < 3; ++i) {
    s[i] = Spin(std::arg(ps.flavors[i].fugacity), ps.flavors[i].charge);
  }
  return s;
}

inline ResidualReport check_star_triangle(const ParameterSet& ps, const QContext& ctx,
                                          WeightConvention conv, CheckOptions opt = {}) {
  const auto a = star_triangle_spectral(ps, conv);
  auto r = check_star_triangle(a[0], a[1], a[2], star_triangle_spins(ps), ctx, conv, opt);
  r.seed = ps.seed;
  return r;
}

/// Conventions in calibration order.
inline std::array<WeightConvention, 4> convention_search_order() {
  return {{{CrossingSign::printed, Normalization::printed_k},
           {CrossingSign::printed, Normalization::crossing_k},
           {CrossingSign::flipped, Normalization::printed_k},
           {CrossingSign::flipped, Normalization::crossing_k}}};
}

struct CalibrationOutcome {
  WeightConvention convention;
  /// One entry per tried convention: label and residual (or error text).
  std::vector<std::pair<std::string, std::string>> trials;
};

/// First convention (in the fixed search order) under which every probe set
/// satisfies the star-triangle relation; CalibrationError if none does.
inline CalibrationOutcome calibrate_star_triangle(std::span<const ParameterSet> probes,
                                                  const QContext& ctx) {
  CalibrationOutcome out;
  CheckOptions opt;
  opt.refine = false;
  for (const auto& conv : convention_search_order()) {
    const std::string label = conv.sign_label() + "," + conv.norm_label();
    bool ok = true;
    std::string note;
    for (const auto& ps : probes) {
      try {
        const auto r = check_star_triangle(ps, ctx, conv, opt);
        note = std::to_string(r.rel_residual);
        if (!r.pass) {
          ok = false;
          break;
        }
      } catch (const Error& e) {
        note = e.what();
        ok = false;
        break;
      }
    }
    out.trials.emplace_back(label, note);
    if (ok) {
      out.convention = conv;
      return out;
    }
  }
  throw CalibrationError("star-triangle: no convention satisfies the relation");
}

// ---------------------------------------------------------------------------
// Six-flavor sum/integral identity

/// LHS = sum_m int prod_i B(a_i z, m + n_i) B(a_i/z, n_i - m)
///         (1 - q^m z^2)(1 - q^m z^{-2}) q^{-m} z^{-6m} dz/(2 pi i z),
/// RHS = 2 prod_i a_i^{-n_i} prod_{i<j} B(a_i a_j, n_i + n_j).
inline ResidualReport check_sum_integral(const ParameterSet& ps, const QContext& ctx,
                                         CheckOptions opt = {}) {
  ctx.validate();
  if (ps.kind != IdentityKind::six_flavor) {
    throw PreconditionError("check_sum_integral: needs a six-flavor parameter set");
  }
  check_balancing(ps);
  ResidualReport r = make_report("sum-integral", ps, ctx);
  const auto& a = ps.flavors;
  auto eval = [&](const QContext& c) {
    pole_guard(ps.flavors, c);
    const cplx lhs = bilateral_sum(
        [&](int m) {
          return circle_quadrature(
              [&](const CircleNode& node) {
                const cplx z = node.z;
                const cplx zi = std::conj(z);
                ScaledComplex v;
                for (const auto& f : a) {
                  v *= chiral_block(f.fugacity * z, m + f.charge, c);
                  v *= chiral_block(f.fugacity * zi, f.charge - m, c);
                }
                v.mul(self_weight_s(Spin(node.theta, m), c) *
                      std::polar(1.0, -6.0 * m * node.theta));
                return v.value();
              },
              c.quad_points);
        },
        c);
    ScaledComplex rhs;
    rhs.mul(2.0);
    for (const auto& f : a) rhs *= detail::ipow(f.fugacity, -f.charge);
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = i + 1; j < a.size(); ++j) {
        rhs *= chiral_block(a[i].fugacity * a[j].fugacity, a[i].charge + a[j].charge, c);
      }
    }
    return Sides{lhs, rhs.value()};
  };
  return detail::run_two_sided(std::move(r), ctx, opt, eval);
}

// ---------------------------------------------------------------------------
// I, its transformation, and the V-function

/// Normalization flags of I: the Weyl factor 1/n! and the 1/(2 pi i) per
/// contour.
struct IConvention {
  bool weyl = true;
  bool contour_normalized = true;

  std::vector<std::string> flags() const {
    return {weyl ? "weyl=1/n!" : "weyl=off",
            contour_normalized ? "contour=dz/(2 pi i z)" : "contour=dz/z"};
  }
  /// Factor relative to I evaluated without Weyl factor, normalized contours.
  cplx factor(int n) const {
    cplx f{1.0, 0.0};
    if (weyl) {
      for (int k = 2; k <= n; ++k) f /= static_cast<double>(k);
    }
    if (!contour_normalized) {
      for (int k = 1; k < n; ++k) f *= cplx{0.0, kTwoPi};
    }
    return f;
  }
};

/// LHS = I(t, s), RHS = M * prod_{j,k} B(t_j s_k, tau_j + kappa_k) * I(t~, s~)
/// with the monomial M of transformation_monomial.
inline ResidualReport check_we7_transformation(const ParameterSet& ps, const QContext& ctx,
                                               IConvention iconv = {},
                                               CheckOptions opt = {}) {
  ctx.validate();
  if (ps.kind != IdentityKind::i_transform) {
    throw PreconditionError("check_we7_transformation: needs an I-transform set");
  }
  check_balancing(ps);
  const ParameterSet dual = tilde_map(ps);
  ResidualReport r = make_report("transform", ps, ctx);
  r.convention_flags = iconv.flags();
  const cplx norm = iconv.factor(ps.n);
  auto eval = [&](const QContext& c) {
    TorusOptions raw;
    raw.weyl = false;
    const cplx lhs = norm * eval_I(ps, c, raw);
    ScaledComplex rhs = transformation_monomial(ps, c);
    rhs *= flavor_pair_block(ps.t_flavors(), ps.s_flavors(), c);
    rhs.mul(norm * eval_I(dual, c, raw));
    return Sides{lhs, rhs.value()};
  };
  return detail::run_two_sided(std::move(r), ctx, opt, eval);
}

inline std::array<IConvention, 4> i_convention_search_order() {
  return {{{true, true}, {false, true}, {true, false}, {false, false}}};
}

/// Calibrates the I normalization against the V-function on one n = 2 set:
/// the first flag combination whose residual is below 1e-6.
inline IConvention calibrate_i_convention(const ParameterSet& ps, const QContext& ctx) {
  if (ps.kind != IdentityKind::i_transform || ps.n != 2) {
    throw PreconditionError("calibrate_i_convention: needs an n = 2 I-transform set");
  }
  TorusOptions raw;
  raw.weyl = false;
  const cplx i_raw = eval_I(ps, ctx, raw);
  const cplx v = eval_V(ps.t_flavors(), ps.s_flavors(), ctx);
  for (const auto& c : i_convention_search_order()) {
    if (relative_residual(c.factor(2) * i_raw, v) < 1e-6) return c;
  }
  throw CalibrationError("I vs V: no Weyl/contour normalization reaches 1e-6");
}

/// eval_I (n = 2, normalization `frozen`, or calibrated on `ps` itself)
/// against eval_V.
inline ResidualReport check_v_consistency(const ParameterSet& ps, const QContext& ctx,
                                          std::optional<IConvention> frozen = {},
                                          CheckOptions opt = {}) {
  ctx.validate();
  if (ps.kind != IdentityKind::i_transform || ps.n != 2) {
    throw PreconditionError("check_v_consistency: needs an n = 2 I-transform set");
  }
  check_balancing(ps);
  const IConvention iconv = frozen ? *frozen : calibrate_i_convention(ps, ctx);
  ResidualReport r = make_report("v-consistency", ps, ctx);
  r.convention_flags = iconv.flags();
  if (!frozen) r.add_flag("calibrated-here");
  auto eval = [&](const QContext& c) {
    TorusOptions raw;
    raw.weyl = false;
    return Sides{iconv.factor(2) * eval_I(ps, c, raw),
                 eval_V(ps.t_flavors(), ps.s_flavors(), c)};
  };
  return detail::run_two_sided(std::move(r), ctx, opt, eval);
}

// ---------------------------------------------------------------------------
// Star-star relation

namespace detail {

// Weight with a star-star subscript u (the four subscripts sum to 2), in
// the given convention: W_{(1-u)/2}, sign-flipped for the printed sign.
inline WeightKernel star_star_kernel(double u, const QContext& c, WeightConvention conv) {
  const double s = 0.5 * (1.0 - u);
  const double v = conv.sign == CrossingSign::printed ? -s : s;
  return WeightKernel(v, conv.eta(), c, conv);
}

inline RealSpin real_spin(const Spin& s, double q) {
  return {s.theta / (2.0 * std::log(q)), s.charge};
}

}  // namespace detail

/// Star-star relation, alpha + beta + gamma + delta = 2:
///   W_{2-g-d}(d,c) W_{2-b-g}(b,c) sum int S W_a(a,x) W_b(x,b) W_g(c,x) W_d(x,d)
/// = W_{2-g-d}(a,b) W_{2-b-g}(a,d) sum int S W_g(x,a) W_d(b,x) W_a(x,c) W_b(d,x).
/// n = 1 uses W and the [d_m x] measure. n >= 2 uses the cross-pair q-ansatz
/// with S(x|X) and the bare measure; it is exploratory and flagged as such.
inline ResidualReport check_star_star(int n, const std::array<double, 4>& abgd,
                                      const std::array<MultiSpin, 4>& corners,
                                      const QContext& ctx, WeightConvention conv = {},
                                      CheckOptions opt = {}) {
  ctx.validate();
  const auto [al, be, ga, de] = abgd;
  if (!(std::fabs(al + be + ga + de - 2.0) <= 1e-13)) {
    throw PreconditionError("check_star_star: alpha + beta + gamma + delta != 2");
  }
  if (n < 1) throw PreconditionError("check_star_star: n < 1");
  for (const auto& c : corners) {
    if (c.size() != static_cast<std::size_t>(n)) {
      throw PreconditionError("check_star_star: corners must have n components");
    }
  }
  ResidualReport r;
  r.identity = "star-star";
  r.q = ctx.q;
  r.n = n;
  for (const auto& c : corners) {
    for (const auto& f : detail::spins_as_flavors(c.components)) r.flavors.push_back(f);
  }
  r.spectral = {al, be, ga, de};
  r.convention_flags = detail::convention_flags(conv);
  r.add_flag("rhs-prefactors=W_{2-g-d}(a,b)W_{2-b-g}(a,d)");

  if (n == 1) {
    const Spin a = corners[0].components[0];
    const Spin b = corners[1].components[0];
    const Spin c = corners[2].components[0];
    const Spin d = corners[3].components[0];
    auto eval = [&](const QContext& q) {
      auto K = [&](double u) { return detail::star_star_kernel(u, q, conv); };
      const WeightKernel ka = K(al), kb = K(be), kg = K(ga), kd = K(de);
      std::vector<FlavorParam> guard;
      for (const auto& [k, s] : {std::pair{ka, a}, {kb, b}, {kg, c}, {kd, d},
                                 {kg, a}, {kd, b}, {ka, c}, {kb, d}}) {
        detail::add_weight_flavors(guard, k, s);
      }
      pole_guard(guard, q);
      auto star = [&](const std::array<std::pair<const WeightKernel*, Spin>, 4>& f) {
        return bilateral_sum(
            [&](int m) {
              return circle_quadrature(
                  [&](const CircleNode& node) {
                    const Spin x(node.theta, m);
                    ScaledComplex v;
                    for (const auto& [k, s] : f) v *= (*k)(s, x, q);
                    v.mul(0.5 * self_weight_s(x, q));
                    return v.value();
                  },
                  q.quad_points);
            },
            q);
      };
      const WeightKernel p1 = K(2.0 - ga - de), p2 = K(2.0 - be - ga);
      ScaledComplex lhs = p1(d, c, q);
      lhs *= p2(b, c, q);
      lhs.mul(star({{{&ka, a}, {&kb, b}, {&kg, c}, {&kd, d}}}));
      ScaledComplex rhs = p1(a, b, q);
      rhs *= p2(a, d, q);
      rhs.mul(star({{{&kg, a}, {&kd, b}, {&ka, c}, {&kb, d}}}));
      return Sides{lhs.value(), rhs.value()};
    };
    return detail::run_two_sided(std::move(r), ctx, opt, eval);
  }

  // Exploratory multi-spin path on a deliberately coarse grid.
  r.add_flag("exploratory");
  r.add_flag("cross-pair-ansatz");
  QContext coarse = ctx;
  coarse.quad_points = std::min(ctx.quad_points, 32);
  coarse.sum_m_max = std::min(ctx.sum_m_max, 3);
  if (coarse.quad_points != ctx.quad_points || coarse.sum_m_max != ctx.sum_m_max) {
    r.add_flag("coarse-grid");
  }
  std::array<std::vector<RealSpin>, 4> rs;
  for (int i = 0; i < 4; ++i) {
    for (const auto& s : corners[i].components) rs[i].push_back(detail::real_spin(s, ctx.q));
  }
  opt.refine = false;
  double shell_ratio = 0.0;
  auto eval = [&](const QContext& q) {
    auto W = [&](double u, std::span<const RealSpin> x, std::span<const RealSpin> y) {
      return cross_pair_weight(0.5 * u, 0.0, x, y, q);
    };
    auto star = [&](bool primed) {
      TorusOptions o;
      o.weyl = false;
      o.certify_tail = false;
      double ratio = 0.0;
      o.shell_ratio = &ratio;
      const cplx v = sun_torus_integrate(
          [&](const TorusPoint& p) {
            MultiSpin xs;
            std::vector<RealSpin> x;
            for (int k = 0; k < n; ++k) {
              xs.components.emplace_back(p.theta[k], p.m[k]);
              x.push_back(detail::real_spin(xs.components.back(), q.q));
            }
            ScaledComplex v;
            if (!primed) {
              v *= W(al, rs[0], x);
              v *= W(be, x, rs[1]);
              v *= W(ga, rs[2], x);
              v *= W(de, x, rs[3]);
            } else {
              v *= W(ga, x, rs[0]);
              v *= W(de, rs[1], x);
              v *= W(al, x, rs[2]);
              v *= W(be, rs[3], x);
            }
            v.mul(s_multi(xs, q));
            return v.value();
          },
          n + 1, q, o);
      shell_ratio = std::fmax(shell_ratio, ratio);
      return v;
    };
    ScaledComplex lhs = W(2.0 - ga - de, rs[3], rs[2]);
    lhs *= W(2.0 - be - ga, rs[1], rs[2]);
    lhs.mul(star(false));
    ScaledComplex rhs = W(2.0 - ga - de, rs[0], rs[1]);
    rhs *= W(2.0 - be - ga, rs[0], rs[3]);
    rhs.mul(star(true));
    return Sides{lhs.value(), rhs.value()};
  };
  r = detail::run_two_sided(std::move(r), coarse, opt, eval);
  r.diagnostics["charge_shell_ratio"] = shell_ratio;
  if (!(shell_ratio <= coarse.sum_tol)) r.add_flag("tail-uncertified");
  return r;
}

inline ResidualReport check_star_star(const ParameterSet& ps, const QContext& ctx,
                                      WeightConvention conv = {}, CheckOptions opt = {}) {
  if (ps.kind != IdentityKind::star_star || ps.spectral.size() != 4 ||
      ps.flavors.size() != static_cast<std::size_t>(4 * ps.n)) {
    throw PreconditionError("check_star_star: malformed star-star parameter set");
  }
  std::array<MultiSpin, 4> corners;
  for (int i = 0; i < 4; ++i) {
    for (int k = 0; k < ps.n; ++k) {
      const auto& f = ps.flavors[i * ps.n + k];
      corners[i].components.emplace_back(std::arg(f.fugacity), f.charge);
    }
  }
  auto r = check_star_star(ps.n,
                           {ps.spectral[0], ps.spectral[1], ps.spectral[2], ps.spectral[3]},
                           corners, ctx, conv, opt);
  r.seed = ps.seed;
  return r;
}

// ---------------------------------------------------------------------------
// IRF Yang-Baxter equation

struct YbeOptions {
  int inner_nodes = 64;
  int inner_m = 12;
  int outer_nodes = 64;
  int outer_m = 8;
  double budget_s = kYbeBudgetSeconds;
  WeightConvention convention{};
  FaceLabels labels = FaceLabels::alternating;
  FacePrefactor prefactor = unit_face_prefactor;
};

namespace detail {

// One face weight R_{(ti,tj)(tk,tl)} with one corner being the outer spin h.
struct FaceSpec {
  std::array<double, 4> t;
  std::array<int, 4> corner;  // index into the six external spins, or -1 for h
};

}  // namespace detail

/// Both sides of
///   sum_H int [d_H h] R_{P1,P2}(a b; h c) R_{P2,P3}(c d; h e) R_{P3,P1}(e f; h a)
/// = sum_H int [d_H h] R_{P2,P3}(b h; a f) R_{P3,P1}(d h; c b) R_{P1,P2}(f h; e d)
/// with P1 = (t4, t1), P2 = (t6, t3), P3 = (t2, t5) and [d_H h] = [d_m z].
/// Inner and outer sums/integrals use fixed truncations (YbeOptions). The
/// report compares LHS/RHS against 1; raw sides go to diagnostics.
inline ResidualReport check_irf_ybe(const std::array<SpectralPair, 3>& pairs,
                                    const std::array<Spin, 6>& spins, const QContext& ctx,
                                    const YbeOptions& yo = {}) {
  ctx.validate();
  const Stopwatch sw;
  const Budget budget = Budget::seconds(yo.budget_s);
  const WeightConvention conv = yo.convention;
  const double eta = conv.eta();

  ResidualReport r;
  r.identity = "irf-ybe";
  r.q = ctx.q;
  r.flavors = detail::spins_as_flavors(spins);
  for (const auto& p : pairs) {
    r.spectral.push_back(p.first);
    r.spectral.push_back(p.second);
  }
  r.settings = ctx;
  r.settings.quad_points = yo.inner_nodes;
  r.settings.sum_m_max = yo.inner_m;
  r.convention_flags = detail::convention_flags(conv);
  r.add_flag(to_string(yo.labels));
  r.add_flag("ratio-compare");
  r.diagnostics["grid"] = {{"inner_nodes", yo.inner_nodes},
                           {"inner_m", yo.inner_m},
                           {"outer_nodes", yo.outer_nodes},
                           {"outer_m", yo.outer_m}};

  auto T = [](SpectralPair x, SpectralPair y) {
    return std::array<double, 4>{x.first, x.second, y.first, y.second};
  };
  const auto [P1, P2, P3] = pairs;
  enum { a, b, c, d, e, f };
  constexpr int h = -1;
  const std::array<detail::FaceSpec, 6> faces{{
      {T(P1, P2), {a, b, h, c}},
      {T(P2, P3), {c, d, h, e}},
      {T(P3, P1), {e, f, h, a}},
      {T(P2, P3), {b, h, a, f}},
      {T(P3, P1), {d, h, c, b}},
      {T(P1, P2), {f, h, e, d}},
  }};

  // Inner grid and, per face, the h-independent part of the integrand.
  const QContext& q = ctx;
  std::vector<Spin> inner;
  std::vector<double> inner_meas_scale;
  for (int m = -yo.inner_m; m <= yo.inner_m; ++m) {
    for (int k = 0; k < yo.inner_nodes; ++k) inner.emplace_back(kTwoPi * k / yo.inner_nodes, m);
  }
  std::array<std::vector<cplx>, 6> fixed;
  std::array<WeightKernel, 6> h_kernel;
  std::array<cplx, 6> pref;
  for (int fi = 0; fi < 6; ++fi) {
    const auto s = face_spectral(faces[fi].t, yo.labels);
    pref[fi] = yo.prefactor(faces[fi].t);
    std::array<WeightKernel, 4> k;
    std::vector<FlavorParam> guard;
    for (int ci = 0; ci < 4; ++ci) {
      k[ci] = WeightKernel(s[ci], eta, q, conv);
      if (faces[fi].corner[ci] == h) {
        h_kernel[fi] = k[ci];
      } else {
        detail::add_weight_flavors(guard, k[ci], spins[faces[fi].corner[ci]]);
      }
    }
    QContext gq = q;
    gq.sum_m_max = yo.inner_m;
    pole_guard(guard, gq);
    fixed[fi].resize(inner.size());
    for (std::size_t p = 0; p < inner.size(); ++p) {
      ScaledComplex v;
      for (int ci = 0; ci < 4; ++ci) {
        const int idx = faces[fi].corner[ci];
        if (idx != h) v *= k[ci](spins[idx], inner[p], q);
      }
      v.mul(0.5 * self_weight_s(inner[p], q) / static_cast<double>(yo.inner_nodes));
      fixed[fi][p] = v.value();
    }
  }

  cplx lhs{0.0, 0.0};
  cplx rhs{0.0, 0.0};
  for (int H = -yo.outer_m; H <= yo.outer_m; ++H) {
    for (int k = 0; k < yo.outer_nodes; ++k) {
      const Spin hs(kTwoPi * k / yo.outer_nodes, H);
      std::array<cplx, 6> R;
      for (int fi = 0; fi < 6; ++fi) {
        cplx acc{0.0, 0.0};
        for (std::size_t p = 0; p < inner.size(); ++p) {
          acc += fixed[fi][p] * h_kernel[fi](hs, inner[p], q).value();
        }
        R[fi] = pref[fi] * acc;
      }
      const cplx meas = 0.5 * self_weight_s(hs, q) / static_cast<double>(yo.outer_nodes);
      lhs += meas * R[0] * R[1] * R[2];
      rhs += meas * R[3] * R[4] * R[5];
    }
    if (budget.exceeded()) {
      r.lhs = lhs;
      r.rhs = rhs;
      r.diagnostics["outer_charge_reached"] = H;
      detail::check_budget(budget, r, sw);
    }
  }
  r.diagnostics["lhs_re"] = lhs.real();
  r.diagnostics["lhs_im"] = lhs.imag();
  r.diagnostics["rhs_re"] = rhs.real();
  r.diagnostics["rhs_im"] = rhs.imag();
  const bool sized = std::abs(lhs) > kNegligibleSide && std::abs(rhs) > kNegligibleSide;
  const cplx ratio = sized ? lhs / rhs : cplx{NAN, NAN};
  r.diagnostics["ratio_deviation"] = detail::number_or_null(std::abs(ratio - 1.0));
  finalize(r, ratio, cplx{1.0, 0.0});
  if (!sized) {
    r.add_flag("negligible-side");
    r.pass = false;
  }
  r.runtime_ms = sw.ms();
  return r;
}

/// Spectral pairs (t4,t1), (t6,t3), (t2,t5) and the six spins of a ybe set.
inline ResidualReport check_irf_ybe(const ParameterSet& ps, const QContext& ctx,
                                    const YbeOptions& yo = {}) {
  if (ps.kind != IdentityKind::ybe || ps.spectral.size() != 6 || ps.flavors.size() != 6) {
    throw PreconditionError("check_irf_ybe: malformed ybe parameter set");
  }
  const auto& t = ps.spectral;  // t[0] = t1, ..., t[5] = t6
  std::array<Spin, 6> spins;
  for (int i = 0; i < 6; ++i) spins[i] = Spin(std::arg(ps.flavors[i].fugacity), ps.flavors[i].charge);
  auto r = check_irf_ybe({{{t[3], t[0]}, {t[5], t[2]}, {t[1], t[4]}}}, spins, ctx, yo);
  r.seed = ps.seed;
  return r;
}

// ---------------------------------------------------------------------------
// Classical limit

inline std::vector<double> default_limit_sequence() {
  std::vector<double> qs;
  for (int k = 4; k <= 10; ++k) qs.push_back(1.0 - std::ldexp(1.0, -k));
  return qs;
}

/// (1-q)-rescaled cross-pair q-weight B(q^{a+i th}, k) B(q^{a-i th}, -k),
/// a = alpha - eta, th = x + y, k = X + Y, evaluated block by block through
/// classical_limit_ratio; tends to gamma_weight_w as q -> 1.
inline cplx rescaled_q_weight(SpectralParam alpha, SpectralParam eta, RealSpin x,
                              RealSpin y, const QContext& ctx) {
  const cplx c1{alpha - eta, x.x + y.x};
  const cplx c2{alpha - eta, -(x.x + y.x)};
  const double k = x.X + y.X;
  // B(q^c, k) = (q^{1+k/2-c};q)/(q^{k/2+c};q)
  return classical_limit_ratio(1.0 + 0.5 * k - c1, 0.5 * k + c1, ctx) *
         classical_limit_ratio(1.0 - 0.5 * k - c2, -0.5 * k + c2, ctx);
}

/// Deviation of the rescaled q-weight from the gamma weight along
/// `q_sequence`; passes iff the sequence is non-increasing and its final
/// value is below ctx.rel_tol (1e-2 in the acceptance suite).
inline ResidualReport check_classical_limit(SpectralParam alpha, SpectralParam eta,
                                            RealSpin x, RealSpin y,
                                            const std::vector<double>& q_sequence,
                                            const QContext& ctx) {
  if (q_sequence.empty()) throw PreconditionError("check_classical_limit: empty q sequence");
  const Stopwatch sw;
  ResidualReport r;
  r.identity = "classical-limit";
  r.spectral = {alpha, eta};
  r.flavors = {{cplx{x.x, 0.0}, x.X, Coupling::both}, {cplx{y.x, 0.0}, y.X, Coupling::both}};
  const std::array<RealSpin, 1> xs{x};
  const std::array<RealSpin, 1> ys{y};
  const cplx gw = gamma_weight_w(alpha, eta, xs, ys);
  std::vector<double> dev;
  cplx last{NAN, NAN};
  for (double qv : q_sequence) {
    const QContext c = ctx.with_q(qv);
    last = rescaled_q_weight(alpha, eta, x, y, c);
    dev.push_back(relative_residual(last, gw));
  }
  r.q = q_sequence.back();
  r.settings = ctx.with_q(q_sequence.back());
  bool monotone = true;
  for (std::size_t i = 1; i < dev.size(); ++i) monotone = monotone && dev[i] <= dev[i - 1];
  r.diagnostics["q_sequence"] = q_sequence;
  r.diagnostics["deviation"] = dev;
  r.diagnostics["monotone"] = monotone;
  finalize(r, last, gw);
  if (!monotone) {
    r.add_flag("non-monotone");
    r.pass = false;
  }
  r.runtime_ms = sw.ms();
  return r;
}

struct LimitInput {
  double alpha;
  double eta;
  RealSpin x;
  RealSpin y;
};

/// Seeded (alpha, spins) input for the classical-limit check.
inline LimitInput gen_limit_input(std::uint64_t seed) {
  detail::SeededStream rng(seed, 0x4c494d4954ULL);
  LimitInput in;
  in.eta = 0.5;
  in.alpha = rng.uniform(0.1, 0.4);
  in.x = {rng.uniform(-0.5, 0.5), rng.integer(-2, 2)};
  in.y = {rng.uniform(-0.5, 0.5), rng.integer(-2, 2)};
  return in;
}

inline ResidualReport check_classical_limit(std::uint64_t seed,
                                            const std::vector<double>& q_sequence,
                                            const QContext& ctx) {
  const LimitInput in = gen_limit_input(seed);
  auto r = check_classical_limit(in.alpha, in.eta, in.x, in.y, q_sequence, ctx);
  r.seed = seed;
  return r;
}

// ---------------------------------------------------------------------------
// Positivity scan

struct ScanGrid {
  int angles = 10;
  std::vector<double> alphas{0.05, 0.15, 0.25, 0.35, 0.45};
  /// Charges |m_i|, |m_j| <= max_charge; 0 scans the zero-charge slice only.
  int max_charge = 0;
};

struct ScanRow {
  double q;
  double alpha;
  double theta_i;
  double theta_j;
  int m_i;
  int m_j;
  cplx value;
  std::string flags;
};

struct SectorStats {
  double min_phase = INFINITY;
  double max_phase = -INFINITY;
  std::size_t count = 0;
  std::size_t errors = 0;
};

struct ScanReport {
  std::vector<ScanRow> rows;
  std::size_t zero_charge_total = 0;
  std::size_t zero_charge_positive = 0;
  std::map<std::pair<int, int>, SectorStats> sectors;
};

inline constexpr const char* kScanCsvHeader =
    "q,alpha,theta_i,theta_j,m_i,m_j,value_re,value_im,phase,flags";

/// Evaluates W over the grid. Zero-charge points must be real positive
/// (|Im|/|Re| < 1e-10, Re > 0); other sectors only record phase ranges.
/// Evaluation errors are recorded per point and the scan continues.
inline ScanReport positivity_scan(const ScanGrid& grid, const QContext& ctx,
                                  WeightConvention conv = {}) {
  ctx.validate();
  ScanReport out;
  const double eta = conv.eta();
  const double sgn = conv.sign == CrossingSign::printed ? -1.0 : 1.0;
  for (double alpha0 : grid.alphas) {
    const double alpha = sgn * alpha0;
    for (int i = 0; i < grid.angles; ++i) {
      for (int j = 0; j < grid.angles; ++j) {
        // Offset angles keep the grid off the z = +-1, +-i special points.
        const double ti = kTwoPi * (i + 0.37) / grid.angles;
        const double tj = kTwoPi * (j + 0.61) / grid.angles;
        for (int mi = -grid.max_charge; mi <= grid.max_charge; ++mi) {
          for (int mj = -grid.max_charge; mj <= grid.max_charge; ++mj) {
            ScanRow row{ctx.q, alpha, ti, tj, mi, mj, {NAN, NAN}, ""};
            auto& sec = out.sectors[{mi, mj}];
            try {
              row.value = boltzmann_w(alpha, eta, Spin(ti, mi), Spin(tj, mj), ctx, conv);
              const double ph = std::arg(row.value);
              sec.min_phase = std::fmin(sec.min_phase, ph);
              sec.max_phase = std::fmax(sec.max_phase, ph);
              ++sec.count;
              if (mi == 0 && mj == 0) {
                ++out.zero_charge_total;
                const bool pos = row.value.real() > 0.0 &&
                                 std::fabs(row.value.imag()) < 1e-10 * row.value.real();
                if (pos) ++out.zero_charge_positive;
                row.flags = pos ? "positive" : "not-positive";
              } else {
                row.flags = "recorded";
              }
            } catch (const Error& e) {
              ++sec.errors;
              if (mi == 0 && mj == 0) ++out.zero_charge_total;
              row.flags = std::string("error:") + e.what();
            }
            out.rows.push_back(std::move(row));
          }
        }
      }
    }
  }
  return out;
}

inline std::string to_csv_row(const ScanRow& row) {
  std::ostringstream os;
  os.precision(17);
  os << row.q << ',' << row.alpha << ',' << row.theta_i << ',' << row.theta_j << ','
     << row.m_i << ',' << row.m_j << ',' << row.value.real() << ',' << row.value.imag()
     << ',' << std::arg(row.value) << ',' << detail::csv_quote(row.flags);
  return os.str();
}

}  // namespace qhyper

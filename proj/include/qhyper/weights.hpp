#pragma once

// Boltzmann weights of the model: W, the self-weight S, Phi, the face
// weight R, the multi-spin face weight built on I, and the gamma-function
// weights of the q -> 1 limit.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qhyper/context.hpp"
#include "qhyper/error.hpp"
#include "qhyper/params.hpp"
#include "qhyper/qkernel.hpp"
#include "qhyper/quadrature.hpp"
#include "qhyper/scaled_complex.hpp"

namespace qhyper {

/// Continuous spin as a unit-modulus fugacity z = e^{i theta}, plus its
/// discrete charge. theta is kept in (-pi, pi]: the exact remainder is odd,
/// so 1/z is stored as exactly -theta.
struct Spin {
  double theta = 0.0;
  int charge = 0;

  Spin() = default;
  Spin(double angle, int m) : charge(m) {
    if (!std::isfinite(angle)) throw PreconditionError("Spin: non-finite angle");
    theta = std::remainder(angle, kTwoPi);
    if (theta == -kPi) theta = kPi;
  }
  static Spin from_fugacity(cplx z, int m) {
    if (!(std::fabs(std::abs(z) - 1.0) <= 1e-14)) {
      throw PreconditionError("Spin: fugacity not of unit modulus");
    }
    return Spin(std::arg(z), m);
  }
  cplx fugacity() const { return std::polar(1.0, theta); }
  Spin reflected() const { return Spin(-theta, -charge); }
};

struct MultiSpin {
  std::vector<Spin> components;
  std::size_t size() const { return components.size(); }
};

struct SpectralPair {
  double first = 0.0;
  double second = 0.0;
};

/// Sign of the spectral exponent: printed x0 = q^{alpha - eta}, flipped
/// x0 = q^{eta - alpha}. The two are related by alpha -> -alpha, eta -> -eta.
enum class CrossingSign { printed, flipped };

/// Normalization k of Phi: the printed k(alpha), or the crossing-symmetric
/// k(s) = (q^{2s};q^2)/(q^{2-2s};q^2) under which the star-triangle
/// relation holds.
enum class Normalization { printed_k, crossing_k };

struct WeightConvention {
  CrossingSign sign = CrossingSign::flipped;
  Normalization norm = Normalization::crossing_k;

  /// Crossing parameter of the star-triangle relation in this convention.
  double eta() const { return sign == CrossingSign::printed ? -0.5 : 0.5; }
  std::string sign_label() const {
    return sign == CrossingSign::printed ? "sign=printed(eta=-1/2)"
                                         : "sign=flipped(eta=+1/2)";
  }
  std::string norm_label() const {
    return norm == Normalization::printed_k ? "k=printed" : "k=crossing";
  }
};

inline double weight_norm_k(SpectralParam alpha, const QContext& ctx,
                            WeightConvention conv) {
  if (conv.norm == Normalization::printed_k) return k_alpha(alpha, ctx);
  return k_crossing(conv.sign == CrossingSign::printed ? -alpha : alpha, ctx);
}

/// Phi = z_i^{-2 m_i} z_j^{-2 m_j} / k(alpha).
inline cplx phi_norm(SpectralParam alpha, const Spin& si, const Spin& sj,
                     const QContext& ctx, WeightConvention conv = {}) {
  const double phase = -2.0 * (si.theta * si.charge + sj.theta * sj.charge);
  return std::polar(1.0 / weight_norm_k(alpha, ctx, conv), phase);
}

namespace detail {

inline double spectral_exponent(SpectralParam alpha, SpectralParam eta,
                                WeightConvention conv) {
  return conv.sign == CrossingSign::printed ? alpha - eta : eta - alpha;
}

// prod_{e,e'=+-1} B(x0 z_i^e z_j^e', e m_i + e' m_j), without Phi.
inline ScaledComplex w_blocks(double x0, cplx zi, int mi, cplx zj, int mj,
                              const QContext& ctx) {
  const cplx zz = zi * zj;
  const cplx zr = zi * std::conj(zj);
  // The two mixed blocks trade places under i <-> j; multiplying them first
  // (commutatively) keeps W bit-for-bit symmetric.
  ScaledComplex mixed = chiral_block(x0 * zr, mi - mj, ctx);
  mixed *= chiral_block(x0 * std::conj(zr), mj - mi, ctx);
  ScaledComplex w = chiral_block(x0 * zz, mi + mj, ctx);
  w *= mixed;
  w *= chiral_block(x0 * std::conj(zz), -mi - mj, ctx);
  return w;
}

}  // namespace detail

/// W_alpha for a fixed spectral value with x0 and 1/k precomputed; the
/// inner loops of the checkers evaluate many W's at the same alpha.
struct WeightKernel {
  double x0 = 1.0;
  double inv_k = 1.0;

  WeightKernel() = default;
  WeightKernel(SpectralParam alpha, SpectralParam eta, const QContext& ctx,
               WeightConvention conv = {})
      : x0(qpow(ctx.q, detail::spectral_exponent(alpha, eta, conv))),
        inv_k(1.0 / weight_norm_k(alpha, ctx, conv)) {}

  ScaledComplex operator()(const Spin& si, const Spin& sj, const QContext& ctx) const {
    ScaledComplex w = detail::w_blocks(x0, si.fugacity(), si.charge, sj.fugacity(),
                                       sj.charge, ctx);
    w.mul(std::polar(inv_k, -2.0 * (si.theta * si.charge + sj.theta * sj.charge)));
    return w;
  }
};

/// W_alpha(i, j) = Phi * prod_{e,e'} B(q^{alpha-eta} z_i^e z_j^e', e m_i + e' m_j)
/// in scaled form; the flipped convention uses q^{eta-alpha}.
inline ScaledComplex boltzmann_w_scaled(SpectralParam alpha, SpectralParam eta,
                                        const Spin& si, const Spin& sj,
                                        const QContext& ctx,
                                        WeightConvention conv = {}) {
  return WeightKernel(alpha, eta, ctx, conv)(si, sj, ctx);
}

inline cplx boltzmann_w(SpectralParam alpha, SpectralParam eta, const Spin& si,
                        const Spin& sj, const QContext& ctx,
                        WeightConvention conv = {}) {
  ctx.validate();
  return boltzmann_w_scaled(alpha, eta, si, sj, ctx, conv).value();
}

/// S(z|m) = q^{-m} (1 - q^m z^2)(1 - q^m z^{-2}).
inline cplx self_weight_s(const Spin& s, const QContext& ctx) {
  const double qm = qpow(ctx.q, static_cast<double>(s.charge));
  const cplx z2 = std::polar(1.0, 2.0 * s.theta);
  return (1.0 - qm * z2) * (1.0 - qm * std::conj(z2)) / qm;
}

/// The same S written as Pochhammer ratios,
/// q^{-m} (q^m z^2;q)/(q^{m+1} z^2;q) * (q^m z^{-2};q)/(q^{m+1} z^{-2};q).
inline cplx self_weight_s_ratio(const Spin& s, const QContext& ctx) {
  const double qm = qpow(ctx.q, static_cast<double>(s.charge));
  const cplx z2 = std::polar(1.0, 2.0 * s.theta);
  const std::array<std::pair<cplx, cplx>, 2> pairs{
      {{qm * z2, ctx.q * qm * z2}, {qm * std::conj(z2), ctx.q * qm * std::conj(z2)}}};
  return qpoch_ratio(pairs, ctx) / qm;
}

/// Spectral-only prefactor of the face weight; the default is 1.
using FacePrefactor = std::function<cplx(const std::array<double, 4>&)>;

inline cplx unit_face_prefactor(const std::array<double, 4>&) { return {1.0, 0.0}; }

/// Which line differences enter the four legs of R_{(ti,tj)(tk,tl)}.
/// `printed` reads the subscripts literally:
///   a: 1/6+ti-tl, b: 1/3+tj-ti, f: 1/3+tl-tk, h: 1/6+tk-tj.
/// Going around the star centre these are differences of consecutive lines
/// in the order tl, ti, tj, tk, which does not alternate between the two
/// pairs, and the Yang-Baxter equation fails with them. `alternating` swaps
/// tj and tk (order tl, ti, tk, tj):
///   a: 1/6+ti-tl, b: 1/3+tk-ti, f: 1/3+tl-tj, h: 1/6+tj-tk.
enum class FaceLabels { printed, alternating };

inline std::string to_string(FaceLabels l) {
  return l == FaceLabels::printed ? "face-labels=printed" : "face-labels=alternating";
}

/// Spectral subscripts of the four W factors of R_{(ti,tj)(tk,tl)}, for
/// the corners a, b, f, h.
inline std::array<double, 4> face_spectral(const std::array<double, 4>& t,
                                           FaceLabels labels = FaceLabels::alternating) {
  const double ti = t[0];
  const double tl = t[3];
  const double tj = labels == FaceLabels::printed ? t[1] : t[2];
  const double tk = labels == FaceLabels::printed ? t[2] : t[1];
  return {1.0 / 6 + ti - tl, 1.0 / 3 + tj - ti, 1.0 / 3 + tl - tk, 1.0 / 6 + tk - tj};
}

/// R_{(ti,tj)(tk,tl)}(a b; f h) = prefactor(t) * sum_m int [d_m z]
///   W_{s_a}(a,z) W_{s_b}(b,z) W_{s_f}(f,z) W_{s_h}(h,z)
/// with s = face_spectral(t, labels) and [d_m z] = S(z|m) dz / (4 pi i z).
/// Corners are ordered a, b, f, h.
inline cplx face_weight_r(const std::array<double, 4>& t,
                          const std::array<Spin, 4>& corners, const QContext& ctx,
                          WeightConvention conv = {},
                          FaceLabels labels = FaceLabels::alternating,
                          const FacePrefactor& prefactor = unit_face_prefactor) {
  ctx.validate();
  const auto s = face_spectral(t, labels);
  std::array<WeightKernel, 4> w;
  for (int c = 0; c < 4; ++c) w[c] = WeightKernel(s[c], conv.eta(), ctx, conv);
  const cplx sum = bilateral_sum(
      [&](int m) {
        return circle_quadrature(
            [&](const CircleNode& node) {
              const Spin z(node.theta, m);
              ScaledComplex v;
              for (int c = 0; c < 4; ++c) v *= w[c](corners[c], z, ctx);
              v.mul(0.5 * self_weight_s(z, ctx));
              return v.value();
            },
            ctx.quad_points);
      },
      ctx);
  return prefactor(t) * sum;
}

/// S(x|X) = (1/2) (prod_{j != k} (q^{1+(X_j-X_k)/2} z_k/z_j;q)/(q^{(X_k-X_j)/2} z_j/z_k;q))^{-1}.
/// The (j,k) and (k,j) factors telescope to
///   (1/2) prod_{j<k} (1 - q^{-d} w)(1 - q^{d}/w),  w = z_j/z_k, d = (X_j-X_k)/2,
/// which is what is evaluated: it vanishes on coincident components and has
/// no poles.
inline cplx s_multi(const MultiSpin& x, const QContext& ctx) {
  ctx.validate();
  const std::size_t n = x.size();
  if (n == 0) throw PreconditionError("s_multi: empty multi-spin");
  cplx s{0.5, 0.0};
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = j + 1; k < n; ++k) {
      const auto& sj = x.components[j];
      const auto& sk = x.components[k];
      const cplx w = sj.fugacity() * std::conj(sk.fugacity());
      const double qd = qpow(ctx.q, 0.5 * (sj.charge - sk.charge));
      s *= (1.0 - w / qd) * (1.0 - qd * std::conj(w));
    }
  }
  return s;
}

/// S(x|X) straight from the Pochhammer ratios; used as a second evaluation
/// path. PoleError where single factors are singular (coincident components).
inline cplx s_multi_ratio(const MultiSpin& x, const QContext& ctx) {
  ctx.validate();
  const std::size_t n = x.size();
  if (n == 0) throw PreconditionError("s_multi_ratio: empty multi-spin");
  std::vector<std::pair<cplx, cplx>> pairs;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      if (j == k) continue;
      const auto& sj = x.components[j];
      const auto& sk = x.components[k];
      const cplx r = sk.fugacity() * std::conj(sj.fugacity());  // z_k / z_j
      const double d = 0.5 * (sj.charge - sk.charge);
      pairs.emplace_back(ctx.q * qpow(ctx.q, d) * r, qpow(ctx.q, -d) * std::conj(r));
    }
  }
  return 0.5 / qpoch_ratio(pairs, ctx);
}

/// Real spin pair (x, X) for the gamma-function weights.
struct RealSpin {
  double x = 0.0;
  int X = 0;
};

/// prod_{i,j} Gamma(alpha-eta +- [(X_i+Y_j)/2 + i(x_i+y_j)])
///          / Gamma(1+eta-alpha +- [-(X_i+Y_j)/2 + i(x_i+y_j)]),
/// with Gamma(a +- b) = Gamma(a+b) Gamma(a-b).
inline cplx gamma_weight_w(SpectralParam alpha, SpectralParam eta,
                           std::span<const RealSpin> x, std::span<const RealSpin> y) {
  cplx w{1.0, 0.0};
  const double a = alpha - eta;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < y.size(); ++j) {
      const double k = 0.5 * (x[i].X + y[j].X);
      const double th = x[i].x + y[j].x;
      const cplx bn{k, th};
      const cplx bd{-k, th};
      try {
        w *= gamma_fn(a + bn) * gamma_fn(a - bn) /
             (gamma_fn(1.0 - a + bd) * gamma_fn(1.0 - a - bd));
      } catch (const PoleError&) {
        throw PoleError("gamma_weight_w: gamma pole at pair (" + std::to_string(i) +
                            "," + std::to_string(j) + ")",
                        i * y.size() + j);
      }
    }
  }
  return w;
}

/// (1/n!) prod_{i != j} ((x_i - x_j)^2 + ((X_i - X_j)/2)^2).
inline double gamma_weight_s(std::span<const RealSpin> x) {
  double s = 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (i == j) continue;
      const double dx = x[i].x - x[j].x;
      const double dX = 0.5 * (x[i].X - x[j].X);
      s *= dx * dx + dX * dX;
    }
    s /= static_cast<double>(i + 1);
  }
  return s;
}

/// q-deformed cross-pair weight whose q -> 1 limit (after (1-q) rescaling)
/// is gamma_weight_w:
///   prod_{i,j} B(q^{alpha-eta+i th}, k) B(q^{alpha-eta-i th}, -k),
///   th = x_i + y_j, k = X_i + Y_j.
/// Unnormalized; used only by the exploratory multi-spin checks.
inline ScaledComplex cross_pair_weight(SpectralParam alpha, SpectralParam eta,
                                       std::span<const RealSpin> x,
                                       std::span<const RealSpin> y,
                                       const QContext& ctx) {
  ScaledComplex w;
  for (const auto& xi : x) {
    for (const auto& yj : y) {
      const double th = xi.x + yj.x;
      const int k = xi.X + yj.X;
      w *= chiral_block(qpow(ctx.q, cplx{alpha - eta, th}), k, ctx);
      w *= chiral_block(qpow(ctx.q, cplx{alpha - eta, -th}), -k, ctx);
    }
  }
  return w;
}

}  // namespace qhyper

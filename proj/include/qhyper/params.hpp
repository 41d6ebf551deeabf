#pragma once

// Flavor parameters, balanced parameter sets, their seeded generation and the
// pole guard that keeps denominators off the unit-circle contour.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qhyper/context.hpp"
#include "qhyper/error.hpp"

namespace qhyper {

/// How a flavor enters the integrand: as a*z, as a/z, or both.
enum class Coupling { both, z, inverse_z };

/// Flavor fugacity with its discrete charge.
struct FlavorParam {
  cplx fugacity{1.0, 0.0};
  int charge = 0;
  Coupling coupling = Coupling::both;
};

enum class IdentityKind { six_flavor, i_transform, star_triangle, star_star, ybe };

inline std::string_view to_string(IdentityKind k) {
  switch (k) {
    case IdentityKind::six_flavor: return "six-flavor";
    case IdentityKind::i_transform: return "i-transform";
    case IdentityKind::star_triangle: return "star-triangle";
    case IdentityKind::star_star: return "star-star";
    case IdentityKind::ybe: return "ybe";
  }
  return "unknown";
}

/// One identity instance. For the flavor identities `flavors` are the a_i
/// (resp. t_j followed by s_j); for the lattice identities they are the
/// external spins (unit fugacities) and `spectral` holds the spectral values.
struct ParameterSet {
  IdentityKind kind = IdentityKind::six_flavor;
  int n = 1;
  std::uint64_t seed = 0;
  double q = 0.5;
  std::vector<FlavorParam> flavors;
  std::vector<double> spectral;

  std::span<const FlavorParam> t_flavors() const {
    return std::span<const FlavorParam>(flavors).first(2 * n);
  }
  std::span<const FlavorParam> s_flavors() const {
    return std::span<const FlavorParam>(flavors).subspan(2 * n, 2 * n);
  }
};

/// Deviation of a flavor product from its balancing value, relative.
inline double balancing_defect(std::span<const FlavorParam> flavors,
                               cplx target) {
  cplx p{1.0, 0.0};
  for (const auto& f : flavors) p *= f.fugacity;
  return std::abs(p - target) / std::abs(target);
}

inline int charge_sum(std::span<const FlavorParam> flavors) {
  int s = 0;
  for (const auto& f : flavors) s += f.charge;
  return s;
}

/// Checks the balancing constraints of a flavor parameter set.
inline void check_balancing(const ParameterSet& ps, double tol = 1e-13) {
  if (ps.kind == IdentityKind::six_flavor) {
    if (ps.flavors.size() != 6) {
      throw PreconditionError("six-flavor set needs exactly 6 flavors");
    }
    const double d = balancing_defect(ps.flavors, cplx{ps.q, 0.0});
    if (!(d <= tol)) {
      throw PreconditionError("balancing violated: |prod a_i - q|/q = " +
                              std::to_string(d));
    }
    if (charge_sum(ps.flavors) != 0) {
      throw PreconditionError("balancing violated: sum n_i != 0");
    }
  } else if (ps.kind == IdentityKind::i_transform) {
    if (ps.n < 1 || ps.flavors.size() != static_cast<std::size_t>(4 * ps.n)) {
      throw PreconditionError("I-transform set needs 4n flavors");
    }
    const double d =
        balancing_defect(ps.flavors, cplx{std::pow(ps.q, ps.n), 0.0});
    if (!(d <= tol)) {
      throw PreconditionError("balancing violated: |prod s t - q^n|/q^n = " +
                              std::to_string(d));
    }
    if (charge_sum(ps.flavors) != 0) {
      throw PreconditionError("balancing violated: sum (tau + kappa) != 0");
    }
  }
}

/// Moduli window (as exponents rho with |a| = q^rho) and charge range used by
/// the seeded generator.
struct Profile {
  double rho_min = 0.0;
  double rho_max = 1.0;
  int max_charge = 2;
  double spectral_min = 0.0;
  double spectral_max = 0.0;
};

inline Profile default_profile(IdentityKind kind) {
  switch (kind) {
    case IdentityKind::six_flavor: return {1.0 / 6 - 0.05, 1.0 / 6 + 0.05, 2, 0, 0};
    case IdentityKind::i_transform: return {0.25 - 0.05, 0.25 + 0.05, 2, 0, 0};
    case IdentityKind::star_triangle: return {0, 1, 2, 0.1, 0.3};
    case IdentityKind::star_star: return {0, 1, 2, 0.15, 0.35};
    case IdentityKind::ybe: return {0, 1, 1, -0.03, 0.03};
  }
  return {};
}

namespace detail {

// Portable uniform draws from the standard-specified mt19937_64 stream.
class SeededStream {
 public:
  SeededStream(std::uint64_t seed, std::uint64_t salt)
      : engine_(seed * 0x9E3779B97F4A7C15ULL + salt) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<int>(engine_() % span);
  }

 private:
  std::mt19937_64 engine_;
};

inline std::vector<double> balanced_exponents(SeededStream& rng, std::size_t count,
                                              double target, const Profile& p) {
  const double mean = target / static_cast<double>(count);
  if (!(mean > p.rho_min && mean < p.rho_max)) {
    throw PreconditionError(
        "gen_balanced_params: infeasible profile, balanced exponent " +
        std::to_string(mean) + " outside window");
  }
  std::vector<double> rho(count);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    double sum = 0.0;
    for (auto& r : rho) {
      r = rng.uniform(p.rho_min, p.rho_max);
      sum += r;
    }
    const double shift = (target - sum) / static_cast<double>(count);
    bool ok = true;
    for (auto& r : rho) {
      r += shift;
      ok = ok && r >= p.rho_min && r <= p.rho_max;
    }
    if (ok) return rho;
  }
  throw PreconditionError("gen_balanced_params: infeasible profile");
}

inline std::vector<double> zero_sum_phases(SeededStream& rng, std::size_t count) {
  std::vector<double> ph(count);
  double sum = 0.0;
  for (auto& p : ph) {
    p = rng.uniform(0.0, kTwoPi);
    sum += p;
  }
  for (auto& p : ph) p -= sum / static_cast<double>(count);
  return ph;
}

// Moves charges one unit at a time (cyclically) until their sum is `target`.
inline void fix_charge_sum(std::vector<int>& c, int target, int max_charge) {
  int sum = 0;
  for (int v : c) sum += v;
  std::size_t i = 0;
  std::size_t stall = 0;
  while (sum != target) {
    int& v = c[i % c.size()];
    if (sum > target && v > -max_charge) {
      --v;
      --sum;
      stall = 0;
    } else if (sum < target && v < max_charge) {
      ++v;
      ++sum;
      stall = 0;
    } else if (++stall > c.size()) {
      throw PreconditionError("gen_balanced_params: charge window too narrow");
    }
    ++i;
  }
}

inline int floor_mod(int a, int n) { return ((a % n) + n) % n; }

}  // namespace detail

/// Deterministic pseudo-random parameter set satisfying the balancing
/// constraints of `kind`. Moduli are q^rho with rho drawn in the profile
/// window and shifted to the balancing value; phases sum to zero; charges
/// are drawn in [-max_charge, max_charge] and adjusted to the charge
/// constraint.
inline ParameterSet gen_balanced_params(std::uint64_t seed, IdentityKind kind,
                                        int n, double q,
                                        std::optional<Profile> profile = {}) {
  if (!(q > 0.0 && q < 1.0)) {
    throw PreconditionError("gen_balanced_params: q outside (0,1)");
  }
  const Profile p = profile.value_or(default_profile(kind));
  detail::SeededStream rng(seed, static_cast<std::uint64_t>(kind) + 1);
  ParameterSet ps;
  ps.kind = kind;
  ps.seed = seed;
  ps.q = q;
  ps.n = n;

  auto spins = [&](std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      FlavorParam f;
      f.fugacity = std::polar(1.0, rng.uniform(0.0, kTwoPi));
      f.charge = rng.integer(-p.max_charge, p.max_charge);
      ps.flavors.push_back(f);
    }
  };
  auto spectral_with_sum = [&](std::size_t count, double total) {
    std::vector<double> u(count);
    double sum = 0.0;
    for (auto& v : u) {
      v = rng.uniform(p.spectral_min, p.spectral_max);
      sum += v;
    }
    for (auto& v : u) v *= total / sum;
    return u;
  };

  switch (kind) {
    case IdentityKind::six_flavor: {
      ps.n = 1;
      const auto rho = detail::balanced_exponents(rng, 6, 1.0, p);
      const auto ph = detail::zero_sum_phases(rng, 6);
      std::vector<int> c(6);
      for (auto& v : c) v = rng.integer(-p.max_charge, p.max_charge);
      detail::fix_charge_sum(c, 0, p.max_charge);
      for (int i = 0; i < 6; ++i) {
        ps.flavors.push_back({std::polar(qpow(q, rho[i]), ph[i]), c[i], Coupling::both});
      }
      break;
    }
    case IdentityKind::i_transform: {
      if (n < 1) throw PreconditionError("gen_balanced_params: n < 1");
      const auto rho = detail::balanced_exponents(rng, 4 * n, static_cast<double>(n), p);
      const auto ph = detail::zero_sum_phases(rng, 4 * n);
      std::vector<int> tau(2 * n);
      std::vector<int> kappa(2 * n);
      for (auto& v : tau) v = rng.integer(-p.max_charge, p.max_charge);
      for (auto& v : kappa) v = rng.integer(-p.max_charge, p.max_charge);
      int t_sum = 0;
      for (int v : tau) t_sum += v;
      // Sum of tau divisible by n keeps the transformed charges integral.
      const int r = detail::floor_mod(t_sum, n);
      if (r != 0) {
        const int target = (r <= n / 2) ? t_sum - r : t_sum + (n - r);
        detail::fix_charge_sum(tau, target, p.max_charge);
        t_sum = target;
      }
      detail::fix_charge_sum(kappa, -t_sum, p.max_charge);
      for (int j = 0; j < 2 * n; ++j) {
        ps.flavors.push_back({std::polar(qpow(q, rho[j]), ph[j]), tau[j], Coupling::z});
      }
      for (int j = 0; j < 2 * n; ++j) {
        ps.flavors.push_back({std::polar(qpow(q, rho[2 * n + j]), ph[2 * n + j]),
                              kappa[j], Coupling::inverse_z});
      }
      break;
    }
    case IdentityKind::star_triangle:
      ps.spectral = spectral_with_sum(3, 0.5);
      spins(3);
      break;
    case IdentityKind::star_star: {
      // Stored in the star-star units where the four values sum to 2.
      const auto u = spectral_with_sum(4, 1.0);
      for (double v : u) ps.spectral.push_back(1.0 - 2.0 * v);
      // Four corners, n components each.
      if (n < 1) throw PreconditionError("gen_balanced_params: n < 1");
      spins(4 * static_cast<std::size_t>(n));
      break;
    }
    case IdentityKind::ybe:
      for (int i = 0; i < 6; ++i) ps.spectral.push_back(rng.uniform(p.spectral_min, p.spectral_max));
      spins(6);
      break;
  }
  return ps;
}

/// Location of the pole radius nearest to the unit circle.
struct PoleClearance {
  double clearance = INFINITY;
  std::size_t flavor = 0;
  int m = 0;
  std::int64_t k = 0;
  Coupling direction = Coupling::z;
};

/// Smallest distance | r - 1 | between the unit circle and any denominator
/// pole radius r of the chiral blocks, over charges |m| <= sum_m_max and
/// Pochhammer levels k <= product_truncation. B(x, c) has poles where
/// q^{k+|c|/2} x = 1 (negative charges only add a monomial), so a flavor a
/// with charge n coupled as a*z has poles at |z| = q^{-k-|n+m|/2}/|a|, and
/// coupled as a/z at |z| = |a| q^{k+|n-m|/2}.
inline PoleClearance pole_clearance(std::span<const FlavorParam> flavors,
                                    const QContext& ctx) {
  PoleClearance best;
  const double lq = std::log(ctx.q);
  const int M = ctx.sum_m_max;
  for (std::size_t i = 0; i < flavors.size(); ++i) {
    const auto& f = flavors[i];
    const double abs_a = std::abs(f.fugacity);
    const double target = -std::log(abs_a) / lq;  // level where r == 1
    for (Coupling dir : {Coupling::z, Coupling::inverse_z}) {
      if (f.coupling != Coupling::both && f.coupling != dir) continue;
      for (int m = -M; m <= M; ++m) {
        const int c = dir == Coupling::z ? f.charge + m : f.charge - m;
        const double half = 0.5 * std::abs(c);
        const auto k0 = static_cast<std::int64_t>(std::floor(target - half));
        for (std::int64_t k : {k0, k0 + 1}) {
          k = std::clamp<std::int64_t>(k, 0, ctx.product_truncation);
          const double e = static_cast<double>(k) + half;
          const double r = dir == Coupling::z ? std::exp(-e * lq) / abs_a
                                              : abs_a * std::exp(e * lq);
          const double d = std::fabs(r - 1.0);
          if (d < best.clearance) best = {d, i, m, k, dir};
        }
      }
    }
  }
  return best;
}

/// Returns the pole clearance; throws PoleError when it is below
/// ctx.pole_clearance.
inline double pole_guard(std::span<const FlavorParam> flavors,
                         const QContext& ctx) {
  const PoleClearance c = pole_clearance(flavors, ctx);
  if (c.clearance < ctx.pole_clearance) {
    throw PoleError("pole_guard: pole on contour (flavor " +
                        std::to_string(c.flavor) + ", m = " + std::to_string(c.m) +
                        ", k = " + std::to_string(c.k) + ", distance " +
                        std::to_string(c.clearance) + ")",
                    c.flavor);
  }
  return c.clearance;
}

inline double pole_guard(const ParameterSet& ps, const QContext& ctx) {
  if (ps.kind != IdentityKind::six_flavor && ps.kind != IdentityKind::i_transform) {
    throw PreconditionError("pole_guard: lattice parameter sets need effective flavors");
  }
  return pole_guard(std::span<const FlavorParam>(ps.flavors), ctx);
}

}  // namespace qhyper

#pragma once

// Residual reports, their JSON/CSV projections and wall-clock budgets.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qhyper/context.hpp"
#include "qhyper/error.hpp"
#include "qhyper/params.hpp"

namespace qhyper {

/// Both sides of a comparison must exceed this magnitude, so that 0 ~ 0
/// never passes.
inline constexpr double kNegligibleSide = 1e-30;

struct ResidualReport {
  std::string identity;
  std::uint64_t seed = 0;
  double q = 0.0;
  int n = 1;
  std::vector<FlavorParam> flavors;
  std::vector<double> spectral;
  cplx lhs{NAN, NAN};
  cplx rhs{NAN, NAN};
  double abs_residual = NAN;
  double rel_residual = NAN;
  QContext settings;
  std::vector<std::string> convention_flags;
  std::int64_t runtime_ms = 0;
  bool pass = false;
  /// Empty unless the evaluation raised.
  std::string error;
  /// Check-specific extras (deviation sequences, doubling deltas, ...).
  nlohmann::json diagnostics = nlohmann::json::object();

  void add_flag(const std::string& f) {
    for (const auto& g : convention_flags) {
      if (g == f) return;
    }
    convention_flags.push_back(f);
  }
  bool has_flag(const std::string& f) const {
    for (const auto& g : convention_flags) {
      if (g == f) return true;
    }
    return false;
  }
};

inline double relative_residual(cplx lhs, cplx rhs) {
  const double scale = std::fmax(std::abs(lhs), std::abs(rhs));
  if (scale == 0.0) return 0.0;
  return std::abs(lhs - rhs) / scale;
}

/// Fills residuals and the pass bit: rel_residual < settings.rel_tol and
/// both sides non-negligible.
inline void finalize(ResidualReport& r, cplx lhs, cplx rhs) {
  r.lhs = lhs;
  r.rhs = rhs;
  r.abs_residual = std::abs(lhs - rhs);
  r.rel_residual = relative_residual(lhs, rhs);
  const bool sized =
      std::abs(lhs) > kNegligibleSide && std::abs(rhs) > kNegligibleSide;
  if (!sized) r.add_flag("negligible-side");
  r.pass = sized && std::isfinite(r.rel_residual) &&
           r.rel_residual < r.settings.rel_tol;
}

inline ResidualReport make_report(std::string identity, const ParameterSet& ps,
                                  const QContext& ctx) {
  ResidualReport r;
  r.identity = std::move(identity);
  r.seed = ps.seed;
  r.q = ctx.q;
  r.n = ps.n;
  r.flavors = ps.flavors;
  r.spectral = ps.spectral;
  r.settings = ctx;
  return r;
}

inline nlohmann::json settings_json(const QContext& c) {
  return nlohmann::json{{"q", c.q},
                        {"product_truncation", c.product_truncation},
                        {"tail_tol", c.tail_tol},
                        {"sum_m_max", c.sum_m_max},
                        {"quad_points", c.quad_points},
                        {"rel_tol", c.rel_tol},
                        {"sum_tol", c.sum_tol},
                        {"pole_clearance", c.pole_clearance}};
}

/// Reads QContext overrides from a JSON object; unknown keys are rejected.
inline QContext settings_from_json(const nlohmann::json& j, QContext c) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    const auto& v = it.value();
    if (k == "q") c.q = v.get<double>();
    else if (k == "product_truncation") c.product_truncation = v.get<std::int64_t>();
    else if (k == "tail_tol") c.tail_tol = v.get<double>();
    else if (k == "sum_m_max") c.sum_m_max = v.get<int>();
    else if (k == "quad_points") c.quad_points = v.get<int>();
    else if (k == "rel_tol") c.rel_tol = v.get<double>();
    else if (k == "sum_tol") c.sum_tol = v.get<double>();
    else if (k == "pole_clearance") c.pole_clearance = v.get<double>();
    else throw PreconditionError("unknown settings key: " + k);
  }
  return c;
}

namespace detail {

inline nlohmann::json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace detail

/// Canonical record. Keys: identity, seed, q, params, lhs_re, lhs_im, rhs_re,
/// rhs_im, abs_residual, rel_residual, convention_flags, settings,
/// runtime_ms, pass, error, diagnostics.
inline nlohmann::json to_json(const ResidualReport& r) {
  using detail::number_or_null;
  nlohmann::json flavors = nlohmann::json::array();
  for (const auto& f : r.flavors) {
    flavors.push_back({{"modulus", std::abs(f.fugacity)},
                       {"phase", std::arg(f.fugacity)},
                       {"charge", f.charge}});
  }
  nlohmann::json j;
  j["identity"] = r.identity;
  j["seed"] = r.seed;
  j["q"] = r.q;
  j["params"] = {{"n", r.n}, {"flavors", flavors}, {"spectral", r.spectral}};
  j["lhs_re"] = number_or_null(r.lhs.real());
  j["lhs_im"] = number_or_null(r.lhs.imag());
  j["rhs_re"] = number_or_null(r.rhs.real());
  j["rhs_im"] = number_or_null(r.rhs.imag());
  j["abs_residual"] = number_or_null(r.abs_residual);
  j["rel_residual"] = number_or_null(r.rel_residual);
  j["convention_flags"] = r.convention_flags;
  j["settings"] = settings_json(r.settings);
  j["runtime_ms"] = r.runtime_ms;
  j["pass"] = r.pass;
  j["error"] = r.error.empty() ? nlohmann::json(nullptr) : nlohmann::json(r.error);
  j["diagnostics"] = r.diagnostics;
  return j;
}

inline std::string to_json_line(const ResidualReport& r) {
  return to_json(r).dump();
}

inline constexpr const char* kReportCsvHeader =
    "identity,seed,q,n,lhs_re,lhs_im,rhs_re,rhs_im,abs_residual,rel_residual,"
    "convention_flags,runtime_ms,pass,error";

namespace detail {

inline std::string csv_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

/// Lossy CSV projection: parameters and settings are dropped, flags are
/// joined with ';'.
inline std::string to_csv_row(const ResidualReport& r) {
  using detail::csv_number;
  std::string flags;
  for (std::size_t i = 0; i < r.convention_flags.size(); ++i) {
    if (i) flags += ';';
    flags += r.convention_flags[i];
  }
  std::ostringstream os;
  os << detail::csv_quote(r.identity) << ',' << r.seed << ',' << csv_number(r.q) << ','
     << r.n << ',' << csv_number(r.lhs.real()) << ',' << csv_number(r.lhs.imag()) << ','
     << csv_number(r.rhs.real()) << ',' << csv_number(r.rhs.imag()) << ','
     << csv_number(r.abs_residual) << ',' << csv_number(r.rel_residual) << ','
     << detail::csv_quote(flags) << ',' << r.runtime_ms << ','
     << (r.pass ? "true" : "false") << ',' << detail::csv_quote(r.error);
  return os.str();
}

/// Wall-clock budget carried by a checker.
class Budget {
 public:
  using clock = std::chrono::steady_clock;

  Budget() = default;
  static Budget seconds(double s) {
    Budget b;
    b.limit_s_ = s;
    b.start_ = clock::now();
    b.active_ = true;
    return b;
  }
  static Budget unlimited() { return Budget{}; }

  bool exceeded() const {
    return active_ && std::chrono::duration<double>(clock::now() - start_).count() > limit_s_;
  }
  double limit_seconds() const { return limit_s_; }

 private:
  clock::time_point start_{};
  double limit_s_ = 0.0;
  bool active_ = false;
};

inline constexpr double kDefaultBudgetSeconds = 120.0;
inline constexpr double kYbeBudgetSeconds = 1800.0;

/// Raised when a checker runs over its wall-clock budget; carries whatever
/// was computed so far.
class BudgetError : public Error {
 public:
  BudgetError(const std::string& what, ResidualReport partial)
      : Error(what), partial_(std::move(partial)) {}
  const ResidualReport& partial() const noexcept { return partial_; }

 private:
  ResidualReport partial_;
};

/// Measures elapsed wall time in milliseconds.
class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  std::int64_t ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace qhyper

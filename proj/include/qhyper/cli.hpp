#pragma once

// Front end shared by the qhyper executable and its tests: run configuration,
// the verify / scan / selftest drivers and their exit codes.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "qhyper/context.hpp"
#include "qhyper/error.hpp"
#include "qhyper/identities.hpp"
#include "qhyper/params.hpp"
#include "qhyper/qkernel.hpp"
#include "qhyper/quadrature.hpp"
#include "qhyper/report.hpp"

namespace qhyper {

inline constexpr int kExitPass = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

/// Bad command line or config file; maps to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Command { verify, scan, selftest };
enum class Format { json, csv };
enum class ScanKind { positivity, limit };

struct RunConfig {
  Command command = Command::verify;
  std::string identity;
  std::vector<std::uint64_t> seeds;
  std::vector<double> q_values{0.5};
  int n = 1;
  /// QContext fields; applied over the per-identity defaults.
  nlohmann::json overrides = nlohmann::json::object();
  std::string output_path;  // empty: stdout
  Format format = Format::json;
  /// Worker threads; 0 means one per processor.
  unsigned threads = 0;
  /// Record doubling deltas in each report.
  bool doubling = false;
  // scan
  ScanKind scan_kind = ScanKind::positivity;
  ScanGrid grid;
  // selftest
  std::optional<double> tail_tol;
};

inline const std::vector<std::string>& identity_tags() {
  static const std::vector<std::string> tags{
      "sum-integral", "star-triangle", "transform",      "v-consistency",
      "star-star",    "irf-ybe",       "classical-limit"};
  return tags;
}

inline bool known_identity(const std::string& tag) {
  const auto& t = identity_tags();
  return std::find(t.begin(), t.end(), tag) != t.end();
}

/// "a..b" (inclusive) or a comma list "1,4,7".
inline std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
  std::vector<std::uint64_t> out;
  auto num = [&](const std::string& s) -> std::uint64_t {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &pos);
    } catch (const std::exception&) {
      throw ConfigError("bad seed '" + s + "'");
    }
    if (pos != s.size() || s.empty() || s[0] == '-') throw ConfigError("bad seed '" + s + "'");
    return v;
  };
  const auto dots = spec.find("..");
  if (dots != std::string::npos) {
    const auto a = num(spec.substr(0, dots));
    const auto b = num(spec.substr(dots + 2));
    if (b < a) throw ConfigError("empty seed range '" + spec + "'");
    if (b - a > 1000000) throw ConfigError("seed range too large");
    for (auto s = a; s <= b; ++s) out.push_back(s);
    return out;
  }
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(num(item));
  if (out.empty()) throw ConfigError("no seeds given");
  return out;
}

inline std::vector<double> parse_real_list(const std::string& spec, char sep = ',') {
  std::vector<double> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, sep)) {
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + item + "'");
    }
    if (pos != item.size()) throw ConfigError("bad number '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty number list");
  return out;
}

inline Format parse_format(const std::string& s) {
  if (s == "json") return Format::json;
  if (s == "csv") return Format::csv;
  throw ConfigError("unknown format '" + s + "' (json|csv)");
}

/// Scan grid "k=v,...": kind=positivity|limit, angles=N, alphas=a:b:..,
/// max_charge=M.
inline void apply_grid_spec(RunConfig& c, const std::string& spec) {
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("grid entry '" + item + "' is not k=v");
    const std::string k = item.substr(0, eq);
    const std::string v = item.substr(eq + 1);
    try {
      if (k == "kind") {
        if (v == "positivity") c.scan_kind = ScanKind::positivity;
        else if (v == "limit") c.scan_kind = ScanKind::limit;
        else throw ConfigError("unknown scan kind '" + v + "'");
      } else if (k == "angles") {
        c.grid.angles = std::stoi(v);
      } else if (k == "alphas") {
        c.grid.alphas = parse_real_list(v, ':');
      } else if (k == "max_charge") {
        c.grid.max_charge = std::stoi(v);
      } else {
        throw ConfigError("unknown grid key '" + k + "'");
      }
    } catch (const std::invalid_argument&) {
      throw ConfigError("bad grid value '" + item + "'");
    } catch (const std::out_of_range&) {
      throw ConfigError("bad grid value '" + item + "'");
    }
  }
}

/// Reads a JSON config mirroring RunConfig over `c`. Keys: command, identity,
/// seeds (array or "a..b"), q_values, n, overrides, output_path, format,
/// threads, doubling, grid (string spec), tail_tol.
inline RunConfig config_from_json(const nlohmann::json& j, RunConfig c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto& k = it.key();
      const auto& v = it.value();
      if (k == "command") {
        const auto s = v.get<std::string>();
        if (s == "verify") c.command = Command::verify;
        else if (s == "scan") c.command = Command::scan;
        else if (s == "selftest") c.command = Command::selftest;
        else throw ConfigError("unknown command '" + s + "'");
      } else if (k == "identity") {
        c.identity = v.get<std::string>();
      } else if (k == "seeds") {
        if (v.is_string()) c.seeds = parse_seeds(v.get<std::string>());
        else c.seeds = v.get<std::vector<std::uint64_t>>();
      } else if (k == "q_values") {
        c.q_values = v.get<std::vector<double>>();
      } else if (k == "n") {
        c.n = v.get<int>();
      } else if (k == "overrides") {
        if (!v.is_object()) throw ConfigError("overrides must be an object");
        for (auto o = v.begin(); o != v.end(); ++o) c.overrides[o.key()] = o.value();
      } else if (k == "output_path") {
        c.output_path = v.get<std::string>();
      } else if (k == "format") {
        c.format = parse_format(v.get<std::string>());
      } else if (k == "threads") {
        c.threads = v.get<unsigned>();
      } else if (k == "doubling") {
        c.doubling = v.get<bool>();
      } else if (k == "grid") {
        apply_grid_spec(c, v.get<std::string>());
      } else if (k == "tail_tol") {
        c.tail_tol = v.get<double>();
      } else {
        throw ConfigError("unknown config key '" + k + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

inline RunConfig load_config_file(const std::string& path, RunConfig c) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
  return config_from_json(j, std::move(c));
}

/// Per-identity accepted tolerance and grid before overrides.
inline QContext default_settings(const std::string& identity, int n) {
  QContext c;
  if (identity == "sum-integral") c.rel_tol = 1e-8;
  else if (identity == "star-triangle") c.rel_tol = 1e-6;
  else if (identity == "transform") c.rel_tol = n == 1 ? 1e-8 : 1e-6;
  else if (identity == "v-consistency") c.rel_tol = 1e-9;
  else if (identity == "star-star") c.rel_tol = 1e-6;
  else if (identity == "irf-ybe") c.rel_tol = 1e-3;
  else if (identity == "classical-limit") c.rel_tol = 1e-2;
  return c;
}

/// Settings for one q value: defaults, then overrides, then q. Throws
/// ConfigError on invalid values.
inline QContext settings_for(const RunConfig& cfg, double q) {
  QContext c;
  try {
    c = settings_from_json(cfg.overrides, default_settings(cfg.identity, cfg.n));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("overrides: ") + e.what());
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  }
  c.q = q;
  try {
    c.validate();
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline void validate_config(const RunConfig& c) {
  if (c.command == Command::selftest) {
    if (c.tail_tol && !(*c.tail_tol > 0.0)) throw ConfigError("tail_tol must be positive");
    return;
  }
  if (c.q_values.empty()) throw ConfigError("no q values");
  for (double q : c.q_values) {
    if (!(q > 0.0 && q < 1.0)) {
      throw ConfigError("q value " + std::to_string(q) + " outside (0,1)");
    }
  }
  if (c.command == Command::scan) {
    if (c.grid.angles < 1 || c.grid.angles > 10000) throw ConfigError("grid angles out of range");
    if (c.grid.max_charge < 0 || c.grid.max_charge > 50) throw ConfigError("grid max_charge out of range");
    if (c.grid.alphas.empty()) throw ConfigError("grid has no alphas");
    for (double a : c.grid.alphas) {
      if (!std::isfinite(a)) throw ConfigError("non-finite grid alpha");
    }
    if (c.scan_kind == ScanKind::limit && c.seeds.empty()) {
      throw ConfigError("limit scan needs --seeds");
    }
    return;
  }
  if (!known_identity(c.identity)) {
    std::string all;
    for (const auto& t : identity_tags()) all += (all.empty() ? "" : ", ") + t;
    throw ConfigError("unknown identity '" + c.identity + "' (known: " + all + ")");
  }
  if (c.seeds.empty()) throw ConfigError("at least one seed is required");
  if (c.n < 1 || c.n > 4) throw ConfigError("n must be in 1..4");
  if (c.identity == "v-consistency" && c.n != 2) {
    throw ConfigError("v-consistency is defined for n = 2 only");
  }
  for (double q : c.q_values) settings_for(c, q);
}

/// Runs fn(i) for i in [0, count) on `threads` workers (0: one per
/// processor). The first exception is rethrown after all workers stop.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  unsigned t = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  t = static_cast<unsigned>(std::min<std::size_t>(t, count));
  if (t <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < t; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) first = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first) std::rethrow_exception(first);
}

namespace detail {

inline IdentityKind kind_for(const std::string& identity) {
  if (identity == "sum-integral") return IdentityKind::six_flavor;
  if (identity == "star-triangle") return IdentityKind::star_triangle;
  if (identity == "transform" || identity == "v-consistency") return IdentityKind::i_transform;
  if (identity == "star-star") return IdentityKind::star_star;
  if (identity == "irf-ybe") return IdentityKind::ybe;
  throw ConfigError("identity '" + identity + "' has no parameter generator");
}

// Calibrations done once per run, before the instances.
struct Frozen {
  std::optional<WeightConvention> weights;
  std::optional<IConvention> iconv;
  std::string error;
};

inline ResidualReport error_report(const std::string& identity, std::uint64_t seed,
                                   const QContext& ctx, int n, const std::string& what) {
  ResidualReport r;
  r.identity = identity;
  r.seed = seed;
  r.q = ctx.q;
  r.n = n;
  r.settings = ctx;
  r.pass = false;
  r.error = what;
  return r;
}

}  // namespace detail

/// One (identity, seed, q) instance; evaluation errors land in the report.
inline ResidualReport run_instance(const RunConfig& cfg, std::uint64_t seed,
                                   const QContext& ctx, const detail::Frozen& frozen) {
  const std::string& id = cfg.identity;
  CheckOptions opt;
  opt.doubling = cfg.doubling;
  try {
    if (!frozen.error.empty()) throw CalibrationError(frozen.error);
    if (id == "classical-limit") {
      return check_classical_limit(seed, default_limit_sequence(), ctx);
    }
    const int n = (id == "v-consistency") ? 2 : cfg.n;
    const ParameterSet ps = gen_balanced_params(seed, detail::kind_for(id), n, ctx.q);
    if (id == "sum-integral") return check_sum_integral(ps, ctx, opt);
    if (id == "star-triangle") return check_star_triangle(ps, ctx, *frozen.weights, opt);
    if (id == "transform") {
      return check_we7_transformation(ps, ctx, frozen.iconv.value_or(IConvention{}), opt);
    }
    if (id == "v-consistency") return check_v_consistency(ps, ctx, frozen.iconv, opt);
    if (id == "star-star") return check_star_star(ps, ctx, {}, opt);
    if (id == "irf-ybe") {
      YbeOptions yo;
      yo.budget_s = kYbeBudgetSeconds;
      return check_irf_ybe(ps, ctx, yo);
    }
  } catch (const BudgetError& e) {
    ResidualReport r = e.partial();
    r.error = e.what();
    r.pass = false;
    return r;
  } catch (const Error& e) {
    return detail::error_report(id, seed, ctx, cfg.n, e.what());
  }
  return detail::error_report(id, seed, ctx, cfg.n, "unhandled identity");
}

inline detail::Frozen calibrate_for(const RunConfig& cfg) {
  detail::Frozen f;
  const QContext ctx = settings_for(cfg, cfg.q_values.front());
  try {
    if (cfg.identity == "star-triangle") {
      const auto probe = gen_balanced_params(cfg.seeds.front(), IdentityKind::star_triangle, 1,
                                             ctx.q);
      f.weights = calibrate_star_triangle(std::span<const ParameterSet>(&probe, 1), ctx)
                      .convention;
    } else if (cfg.identity == "v-consistency" ||
               (cfg.identity == "transform" && cfg.n == 2)) {
      const auto probe =
          gen_balanced_params(cfg.seeds.front(), IdentityKind::i_transform, 2, ctx.q);
      f.iconv = calibrate_i_convention(probe, ctx);
    }
  } catch (const Error& e) {
    f.error = std::string("calibration: ") + e.what();
  }
  return f;
}

/// Reports for every (seed, q), in seed-major order.
inline std::vector<ResidualReport> verify_reports(const RunConfig& cfg) {
  validate_config(cfg);
  std::vector<QContext> ctxs;
  for (double q : cfg.q_values) ctxs.push_back(settings_for(cfg, q));
  const detail::Frozen frozen = calibrate_for(cfg);
  const std::size_t nq = ctxs.size();
  std::vector<ResidualReport> out(cfg.seeds.size() * nq);
  parallel_for(out.size(), cfg.threads, [&](std::size_t i) {
    out[i] = run_instance(cfg, cfg.seeds[i / nq], ctxs[i % nq], frozen);
  });
  return out;
}

/// Exploratory reports are emitted but do not decide the exit status.
inline bool counts_for_status(const ResidualReport& r) { return !r.has_flag("exploratory"); }

inline void write_reports(std::ostream& os, const std::vector<ResidualReport>& rs,
                          Format f) {
  if (f == Format::csv) os << kReportCsvHeader << '\n';
  for (const auto& r : rs) os << (f == Format::json ? to_json_line(r) : to_csv_row(r)) << '\n';
}

namespace detail {

template <class Writer>
void with_output(const RunConfig& cfg, Writer&& w) {
  if (cfg.output_path.empty()) {
    w(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream os(cfg.output_path);
  if (!os) throw ConfigError("cannot write '" + cfg.output_path + "'");
  w(os);
}

}  // namespace detail

inline int run_verify(const RunConfig& cfg, std::ostream& err = std::cerr) {
  std::vector<ResidualReport> rs;
  try {
    rs = verify_reports(cfg);
    detail::with_output(cfg, [&](std::ostream& os) { write_reports(os, rs, cfg.format); });
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  }
  bool ok = true;
  for (const auto& r : rs) {
    if (!counts_for_status(r)) continue;
    if (!r.pass) {
      ok = false;
      err << "FAIL " << r.identity << " seed=" << r.seed << " q=" << r.q
          << " rel=" << r.rel_residual << (r.error.empty() ? "" : " error: " + r.error) << '\n';
    }
  }
  return ok ? kExitPass : kExitFailure;
}

inline constexpr const char* kLimitCsvHeader =
    "seed,q,alpha,eta,x,X,y,Y,value_re,value_im,gamma_re,gamma_im,deviation";

/// Positivity scan: one block per q (CSV: header + rows, blocks separated by
/// a blank line; JSON: one summary record per q). Limit scan: the rescaled
/// q-weight against the gamma weight per seed and q = 1 - 2^-k, k = 4..10.
inline int run_scan(const RunConfig& cfg, std::ostream& err = std::cerr) {
  try {
    validate_config(cfg);
    bool ok = true;
    if (cfg.scan_kind == ScanKind::limit) {
      detail::with_output(cfg, [&](std::ostream& os) {
        os << kLimitCsvHeader << '\n';
        for (auto seed : cfg.seeds) {
          const LimitInput in = gen_limit_input(seed);
          const std::array<RealSpin, 1> xs{in.x};
          const std::array<RealSpin, 1> ys{in.y};
          const cplx g = gamma_weight_w(in.alpha, in.eta, xs, ys);
          for (double q : default_limit_sequence()) {
            const cplx v = rescaled_q_weight(in.alpha, in.eta, in.x, in.y, QContext{}.with_q(q));
            os << seed << ',' << detail::csv_number(q) << ',' << detail::csv_number(in.alpha)
               << ',' << detail::csv_number(in.eta) << ',' << detail::csv_number(in.x.x) << ','
               << in.x.X << ',' << detail::csv_number(in.y.x) << ',' << in.y.X << ','
               << detail::csv_number(v.real()) << ',' << detail::csv_number(v.imag()) << ','
               << detail::csv_number(g.real()) << ',' << detail::csv_number(g.imag()) << ','
               << detail::csv_number(relative_residual(v, g)) << '\n';
          }
        }
      });
      return kExitPass;
    }
    std::vector<ScanReport> blocks(cfg.q_values.size());
    std::vector<QContext> ctxs;
    for (double q : cfg.q_values) ctxs.push_back(settings_for(cfg, q));
    parallel_for(blocks.size(), cfg.threads,
                 [&](std::size_t i) { blocks[i] = positivity_scan(cfg.grid, ctxs[i]); });
    detail::with_output(cfg, [&](std::ostream& os) {
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        const auto& s = blocks[b];
        if (cfg.format == Format::csv) {
          if (b) os << '\n';
          os << kScanCsvHeader << '\n';
          for (const auto& row : s.rows) os << to_csv_row(row) << '\n';
        } else {
          nlohmann::json sec = nlohmann::json::array();
          for (const auto& [key, st] : s.sectors) {
            sec.push_back({{"m_i", key.first},
                           {"m_j", key.second},
                           {"count", st.count},
                           {"errors", st.errors},
                           {"min_phase", detail::number_or_null(st.min_phase)},
                           {"max_phase", detail::number_or_null(st.max_phase)}});
          }
          os << nlohmann::json{{"q", cfg.q_values[b]},
                               {"zero_charge_total", s.zero_charge_total},
                               {"zero_charge_positive", s.zero_charge_positive},
                               {"sectors", sec}}
                    .dump()
             << '\n';
        }
      }
    });
    for (const auto& s : blocks) {
      if (s.zero_charge_positive != s.zero_charge_total) {
        ok = false;
        err << "zero-charge slice not positive: " << s.zero_charge_positive << "/"
            << s.zero_charge_total << '\n';
      }
    }
    return ok ? kExitPass : kExitFailure;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  }
}

struct SelftestResult {
  std::string name;
  bool pass = false;
  double error = NAN;
  std::string detail;
};

/// Kernel and engine oracles. `tail_tol` replaces the product tail tolerance
/// (fault injection).
namespace detail {
inline std::string fmt_short(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}
}  // namespace detail

inline std::vector<SelftestResult> selftest_results(std::optional<double> tail_tol = {}) {
  std::vector<SelftestResult> out;
  QContext base;
  if (tail_tol) base.tail_tol = *tail_tol;
  auto record = [&](std::string name, double err, double tol) {
    out.push_back({std::move(name), std::isfinite(err) && err < tol, err, ""});
  };
  auto guarded = [&](const std::string& name, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      out.push_back({name, false, NAN, e.what()});
    }
  };
  for (double q : {0.3, 0.5, 0.7, 0.9}) {
    guarded("pentagonal q=" + detail::fmt_short(q), [&] {
      // Euler: (q;q) = sum_k (-1)^k q^{k(3k-1)/2}, k in Z. Near q = 1 the
      // terms are O(1) and the sum is tiny, so sum in long double.
      long double acc = 0.0L;
      long double comp = 0.0L;
      for (int k = -200; k <= 200; ++k) {
        const long double e = 0.5L * k * (3.0L * k - 1.0L);
        const long double term = (k % 2 ? -1.0L : 1.0L) * std::pow(static_cast<long double>(q), e);
        const long double y = term - comp;
        const long double t = acc + y;
        comp = (t - acc) - y;
        acc = t;
      }
      const double series = static_cast<double>(acc);
      const cplx v = qpoch_inf(cplx{q, 0.0}, base.with_q(q));
      record("pentagonal q=" + detail::fmt_short(q), std::abs(v - series) / std::fabs(series),
             1e-12);
    });
  }
  guarded("gamma recurrence", [&] {
    double worst = 0.0;
    for (cplx z : {cplx{0.3, 0.0}, cplx{2.5, 0.0}, cplx{0.7, 1.3}, cplx{-1.4, 0.6},
                   cplx{3.2, -2.1}}) {
      worst = std::fmax(worst, std::abs(gamma_fn(z + 1.0) - z * gamma_fn(z)) /
                                   std::abs(z * gamma_fn(z)));
    }
    record("gamma recurrence", worst, 1e-12);
  });
  guarded("telescoping", [&] {
    double worst = 0.0;
    const QContext c = base.with_q(0.5);
    for (cplx w : {cplx{0.3, 0.2}, cplx{-0.8, 0.1}, cplx{0.5, -0.5}}) {
      const std::array<std::pair<cplx, cplx>, 1> p{{{w, c.q * w}}};
      worst = std::fmax(worst, std::abs(qpoch_ratio(p, c) - (1.0 - w)) / std::abs(1.0 - w));
    }
    record("telescoping", worst, 1e-14);
  });
  guarded("k symmetry", [&] {
    double worst = 0.0;
    const QContext c = base.with_q(0.5);
    for (double a : {0.02, 0.07, 0.13}) {
      worst = std::fmax(worst, std::fabs(k_alpha(a, c) - k_alpha(-a, c)) / k_alpha(a, c));
    }
    record("k symmetry", worst, 1e-12);
  });
  guarded("circle orthogonality", [&] {
    double worst = 0.0;
    const int N = 64;
    for (int k = -N + 1; k < N; ++k) {
      const cplx v = circle_quadrature([k](cplx z) { return std::pow(z, k); }, N);
      worst = std::fmax(worst, std::abs(v - (k == 0 ? 1.0 : 0.0)));
    }
    record("circle orthogonality", worst, 1e-13);
  });
  guarded("bilateral geometric", [&] {
    const QContext c = base.with_q(0.5);
    const cplx s = bilateral_sum([&](int m) { return cplx{std::pow(c.q, std::abs(m)), 0.0}; }, c);
    record("bilateral geometric", std::abs(s - 3.0) / 3.0, 1e-14);
  });
  return out;
}

inline int run_selftest(const RunConfig& cfg, std::ostream& os = std::cout,
                        std::ostream& err = std::cerr) {
  try {
    validate_config(cfg);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  }
  bool ok = true;
  for (const auto& r : selftest_results(cfg.tail_tol)) {
    os << (r.pass ? "ok   " : "FAIL ") << r.name << "  err=" << r.error;
    if (!r.detail.empty()) os << "  (" << r.detail << ")";
    os << '\n';
    ok = ok && r.pass;
  }
  return ok ? kExitPass : kExitFailure;
}

inline int run(const RunConfig& cfg, std::ostream& err = std::cerr) {
  switch (cfg.command) {
    case Command::verify: return run_verify(cfg, err);
    case Command::scan: return run_scan(cfg, err);
    case Command::selftest: return run_selftest(cfg, std::cout, err);
  }
  return kExitConfig;
}

}  // namespace qhyper

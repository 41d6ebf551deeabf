// qhyper: verify identities over seeded parameter sets, scan weights, and
// run the kernel self-test.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qhyper/cli.hpp"

namespace {

struct Flags {
  std::string config;
  std::string identity;
  std::string seeds;
  std::string q;
  std::optional<int> n;
  std::optional<double> tol;
  std::optional<int> nodes;
  std::optional<int> mmax;
  std::string out;
  std::string format;
  std::optional<unsigned> threads;
  bool doubling = false;
  std::string grid;
  std::optional<double> tail_tol;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON config file (flags override it)");
  app->add_option("--q", f.q, "comma-separated q values in (0,1)");
  app->add_option("--out", f.out, "output file (default stdout)");
  app->add_option("--format", f.format, "json | csv");
  app->add_option("--threads", f.threads, "worker threads (default: processors)");
}

qhyper::RunConfig build(qhyper::Command cmd, const Flags& f) {
  using namespace qhyper;
  RunConfig c;
  c.command = cmd;
  if (!f.config.empty()) c = load_config_file(f.config, c);
  c.command = cmd;
  if (!f.identity.empty()) c.identity = f.identity;
  if (!f.seeds.empty()) c.seeds = parse_seeds(f.seeds);
  if (!f.q.empty()) c.q_values = parse_real_list(f.q);
  if (f.n) c.n = *f.n;
  if (f.tol) c.overrides["rel_tol"] = *f.tol;
  if (f.nodes) c.overrides["quad_points"] = *f.nodes;
  if (f.mmax) c.overrides["sum_m_max"] = *f.mmax;
  if (!f.out.empty()) c.output_path = f.out;
  if (!f.format.empty()) c.format = parse_format(f.format);
  if (f.threads) c.threads = *f.threads;
  if (f.doubling) c.doubling = true;
  if (!f.grid.empty()) apply_grid_spec(c, f.grid);
  if (f.tail_tol) c.tail_tol = *f.tail_tol;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks of q-hypergeometric lattice-model identities"};
  app.require_subcommand(1);
  Flags f;

  auto* verify = app.add_subcommand("verify", "check an identity over seeds x q values");
  add_common(verify, f);
  verify->add_option("--identity", f.identity,
                     "sum-integral | star-triangle | transform | v-consistency | "
                     "star-star | irf-ybe | classical-limit");
  verify->add_option("--seeds", f.seeds, "a..b or comma list");
  verify->add_option("--n", f.n, "rank for transform / star-star (default 1)");
  verify->add_option("--tol", f.tol, "relative tolerance");
  verify->add_option("--nodes", f.nodes, "quadrature nodes per circle");
  verify->add_option("--mmax", f.mmax, "charge cap of the m-sums");
  verify->add_flag("--doubling", f.doubling, "record doubling deltas in the reports");

  auto* scan = app.add_subcommand("scan", "positivity / classical-limit tables");
  add_common(scan, f);
  scan->add_option("--grid", f.grid,
                   "k=v,...: kind=positivity|limit, angles=N, alphas=a:b:.., max_charge=M");
  scan->add_option("--seeds", f.seeds, "seeds for kind=limit");

  auto* self = app.add_subcommand("selftest", "kernel and engine oracles");
  self->add_option("--tail-tol", f.tail_tol, "override the product tail tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return qhyper::kExitConfig;
  }

  try {
    qhyper::Command cmd = qhyper::Command::verify;
    if (scan->parsed()) cmd = qhyper::Command::scan;
    if (self->parsed()) cmd = qhyper::Command::selftest;
    return qhyper::run(build(cmd, f));
  } catch (const qhyper::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return qhyper::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return qhyper::kExitFailure;
  }
}

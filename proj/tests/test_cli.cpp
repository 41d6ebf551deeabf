#include <gtest/gtest.h>

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qhyper/cli.hpp"

using namespace qhyper;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

// Runs the built CLI with `args`, capturing stdout; stderr is discarded.
Run run_cli(const std::string& args) {
  const std::string cmd = std::string(QHYPER_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string l;
  while (std::getline(ss, l)) out.push_back(l);
  return out;
}

std::string strip_runtime(const std::string& text) {
  std::string out;
  for (const auto& l : lines(text)) {
    auto j = nlohmann::json::parse(l);
    j.erase("runtime_ms");
    out += j.dump() + "\n";
  }
  return out;
}

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("qhyper_test_" + std::to_string(::getpid()) + "_" + name);
}

}  // namespace

TEST(ParseSeeds, RangesAndLists) {
  EXPECT_EQ(parse_seeds("1..4"), (std::vector<std::uint64_t>{1, 2, 3, 4}));
  EXPECT_EQ(parse_seeds("7"), (std::vector<std::uint64_t>{7}));
  EXPECT_EQ(parse_seeds("3,1,9"), (std::vector<std::uint64_t>{3, 1, 9}));
  EXPECT_THROW(parse_seeds("5..2"), ConfigError);
  EXPECT_THROW(parse_seeds("x"), ConfigError);
  EXPECT_THROW(parse_seeds("1..y"), ConfigError);
}

TEST(Config, Validation) {
  RunConfig c;
  c.identity = "sum-integral";
  c.seeds = {1};
  EXPECT_NO_THROW(validate_config(c));
  c.q_values = {1.5};
  EXPECT_THROW(validate_config(c), ConfigError);
  c.q_values = {0.5};
  c.identity = "pentagon";
  EXPECT_THROW(validate_config(c), ConfigError);
  c.identity = "sum-integral";
  c.seeds.clear();
  EXPECT_THROW(validate_config(c), ConfigError);
  c.seeds = {1};
  c.overrides = {{"quad_points", 7}};
  EXPECT_THROW(validate_config(c), ConfigError);
  c.overrides = {{"no_such_field", 1}};
  EXPECT_THROW(validate_config(c), ConfigError);
}

TEST(Config, JsonMirrorsRunConfig) {
  const auto j = nlohmann::json::parse(
      R"({"command":"verify","identity":"transform","seeds":"2..3","q_values":[0.4,0.6],
          "n":2,"overrides":{"quad_points":128},"format":"csv","threads":1})");
  const RunConfig c = config_from_json(j, RunConfig{});
  EXPECT_EQ(c.identity, "transform");
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{2, 3}));
  EXPECT_EQ(c.q_values, (std::vector<double>{0.4, 0.6}));
  EXPECT_EQ(c.n, 2);
  EXPECT_EQ(c.format, Format::csv);
  EXPECT_EQ(settings_for(c, 0.4).quad_points, 128);
  EXPECT_EQ(settings_for(c, 0.4).rel_tol, 1e-6);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"bogus":1})"), RunConfig{}), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"n":"two"})"), RunConfig{}), ConfigError);
}

TEST(Config, GridSpec) {
  RunConfig c;
  apply_grid_spec(c, "kind=positivity,angles=4,alphas=0.1:0.2,max_charge=1");
  EXPECT_EQ(c.grid.angles, 4);
  EXPECT_EQ(c.grid.alphas, (std::vector<double>{0.1, 0.2}));
  EXPECT_EQ(c.grid.max_charge, 1);
  EXPECT_THROW(apply_grid_spec(c, "angles"), ConfigError);
  EXPECT_THROW(apply_grid_spec(c, "angles=x"), ConfigError);
  EXPECT_THROW(apply_grid_spec(c, "colour=red"), ConfigError);
}

TEST(Verify, InProcessExitCodes) {
  RunConfig c;
  c.identity = "classical-limit";
  c.seeds = {1, 2};
  c.threads = 1;
  c.output_path = temp_file("inproc.jsonl").string();
  std::ostringstream err;
  EXPECT_EQ(run_verify(c, err), kExitPass);
  c.overrides = {{"rel_tol", 1e-12}};
  EXPECT_EQ(run_verify(c, err), kExitFailure);
  EXPECT_NE(err.str().find("FAIL classical-limit"), std::string::npos);
  c.q_values = {0.0};
  EXPECT_EQ(run_verify(c, err), kExitConfig);
  fs::remove(c.output_path);
}

TEST(Verify, SumIntegralSeedsOneToTen) {
  const auto r = run_cli("verify --identity sum-integral --seeds 1..10 --q 0.5 --threads 1");
  EXPECT_EQ(r.status, 0);
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 10u);
  for (std::size_t i = 0; i < ls.size(); ++i) {
    const auto j = nlohmann::json::parse(ls[i]);
    EXPECT_TRUE(j["pass"].get<bool>());
    EXPECT_EQ(j["seed"].get<int>(), static_cast<int>(i + 1));
    for (const char* k : {"identity", "seed", "q", "params", "lhs_re", "lhs_im", "rhs_re",
                          "rhs_im", "abs_residual", "rel_residual", "convention_flags",
                          "settings", "runtime_ms", "pass"}) {
      EXPECT_TRUE(j.contains(k)) << k;
    }
    const auto& f = j["params"]["flavors"][0];
    EXPECT_TRUE(f.contains("modulus") && f.contains("phase") && f.contains("charge"));
  }
}

TEST(Verify, BadInputExitsTwo) {
  EXPECT_EQ(run_cli("verify --identity sum-integral --seeds 1 --q 1.5").status, 2);
  EXPECT_EQ(run_cli("verify --identity no-such-identity --seeds 1").status, 2);
  EXPECT_EQ(run_cli("verify --identity sum-integral").status, 2);
  EXPECT_EQ(run_cli("verify --identity sum-integral --seeds 1 --nodes 5").status, 2);
  EXPECT_EQ(run_cli("verify --identity sum-integral --seeds 1 --format xml").status, 2);
  EXPECT_EQ(run_cli("frobnicate").status, 2);
  EXPECT_EQ(run_cli("verify --config /nonexistent/cfg.json --seeds 1").status, 2);
}

TEST(Verify, ConfigFileAndFlagOverride) {
  const auto cfg = temp_file("cfg.json");
  {
    std::ofstream os(cfg);
    os << R"({"identity":"classical-limit","seeds":[1,2],"q_values":[1.5]})";
  }
  EXPECT_EQ(run_cli("verify --config " + cfg.string()).status, 2);
  const auto r = run_cli("verify --config " + cfg.string() + " --q 0.5");
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(lines(r.out).size(), 2u);
  fs::remove(cfg);
}

TEST(Verify, DeterministicModuloRuntime) {
  const auto a = temp_file("a.jsonl");
  const auto b = temp_file("b.jsonl");
  const std::string args = "verify --identity star-triangle --seeds 1..2 --q 0.5,0.6 --nodes 256 ";
  ASSERT_EQ(run_cli(args + "--threads 1 --out " + a.string()).status, 0);
  ASSERT_EQ(run_cli(args + "--threads 2 --out " + b.string()).status, 0);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const std::string ta = slurp(a);
  EXPECT_EQ(lines(ta).size(), 4u);
  EXPECT_EQ(strip_runtime(ta), strip_runtime(slurp(b)));
  fs::remove(a);
  fs::remove(b);
}

TEST(Verify, CsvProjection) {
  const auto r = run_cli("verify --identity classical-limit --seeds 1..3 --format csv");
  EXPECT_EQ(r.status, 0);
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 4u);
  EXPECT_EQ(ls[0], kReportCsvHeader);
}

TEST(Scan, ZeroChargeCsvBlocksPerQ) {
  const auto r = run_cli("scan --grid angles=5,alphas=0.1:0.3 --q 0.3,0.5,0.7 --format csv");
  EXPECT_EQ(r.status, 0);
  const auto ls = lines(r.out);
  int headers = 0;
  int blanks = 0;
  int rows = 0;
  for (const auto& l : ls) {
    if (l == "q,alpha,theta_i,theta_j,m_i,m_j,value_re,value_im,phase,flags") ++headers;
    else if (l.empty()) ++blanks;
    else {
      ++rows;
      EXPECT_NE(l.find(",positive"), std::string::npos) << l;
    }
  }
  EXPECT_EQ(headers, 3);
  EXPECT_EQ(blanks, 2);
  EXPECT_EQ(rows, 3 * 5 * 5 * 2);
}

TEST(Scan, JsonSummaryAndLimitTable) {
  const auto r = run_cli("scan --grid angles=3,max_charge=1 --q 0.5");
  EXPECT_EQ(r.status, 0);
  const auto j = nlohmann::json::parse(lines(r.out).at(0));
  EXPECT_EQ(j["zero_charge_total"], j["zero_charge_positive"]);
  EXPECT_EQ(j["sectors"].size(), 9u);

  const auto lim = run_cli("scan --grid kind=limit --seeds 1..2");
  EXPECT_EQ(lim.status, 0);
  const auto ls = lines(lim.out);
  ASSERT_EQ(ls.size(), 1u + 2u * 7u);
  EXPECT_EQ(ls[0], kLimitCsvHeader);
  EXPECT_EQ(run_cli("scan --grid kind=limit").status, 2);
  EXPECT_EQ(run_cli("scan --grid angles=0").status, 2);
}

TEST(Selftest, PassesQuickly) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_cli("selftest");
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(r.status, 0) << r.out;
  EXPECT_LT(s, 10.0);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST(Selftest, CorruptedToleranceNamesFailures) {
  const auto results = selftest_results(1.0);
  bool any = false;
  for (const auto& x : results) {
    if (!x.pass) {
      any = true;
      EXPECT_FALSE(x.name.empty());
    }
  }
  EXPECT_TRUE(any);
  const auto r = run_cli("selftest --tail-tol 1");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.out.find("FAIL pentagonal"), std::string::npos) << r.out;
}

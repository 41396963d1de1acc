#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>
#include <string>

#include "ldgl/config.hpp"
#include "ldgl/runner.hpp"

using namespace ldgl;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("ldgl_test_" + name);
  fs::remove_all(p);
  return p;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(LDGL_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = fs::temp_directory_path() / ("ldgl_test_" + name + ".toml");
  write_atomic(p, text);
  return p;
}

std::string small_model(const std::string& task, const std::string& sweep) {
  return "task = \"" + task + R"("
seed = 9
[model]
height = 1.0
wx = 1.0
wy = 1.0
h_ex = 5.0
pad = 0.25
n_layers = 4
[mesh]
nx = 9
ny = 9
sub = 2
[minimize]
max_iters = 60
init = "perturbed-normal"
[sweep]
)" + sweep;
}

size_t csv_rows(const std::string& csv) { return std::count(csv.begin(), csv.end(), '\n') - 1; }

}  // namespace

TEST(Runner, LogRuleSweepHasIncreasingMeps) {
  auto c = parse_config_toml(small_model("minimize-ld", "epsilon = [0.3, 0.28, 0.26]\nh_ex_rule = \"log_eps_squared\"\n"));
  c.minimize.max_iters = 5;
  RunOptions o;
  o.out = scratch("run_log");
  const auto s = run_experiment(c, o);
  EXPECT_EQ(s.ok, 3);
  EXPECT_EQ(s.exit_code(), 0);
  const auto rep = read_json(o.out / "report.json");
  ASSERT_EQ(rep.at("rows").size(), 3u);
  EXPECT_EQ(csv_rows(read_file(o.out / "report.csv")), 3u);
  double prev = 0;
  for (const auto& r : rep.at("rows")) {
    const double M = r.at("M_eps");
    const ModelParams p = params_from_json(read_json(o.out / point_dir_name(r.at("point")) / "config.json").at("params"));
    EXPECT_NEAR(M, m_epsilon(p), 1e-12 * M);
    EXPECT_GT(M, prev);
    prev = M;
  }
  for (int i = 0; i < 3; ++i)
    for (const char* f : {"config.json", "energy.json", "report.json", "trace.csv", "state.ldgl", "status.json"})
      EXPECT_TRUE(fs::exists(o.out / point_dir_name(i) / f)) << f;
  EXPECT_TRUE(verify_run(o.out).ok());
}

TEST(Runner, ConstructionPointWritesReport) {
  auto c = parse_config_toml(small_model("construct-upper-bound", "epsilon = [0.25]\n"));
  c.pad = {0.375};
  c.construction.d = 0.25;
  c.construction.candidates = 2;
  RunOptions o;
  o.out = scratch("run_construct");
  o.dump_fields = true;
  EXPECT_EQ(run_experiment(c, o).ok, 1);
  const auto j = read_json(o.out / "point_000" / "construction.json");
  EXPECT_EQ(j.at("schema_version"), kSchemaVersion);
  EXPECT_TRUE(j.contains("I2"));
  EXPECT_TRUE(fs::exists(o.out / "point_000" / "h_eps.csv"));
  EXPECT_TRUE(fs::exists(o.out / "point_000" / "vorticity.csv"));
  const auto r = read_json(o.out / "point_000" / "report.json");
  EXPECT_EQ(r.at("josephson_ratio"), 0.0);
  EXPECT_TRUE(verify_run(o.out).ok());
}

TEST(Runner, CompareGateSkipsAndRowsCountNonSkipped) {
  auto c = parse_config_toml(small_model("compare-ld-agl", "epsilon = [0.25]\ns = [0.25, 0.5]\n"));
  c.n_layers.clear();
  c.s = {0.25, 0.5};
  RunOptions o;
  o.out = scratch("run_compare");
  const auto s = run_experiment(c, o);
  EXPECT_EQ(s.ok, 1);
  EXPECT_EQ(s.skipped, 1);
  const auto rep = read_json(o.out / "report.json");
  EXPECT_EQ(rep.at("rows").size(), 1u);
  ASSERT_EQ(rep.at("skipped").size(), 1u);
  EXPECT_NE(rep.at("skipped")[0].at("reason").get<std::string>().find("exceeds"), std::string::npos);
  EXPECT_EQ(csv_rows(read_file(o.out / "report.csv")), 1u);
  const auto row = rep.at("rows")[0];
  EXPECT_EQ(row.at("bound_holds"), 1);
  EXPECT_TRUE(fs::exists(o.out / "point_000" / "state_agl.ldgl"));
  EXPECT_TRUE(verify_run(o.out).ok());
}

TEST(Runner, FailingPointIsIsolated) {
  auto c = parse_config_toml(small_model("minimize-ld", "epsilon = [0.25]\n"));
  RunOptions o;
  o.out = scratch("run_fail");
  // a warm start for other parameters fails every point without stopping the sweep
  auto other = c;
  other.epsilon = {0.3};
  other.minimize.max_iters = 1;
  RunOptions o2;
  o2.out = scratch("run_fail_src");
  run_experiment(other, o2);
  c.warm_start = (o2.out / "point_000" / "state.ldgl").string();
  c.epsilon = {0.25, 0.3};
  const auto s = run_experiment(c, o);
  EXPECT_EQ(s.ok, 1);
  EXPECT_EQ(s.failed, 1);
  EXPECT_EQ(s.exit_code(), 3);
  const auto rep = read_json(o.out / "report.json");
  ASSERT_EQ(rep.at("rows").size(), 2u);
  EXPECT_EQ(rep.at("rows")[0].at("status"), "failed");
  EXPECT_EQ(rep.at("rows")[1].at("status"), "ok");
}

TEST(Runner, VerifyDetectsTampering) {
  auto c = parse_config_toml(small_model("diagnostics", "epsilon = [0.25]\n"));
  c.diagnostics_source = "random";
  RunOptions o;
  o.out = scratch("run_tamper");
  run_experiment(c, o);
  EXPECT_TRUE(verify_run(o.out).ok());
  auto e = read_json(o.out / "point_000" / "energy.json");
  e["total"] = e["total"].get<double>() * (1 + 1e-9);
  write_json(o.out / "point_000" / "energy.json", e);
  const auto v = verify_run(o.out);
  EXPECT_FALSE(v.ok());
  EXPECT_NE(v.mismatches.at(0).find("total"), std::string::npos);
}

TEST(Runner, SameSeedIsBitIdenticalAcrossWorkers) {
  auto c = parse_config_toml(small_model("minimize-agl", "epsilon = [0.3, 0.28]\n"));
  c.init = "random";
  RunOptions a, b;
  a.out = scratch("run_rep_a");
  b.out = scratch("run_rep_b");
  b.workers = 2;
  run_experiment(c, a);
  run_experiment(c, b);
  EXPECT_EQ(read_file(a.out / "report.csv"), read_file(b.out / "report.csv"));
  EXPECT_EQ(read_file(a.out / "point_001" / "state.ldgl"), read_file(b.out / "point_001" / "state.ldgl"));
}

TEST(Cli, ExitCodes) {
  const auto good = write_config("cli_good", small_model("minimize-ld", "epsilon = [0.25]\n"));
  const auto out = scratch("cli_out");
  EXPECT_EQ(cli("minimize-ld --config " + good.string() + " --out " + out.string() + " --seed 3"), 0);
  EXPECT_EQ(read_json(out / "point_000" / "status.json").at("seed"), 3);
  EXPECT_EQ(cli("verify " + out.string()), 0);
  EXPECT_EQ(cli("report " + out.string()), 0);
  // task mismatch, missing file, empty axis, bad flag
  EXPECT_EQ(cli("minimize-agl --config " + good.string() + " --out " + out.string()), 2);
  EXPECT_EQ(cli("minimize-ld --config /nonexistent.toml --out " + out.string()), 2);
  const auto empty = write_config("cli_empty", small_model("minimize-ld", "epsilon = []\n"));
  EXPECT_EQ(cli("minimize-ld --config " + empty.string() + " --out " + out.string()), 2);
  EXPECT_EQ(cli("minimize-ld --bogus"), 2);
  EXPECT_EQ(cli("verify /nonexistent_dir"), 2);
}

TEST(Cli, PartialFailureExitsThree) {
  auto src = parse_config_toml(small_model("minimize-ld", "epsilon = [0.3]\n"));
  src.minimize.max_iters = 1;
  RunOptions o;
  o.out = scratch("cli_partial_src");
  run_experiment(src, o);
  std::string text = small_model("minimize-ld", "epsilon = [0.25, 0.3]\n");
  const auto pos = text.find("init = ");
  text.insert(pos, "warm_start = \"" + (o.out / "point_000" / "state.ldgl").string() + "\"\n");
  const auto cfg = write_config("cli_partial", text);
  EXPECT_EQ(cli("minimize-ld --config " + cfg.string() + " --out " + scratch("cli_partial_out").string()), 3);
}

TEST(Cli, ReportMergesRuns) {
  auto c = parse_config_toml(small_model("minimize-ld", "epsilon = [0.25]\n"));
  c.minimize.max_iters = 3;
  RunOptions a, b;
  a.out = scratch("merge_a");
  b.out = scratch("merge_b");
  run_experiment(c, a);
  run_experiment(c, b);
  const auto out = scratch("merge_out");
  EXPECT_EQ(cli("report " + a.out.string() + " " + b.out.string() + " --out " + out.string()), 0);
  const std::string csv = read_file(out / "report.csv");
  EXPECT_EQ(csv_rows(csv), 2u);
  EXPECT_EQ(csv.substr(0, 4), "run,");
}

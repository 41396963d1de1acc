#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ldgl/config.hpp"
#include "ldgl/runner.hpp"

namespace {

struct Flags {
  std::string config;
  std::string out;
  int workers = 1;
  bool dump_fields = false;
  std::optional<std::int64_t> seed;
  std::vector<std::string> dirs;
};

int run_task(ldgl::Task task, const Flags& f) {
  if (f.config.empty()) throw ldgl::ConfigError("--config is required");
  ldgl::ExperimentConfig c = ldgl::load_config(f.config);
  if (c.task_given && c.task != task)
    throw ldgl::ConfigError(std::string("config task '") + ldgl::task_name(c.task) + "' does not match subcommand '" +
                            ldgl::task_name(task) + "'");
  c.task = task;
  if (f.seed) c.seed = static_cast<std::uint64_t>(*f.seed);
  if (f.workers < 1) throw ldgl::ConfigError("--workers must be >= 1");
  ldgl::RunOptions o;
  o.out = f.out;
  o.workers = f.workers;
  o.dump_fields = f.dump_fields;
  const auto s = ldgl::run_experiment(c, o);
  std::printf("%s: %d ok, %d failed, %d skipped -> %s\n", ldgl::task_name(task), s.ok, s.failed, s.skipped,
              s.dir.string().c_str());
  return s.exit_code();
}

std::vector<ldgl::fs::path> run_dirs(const Flags& f, bool out_is_dir) {
  std::vector<ldgl::fs::path> d(f.dirs.begin(), f.dirs.end());
  if (d.empty() && out_is_dir && !f.out.empty()) d.push_back(f.out);
  if (d.empty()) throw ldgl::ConfigError("no run directory given");
  for (const auto& p : d)
    if (!ldgl::fs::exists(p / "run.json")) throw ldgl::ConfigError(p.string() + " is not a run directory (no run.json)");
  return d;
}

int run_report(const Flags& f) {
  const auto dirs = run_dirs(f, true);
  const ldgl::fs::path out = f.out.empty() ? dirs.front() : ldgl::fs::path(f.out);
  const auto a = ldgl::detail::aggregate_runs(dirs);
  ldgl::detail::write_aggregate(out, a);
  std::printf("report: %zu rows -> %s\n", a.table.at("rows").size(), (out / "report.csv").string().c_str());
  return 0;
}

int run_verify(const Flags& f) {
  int rc = 0;
  for (const auto& d : run_dirs(f, true)) {
    const auto v = ldgl::verify_run(d);
    for (const auto& m : v.mismatches) std::fprintf(stderr, "%s: %s\n", d.string().c_str(), m.c_str());
    std::printf("verify %s: %d points checked, %zu mismatches\n", d.string().c_str(), v.points_checked, v.mismatches.size());
    if (!v.ok()) rc = 3;
  }
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lawrence-Doniach / anisotropic GL simulator"};
  app.require_subcommand(1);
  Flags f;
  auto add_common = [&](CLI::App* sc) {
    sc->add_option("--config", f.config, "experiment config (TOML)");
    sc->add_option("--out", f.out, "run directory");
    sc->add_option("--workers", f.workers, "parallel sweep points");
    sc->add_flag("--dump-fields", f.dump_fields, "also write CSV field dumps");
    sc->add_option("--seed", f.seed, "override the config seed");
  };
  struct Sub {
    const char* name;
    ldgl::Task task;
    const char* help;
  };
  const Sub tasks[] = {{"construct-upper-bound", ldgl::Task::construct_upper_bound, "assemble the vortex-lattice test configuration"},
                       {"minimize-ld", ldgl::Task::minimize_ld, "minimize the LD energy"},
                       {"minimize-agl", ldgl::Task::minimize_agl, "minimize the AGL energy"},
                       {"compare-ld-agl", ldgl::Task::compare_ld_agl, "LD minimizer vs interpolated AGL"},
                       {"diagnostics", ldgl::Task::diagnostics, "analysis bundle of one state per point"}};
  std::vector<std::pair<CLI::App*, ldgl::Task>> task_cmds;
  for (const auto& t : tasks) {
    auto* sc = app.add_subcommand(t.name, t.help);
    add_common(sc);
    task_cmds.push_back({sc, t.task});
  }
  auto* rep = app.add_subcommand("report", "aggregate run directories");
  add_common(rep);
  rep->add_option("dirs", f.dirs, "run directories");
  auto* ver = app.add_subcommand("verify", "recompute stored scalars from stored fields");
  add_common(ver);
  ver->add_option("dirs", f.dirs, "run directories");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    for (const auto& [sc, task] : task_cmds)
      if (sc->parsed()) return run_task(task, f);
    if (rep->parsed()) return run_report(f);
    if (ver->parsed()) return run_verify(f);
  } catch (const ldgl::ConfigError& e) {
    std::fprintf(stderr, "invalid config: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 2;
}

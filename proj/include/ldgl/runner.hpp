#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "ldgl/analysis.hpp"
#include "ldgl/config.hpp"
#include "ldgl/construction.hpp"
#include "ldgl/io.hpp"
#include "ldgl/minimize.hpp"
#include "ldgl/potentials.hpp"
#include "ldgl/random.hpp"

namespace ldgl {

using json = nlohmann::json;

struct RunOptions {
  fs::path out;
  int workers = 1;
  bool dump_fields = false;
};

struct RunSummary {
  fs::path dir;
  int ok = 0, failed = 0, skipped = 0;
  int exit_code() const { return failed > 0 ? 3 : 0; }
};

/// Columns after the AsymptoticReport block, per task.
inline const std::vector<std::string>& task_columns(Task t) {
  static const std::vector<std::string> construct = {"ratio", "I1", "I2", "I3", "construction_total", "lemma_H",
                                                     "lemma_xi_phi", "lemma_I2", "discrete_total"};
  static const std::vector<std::string> minimize = {"iterations", "stop_reason", "initial_energy", "final_grad_norm"};
  static const std::vector<std::string> compare = {"ld_total",       "agl_warm_total", "agl_min_total", "gap_warm_ratio",
                                                   "gap_min_ratio",  "bound",          "bound_holds",   "end_layer_excess",
                                                   "ld_iterations",  "agl_iterations"};
  static const std::vector<std::string> diagnostics = {"bundle_ratio",   "winding_total",   "identity_residual",
                                                       "agl_interpolated", "slice_integral", "slice_margin",
                                                       "bound",          "a3_l6_sq_ratio",  "layer_quartic_ratio"};
  switch (t) {
    case Task::construct_upper_bound: return construct;
    case Task::minimize_ld:
    case Task::minimize_agl: return minimize;
    case Task::compare_ld_agl: return compare;
    case Task::diagnostics: return diagnostics;
  }
  return minimize;
}

inline std::vector<std::string> report_columns(Task t) {
  std::vector<std::string> c = {"schema_version", "point", "status"};
  for (const auto& s : AsymptoticReport::columns()) c.push_back(s);
  for (const auto& s : task_columns(t)) c.push_back(s);
  return c;
}

inline std::string point_dir_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "point_%03d", i);
  return buf;
}

namespace detail {

inline void merge_into(json& dst, const json& src) {
  for (auto it = src.begin(); it != src.end(); ++it) dst[it.key()] = it.value();
}

inline json nan_safe(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

/// Scalars recomputable from the stored fields; shared by the run and by verify.
struct Derived {
  json energy;  // EnergyBreakdown of the primary state
  json report;  // AsymptoticReport columns plus derivable task columns
  json extra = json::object();  // task file contents (compare.json, diagnostics.json)
};

inline Derived derive_layered_basic(const LayeredConfiguration& st) {
  Derived d;
  d.energy = ld_energy(st).to_json();
  d.report = asymptotic_report(st).to_json();
  return d;
}

inline Derived derive_continuum(const ContinuumConfiguration& st) {
  Derived d;
  d.energy = agl_energy(st).to_json();
  d.report = asymptotic_report(st).to_json();
  return d;
}

inline Derived derive_compare(const LayeredConfiguration& ld, const ContinuumConfiguration& agl) {
  Derived d;
  const EnergyBreakdown e = ld_energy(ld);
  const double agl_min = agl_energy(agl).total;
  d.energy = e.to_json();
  const AsymptoticReport r = asymptotic_report(ld, agl_min);
  d.report = r.to_json();
  const ComparisonBound cb = comparison_bound(ld);
  const double M = r.M_eps;
  json c = {{"ld_total", e.total},
            {"agl_warm_total", cb.agl_interpolated},
            {"agl_min_total", agl_min},
            {"gap_warm_ratio", std::abs(cb.agl_interpolated - e.total) / M},
            {"gap_min_ratio", std::abs(agl_min - e.total) / M},
            {"bound", nan_safe(cb.bound)},
            {"bound_holds", cb.holds(1e-12 * (1 + std::abs(e.total))) ? 1 : 0},
            {"end_layer_excess", cb.end_layer_excess}};
  merge_into(d.report, c);
  d.extra = c;
  d.extra["comparison_bound"] = cb.to_json();
  d.extra["agl_min_energy"] = agl_energy(agl).to_json();
  return d;
}

inline Derived derive_diagnostics(const LayeredConfiguration& st) {
  Derived d = derive_layered_basic(st);
  const EnergyBreakdown e = ld_energy(st);
  const double M = m_epsilon(st.dom->params());
  const VorticityField v = vorticity(st);
  long winding = 0;
  json wind = json::array();
  for (int n = 0; n < v.layers(); ++n) {
    winding += v.winding(n);
    wind.push_back(v.winding(n));
  }
  const ContinuumConfiguration psi = interpolate_layers(st);
  const double agl = agl_energy(psi).total;
  const SliceEnergies sl = slice_energies(psi);
  const ComparisonBound cb = comparison_bound(st);
  const F2DDecomposition f2 = f2d_decomposition(st);
  json c = {{"bundle_ratio", theorem2_bundle(e) / M},
            {"winding_total", winding},
            {"identity_residual", interpolation_identity_residual(st, psi)},
            {"agl_interpolated", agl},
            {"slice_integral", sl.integral},
            {"slice_margin", agl - sl.integral},
            {"bound", nan_safe(cb.bound)},
            {"a3_l6_sq_ratio", cb.a3_l6_sq / M},
            {"layer_quartic_ratio", cb.layer_quartic / M}};
  merge_into(d.report, c);
  d.extra = c;
  d.extra["vorticity_total"] = v.total;
  d.extra["circulation"] = v.circulation;
  d.extra["winding"] = wind;
  d.extra["f2d_per_layer"] = f2.per_layer;
  d.extra["f2d_weighted_sum"] = f2.weighted_sum;
  d.extra["theorem2_bundle"] = theorem2_bundle(e);
  d.extra["trace_deviation"] = trace_deviation(st);
  d.extra["representation_residual"] = representation_residual(st);
  d.extra["slice_energies"] = sl.per_slice;
  d.extra["comparison_bound"] = cb.to_json();
  return d;
}

inline void check_params_match(const ModelParams& want, const ModelParams& got, const std::string& what) {
  if (!(want == got)) throw std::runtime_error(what + " was stored for different model parameters");
}

inline LayeredConfiguration perturbed_normal_layered(DomainPtr d, std::uint64_t seed) {
  LayeredConfiguration st(d, 0.0);
  Rng r(seed);
  for (auto& l : st.u)
    for (auto& v : l.data()) v = cplx(uniform(r, -1e-3, 1e-3), uniform(r, -1e-3, 1e-3));
  return st;
}

inline ContinuumConfiguration perturbed_normal_continuum(DomainPtr d, std::uint64_t seed) {
  ContinuumConfiguration st(d, 0.0);
  Rng r(seed);
  for (auto& v : st.psi.data()) v = cplx(uniform(r, -1e-3, 1e-3), uniform(r, -1e-3, 1e-3));
  return st;
}

inline LayeredConfiguration initial_layered(const ExperimentConfig& c, const SweepPoint& pt, DomainPtr d) {
  if (!c.warm_start.empty()) {
    const FieldFile f = load_fields(c.warm_start);
    LayeredConfiguration st = layered_from(f);
    check_params_match(pt.params, st.dom->params(), "warm start");
    st.dom = d;
    return st;
  }
  if (c.init == "random") return random_initial_layered(d, pt.seed);
  if (c.init == "normal") return LayeredConfiguration(d, 0.0);
  if (c.init == "perturbed-normal") return perturbed_normal_layered(d, pt.seed);
  LayeredConfiguration st = assemble_test_configuration(pt.params, c.construction).config;
  st.dom = d;
  return st;
}

inline ContinuumConfiguration initial_continuum(const ExperimentConfig& c, const SweepPoint& pt, DomainPtr d) {
  if (!c.warm_start.empty()) {
    const FieldFile f = load_fields(c.warm_start);
    if (field_kind(f) == "layered") {
      LayeredConfiguration ld = layered_from(f);
      check_params_match(pt.params, ld.dom->params(), "warm start");
      ld.dom = d;
      return interpolate_layers(ld);
    }
    ContinuumConfiguration st = continuum_from(f);
    check_params_match(pt.params, st.dom->params(), "warm start");
    st.dom = d;
    return st;
  }
  if (c.init == "random") return random_initial_continuum(d, pt.seed);
  if (c.init == "normal") return ContinuumConfiguration(d, 0.0);
  if (c.init == "perturbed-normal") return perturbed_normal_continuum(d, pt.seed);
  LayeredConfiguration ld = assemble_test_configuration(pt.params, c.construction).config;
  ld.dom = d;
  return interpolate_layers(ld);
}

inline std::string vorticity_csv(const LayeredConfiguration& st) {
  const VorticityField v = vorticity(st);
  std::string s = "layer,x,y,mu\n";
  for (int n = 0; n < v.layers(); ++n)
    for (int j = 0; j < v.mu[n].ny(); ++j)
      for (int i = 0; i < v.mu[n].nx(); ++i)
        s += std::to_string(n) + "," + fmt17((i + 0.5) * v.hx) + "," + fmt17((j + 0.5) * v.hy) + "," + fmt17(v.mu[n](i, j)) +
             "\n";
  return s;
}

inline void dump_layered(const fs::path& dir, const LayeredConfiguration& st, const std::string& stem = "layers") {
  write_atomic(dir / (stem + ".csv"), layers_csv(st));
  write_atomic(dir / (stem == "layers" ? std::string("vorticity.csv") : stem + "_vorticity.csv"), vorticity_csv(st));
}

inline json with_version(json j) {
  json out = {{"schema_version", kSchemaVersion}};
  merge_into(out, j);
  return out;
}

inline MinimizeOptions point_options(const ExperimentConfig& c, const SweepPoint& pt) {
  MinimizeOptions o = c.minimize;
  o.seed = pt.seed;
  return o;
}

/// Runs one sweep point into dir; returns the report row (without status fields).
inline json run_point(const ExperimentConfig& c, const SweepPoint& pt, const fs::path& dir, bool dump) {
  const DomainPtr d = build_domain(pt.params);
  json row;
  Derived dv;
  switch (c.task) {
    case Task::construct_upper_bound: {
      const TestConstructionReport rep = assemble_test_configuration(pt.params, c.construction);
      LayeredConfiguration st = rep.config;
      dv = derive_layered_basic(st);
      const json rj = rep.to_json();
      write_json(dir / "construction.json", with_version(rj));
      row = dv.report;
      merge_into(row, json{{"ratio", rep.ratio()},
                           {"I1", rep.I1},
                           {"I2", rep.I2},
                           {"I3", rep.I3},
                           {"construction_total", rep.total},
                           {"lemma_H", rj.at("lemma_H")},
                           {"lemma_xi_phi", rj.at("lemma_xi_phi")},
                           {"lemma_I2", rj.at("lemma_I2")},
                           {"discrete_total", dv.energy.at("total")}});
      save_fields(dir / "state.ldgl", to_field_file(st));
      if (dump) {
        dump_layered(dir, st);
        const auto& dd = *rep.dom;
        write_atomic(dir / "h_eps.csv", scalar_csv(rep.h_eps, 0, 0, dd.hx(), dd.hy(), "h_eps"));
        write_atomic(dir / "rho.csv", scalar_csv(rep.rho, 0, 0, dd.hx(), dd.hy(), "rho"));
        write_atomic(dir / "phase.csv", scalar_csv(rep.phase, 0, 0, dd.hx(), dd.hy(), "phase"));
      }
      break;
    }
    case Task::minimize_ld: {
      auto [st, tr] = minimize_ld(initial_layered(c, pt, d), point_options(c, pt));
      dv = derive_layered_basic(st);
      write_atomic(dir / "trace.csv", tr.to_csv());
      write_json(dir / "trace.json", with_version(tr.to_json()));
      row = dv.report;
      merge_into(row, json{{"iterations", tr.iterations},
                           {"stop_reason", tr.stop_reason},
                           {"initial_energy", tr.initial_energy},
                           {"final_grad_norm", tr.final_grad_norm}});
      save_fields(dir / "state.ldgl", to_field_file(st));
      if (dump) dump_layered(dir, st);
      break;
    }
    case Task::minimize_agl: {
      auto [st, tr] = minimize_agl(initial_continuum(c, pt, d), point_options(c, pt));
      dv = derive_continuum(st);
      write_atomic(dir / "trace.csv", tr.to_csv());
      write_json(dir / "trace.json", with_version(tr.to_json()));
      row = dv.report;
      merge_into(row, json{{"iterations", tr.iterations},
                           {"stop_reason", tr.stop_reason},
                           {"initial_energy", tr.initial_energy},
                           {"final_grad_norm", tr.final_grad_norm}});
      save_fields(dir / "state.ldgl", to_field_file(st));
      if (dump) write_atomic(dir / "psi.csv", continuum_csv(st));
      break;
    }
    case Task::compare_ld_agl: {
      const MinimizeOptions o = point_options(c, pt);
      auto [ld, tr] = minimize_ld(initial_layered(c, pt, d), o);
      auto [agl, tr2] = minimize_agl(interpolate_layers(ld), o);
      dv = derive_compare(ld, agl);
      write_atomic(dir / "trace.csv", tr.to_csv());
      write_atomic(dir / "trace_agl.csv", tr2.to_csv());
      write_json(dir / "trace.json", with_version(json{{"ld", tr.to_json()}, {"agl", tr2.to_json()}}));
      write_json(dir / "compare.json", with_version(dv.extra));
      row = dv.report;
      merge_into(row, json{{"ld_iterations", tr.iterations}, {"agl_iterations", tr2.iterations}});
      save_fields(dir / "state.ldgl", to_field_file(ld));
      save_fields(dir / "state_agl.ldgl", to_field_file(agl));
      if (dump) {
        dump_layered(dir, ld);
        write_atomic(dir / "psi_agl.csv", continuum_csv(agl));
      }
      break;
    }
    case Task::diagnostics: {
      LayeredConfiguration st;
      if (c.diagnostics_source == "construction") {
        st = assemble_test_configuration(pt.params, c.construction).config;
      } else if (c.diagnostics_source == "random") {
        st = random_smooth_layered(d, pt.seed);
      } else {
        auto [m, tr] = minimize_ld(initial_layered(c, pt, d), point_options(c, pt));
        write_atomic(dir / "trace.csv", tr.to_csv());
        write_json(dir / "trace.json", with_version(tr.to_json()));
        st = std::move(m);
      }
      st.dom = d;
      dv = derive_diagnostics(st);
      write_json(dir / "diagnostics.json", with_version(dv.extra));
      row = dv.report;
      save_fields(dir / "state.ldgl", to_field_file(st));
      if (dump) dump_layered(dir, st);
      break;
    }
  }
  write_json(dir / "energy.json", with_version(dv.energy));
  return row;
}

inline std::string csv_cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number_float()) return fmt17(v.get<double>());
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  }
  return v.dump();
}

struct Aggregate {
  std::string csv;
  json table;
};

/// Table of every recorded point of one run directory.
inline Aggregate aggregate_run(const fs::path& dir) {
  const json run = read_json(dir / "run.json");
  const Task task = parse_task(run.at("task"));
  const int n = run.at("n_points");
  const auto cols = report_columns(task);
  Aggregate a;
  for (size_t i = 0; i < cols.size(); ++i) a.csv += (i ? "," : "") + cols[i];
  a.csv += "\n";
  a.table = {{"schema_version", kSchemaVersion}, {"task", task_name(task)}, {"columns", cols}, {"rows", json::array()},
             {"skipped", json::array()}};
  for (int i = 0; i < n; ++i) {
    const fs::path pd = dir / point_dir_name(i);
    json st;
    try {
      st = read_json(pd / "status.json");
    } catch (const IoError&) {
      st = {{"point", i}, {"status", "failed"}, {"reason", "no status recorded"}};
    }
    const std::string status = st.at("status");
    if (status == "skipped") {
      a.table["skipped"].push_back({{"point", i}, {"reason", st.value("reason", std::string())}});
      continue;
    }
    json row = {{"schema_version", kSchemaVersion}, {"point", i}, {"status", status}};
    if (status == "ok") merge_into(row, read_json(pd / "report.json"));
    else row["reason"] = st.value("reason", std::string());
    for (size_t q = 0; q < cols.size(); ++q) a.csv += (q ? "," : "") + csv_cell(row.value(cols[q], json(nullptr)));
    a.csv += "\n";
    a.table["rows"].push_back(row);
  }
  return a;
}

inline void write_aggregate(const fs::path& dir, const Aggregate& a) {
  write_atomic(dir / "report.csv", a.csv);
  write_json(dir / "report.json", a.table);
}

/// Merges several run directories into one table with a leading run column.
inline Aggregate aggregate_runs(const std::vector<fs::path>& dirs) {
  if (dirs.size() == 1) return aggregate_run(dirs[0]);
  std::vector<Aggregate> parts;
  std::optional<Task> task;
  bool mixed = false;
  for (const auto& d : dirs) {
    parts.push_back(aggregate_run(d));
    const Task t = parse_task(parts.back().table.at("task"));
    if (task && *task != t) mixed = true;
    task = t;
  }
  std::vector<std::string> cols = {"run", "schema_version", "point", "status"};
  for (const auto& s : AsymptoticReport::columns()) cols.push_back(s);
  if (!mixed)
    for (const auto& s : task_columns(*task)) cols.push_back(s);
  Aggregate a;
  for (size_t i = 0; i < cols.size(); ++i) a.csv += (i ? "," : "") + cols[i];
  a.csv += "\n";
  a.table = {{"schema_version", kSchemaVersion}, {"task", mixed ? "mixed" : task_name(*task)}, {"columns", cols},
             {"rows", json::array()}, {"skipped", json::array()}};
  for (size_t r = 0; r < dirs.size(); ++r) {
    const std::string run = dirs[r].lexically_normal().filename().empty() ? dirs[r].lexically_normal().parent_path().filename().string()
                                                                           : dirs[r].lexically_normal().filename().string();
    for (json row : parts[r].table.at("rows")) {
      row["run"] = run;
      for (size_t q = 0; q < cols.size(); ++q) a.csv += (q ? "," : "") + csv_cell(row.value(cols[q], json(nullptr)));
      a.csv += "\n";
      a.table["rows"].push_back(row);
    }
    for (json s : parts[r].table.at("skipped")) {
      s["run"] = run;
      a.table["skipped"].push_back(s);
    }
  }
  return a;
}

inline std::optional<std::string> skip_reason(const ExperimentConfig& c, const SweepPoint& pt) {
  if (c.task == Task::compare_ld_agl && pt.params.s > c.compare_C * pt.params.epsilon * (1 + 1e-12)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "s = %g exceeds C*eps = %g", pt.params.s, c.compare_C * pt.params.epsilon);
    return std::string(buf);
  }
  return std::nullopt;
}

}  // namespace detail

/// Runs every sweep point of a validated config; per-point failures are isolated.
inline RunSummary run_experiment(const ExperimentConfig& c, const RunOptions& opt) {
  c.validate();
  const fs::path out = opt.out.empty() ? fs::path(c.out) : opt.out;
  if (out.empty()) throw ConfigError("no output directory (set 'out' or pass --out)");
  try {
    fs::create_directories(out);
    write_atomic(out / ".write_probe", "");
    fs::remove(out / ".write_probe");
  } catch (const std::exception& e) {
    throw ConfigError("output directory " + out.string() + " is not writable: " + e.what());
  }
  const auto pts = c.points();
  json plist = json::array();
  for (const auto& p : pts) plist.push_back({{"point", p.index}, {"seed", p.seed}, {"params", params_to_json(p.params)}});
  write_json(out / "run.json", {{"schema_version", kSchemaVersion},
                                {"task", task_name(c.task)},
                                {"n_points", pts.size()},
                                {"config", c.to_json()},
                                {"points", plist}});

  std::vector<std::string> status(pts.size());
  std::atomic<size_t> next{0};
  auto work = [&] {
    for (size_t i = next++; i < pts.size(); i = next++) {
      const auto& pt = pts[i];
      const fs::path pd = out / point_dir_name(pt.index);
      json st = {{"schema_version", kSchemaVersion}, {"point", pt.index}, {"seed", pt.seed}};
      try {
        fs::create_directories(pd);
        json cfg = c.to_json();
        cfg["point"] = pt.index;
        cfg["point_seed"] = pt.seed;
        cfg["params"] = params_to_json(pt.params);
        write_json(pd / "config.json", cfg);
        if (auto why = detail::skip_reason(c, pt)) {
          st["status"] = "skipped";
          st["reason"] = *why;
        } else {
          fs::remove(pd / "report.json");
          const json row = detail::run_point(c, pt, pd, opt.dump_fields);
          write_json(pd / "report.json", detail::with_version(row));
          st["status"] = "ok";
        }
      } catch (const std::exception& e) {
        st["status"] = "failed";
        st["reason"] = e.what();
      }
      try {
        write_json(pd / "status.json", st);
      } catch (const std::exception&) {
      }
      status[i] = st["status"];
    }
  };
  const int nw = std::max(1, std::min<int>(opt.workers, static_cast<int>(pts.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < nw; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  RunSummary s;
  s.dir = out;
  for (const auto& st : status) {
    if (st == "ok") ++s.ok;
    else if (st == "skipped") ++s.skipped;
    else ++s.failed;
  }
  detail::write_aggregate(out, detail::aggregate_run(out));
  return s;
}

struct VerifyResult {
  int points_checked = 0;
  std::vector<std::string> mismatches;
  bool ok() const { return mismatches.empty(); }
};

namespace detail {

/// Numbers agree when |a - b| <= tol max(|a|, |b|); nulls, strings and shapes must match.
inline void compare_json(const json& want, const json& got, double tol, const std::string& path, std::vector<std::string>& out) {
  if (want.is_number() && got.is_number()) {
    const double a = want.get<double>(), b = got.get<double>();
    if (!(std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b))))
      out.push_back(path + ": stored " + fmt17(b) + ", recomputed " + fmt17(a));
    return;
  }
  if (want.is_object() && got.is_object()) {
    for (auto it = want.begin(); it != want.end(); ++it) {
      if (!got.contains(it.key())) {
        out.push_back(path + "/" + it.key() + ": missing");
        continue;
      }
      compare_json(it.value(), got.at(it.key()), tol, path + "/" + it.key(), out);
    }
    return;
  }
  if (want.is_array() && got.is_array()) {
    if (want.size() != got.size()) {
      out.push_back(path + ": length differs");
      return;
    }
    for (size_t i = 0; i < want.size(); ++i) compare_json(want[i], got[i], tol, path + "/" + std::to_string(i), out);
    return;
  }
  if (want != got) out.push_back(path + ": stored " + got.dump() + ", recomputed " + want.dump());
}

}  // namespace detail

/// Recomputes every derived scalar of a run directory from its stored fields.
inline VerifyResult verify_run(const fs::path& dir, double tol = 1e-12) {
  VerifyResult v;
  const json run = read_json(dir / "run.json");
  const Task task = parse_task(run.at("task"));
  const int n = run.at("n_points");
  for (int i = 0; i < n; ++i) {
    const fs::path pd = dir / point_dir_name(i);
    const std::string tag = point_dir_name(i);
    try {
      const json st = read_json(pd / "status.json");
      if (st.at("status") != "ok") continue;
      const FieldFile f = load_fields(pd / "state.ldgl");
      detail::Derived d;
      std::string extra_file;
      if (task == Task::minimize_agl) {
        d = detail::derive_continuum(continuum_from(f));
      } else if (task == Task::compare_ld_agl) {
        d = detail::derive_compare(layered_from(f), continuum_from(load_fields(pd / "state_agl.ldgl")));
        extra_file = "compare.json";
      } else if (task == Task::diagnostics) {
        d = detail::derive_diagnostics(layered_from(f));
        extra_file = "diagnostics.json";
      } else {
        d = detail::derive_layered_basic(layered_from(f));
      }
      if (task == Task::construct_upper_bound) d.report["discrete_total"] = d.energy.at("total");
      detail::compare_json(d.energy, read_json(pd / "energy.json"), tol, tag + "/energy.json", v.mismatches);
      detail::compare_json(d.report, read_json(pd / "report.json"), tol, tag + "/report.json", v.mismatches);
      if (!extra_file.empty())
        detail::compare_json(d.extra, read_json(pd / extra_file), tol, tag + "/" + extra_file, v.mismatches);
      ++v.points_checked;
    } catch (const std::exception& e) {
      v.mismatches.push_back(tag + ": " + e.what());
    }
  }
  try {
    const auto agg = detail::aggregate_run(dir);
    if (read_file(dir / "report.csv") != agg.csv) v.mismatches.push_back("report.csv differs from the point reports");
  } catch (const std::exception& e) {
    v.mismatches.push_back(std::string("report.csv: ") + e.what());
  }
  return v;
}

}  // namespace ldgl

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "ldgl/construction.hpp"
#include "ldgl/domain.hpp"
#include "ldgl/io.hpp"
#include "ldgl/minimize.hpp"
#include "toml.hpp"

namespace ldgl {

/// Invalid experiment configuration; the CLI maps it to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Task { construct_upper_bound, minimize_ld, minimize_agl, compare_ld_agl, diagnostics };

inline const char* task_name(Task t) {
  switch (t) {
    case Task::construct_upper_bound: return "construct-upper-bound";
    case Task::minimize_ld: return "minimize-ld";
    case Task::minimize_agl: return "minimize-agl";
    case Task::compare_ld_agl: return "compare-ld-agl";
    case Task::diagnostics: return "diagnostics";
  }
  return "?";
}

inline Task parse_task(const std::string& s) {
  for (Task t : {Task::construct_upper_bound, Task::minimize_ld, Task::minimize_agl, Task::compare_ld_agl, Task::diagnostics})
    if (s == task_name(t)) return t;
  throw ConfigError("unknown task '" + s + "'");
}

struct SweepPoint {
  int index = 0;
  ModelParams params;
  std::uint64_t seed = 0;
};

/// Mesh per sweep point: fixed node counts, or nodes from h <= h_over_eps * eps;
/// vertical spacing s / sub unless dz is given.
struct MeshRule {
  std::optional<int> nx, ny;
  double h_over_eps = 0.5;
  int sub = 2;
  std::optional<double> dz;

  MeshSpec resolve(const ModelParams& p) const {
    MeshSpec m;
    auto nodes = [&](double w) { return static_cast<int>(std::ceil(w / (h_over_eps * p.epsilon) - 1e-9)) + 1; };
    m.nx = nx ? *nx : nodes(p.wx);
    m.ny = ny ? *ny : nodes(p.wy);
    m.dz = dz ? *dz : p.s / sub;
    return m;
  }
};

struct ExperimentConfig {
  Task task = Task::minimize_ld;
  bool task_given = false;  // the file named a task; the CLI subcommand must agree
  std::uint64_t seed = 0;
  std::string out;

  // [model]; lambda and pad default to 1, the rest must be given
  ModelParams base;
  MeshRule mesh;

  // sweep axes; a scalar in [model] is a one-point axis
  std::vector<double> epsilon, h_ex, pad, s;
  std::vector<int> n_layers;
  std::string h_ex_rule;  // "" or "log_eps_squared"
  bool mixed_regime = false;

  MinimizeOptions minimize;
  std::string init = "random";  // random | perturbed-normal | normal | construction
  std::string warm_start;       // field file path, overrides init

  ConstructionOptions construction;
  double compare_C = 1.0;
  std::string diagnostics_source = "construction";  // construction | random | minimize-ld

  std::vector<SweepPoint> points() const {
    std::vector<SweepPoint> out_pts;
    const bool by_s = !s.empty();
    const size_t nl = by_s ? s.size() : n_layers.size();
    for (double e : epsilon) {
      std::vector<double> hs = h_ex;
      if (h_ex_rule == "log_eps_squared") hs = {std::log(e) * std::log(e)};
      for (size_t q = 0; q < nl; ++q)
        for (double h : hs)
          for (double pd : pad) {
            ModelParams p = base;
            p.epsilon = e;
            p.h_ex = h;
            p.pad = pd;
            if (by_s) {
              p.s = s[q];
              p.n_layers = static_cast<int>(std::lround(p.height / p.s));
            } else {
              p.n_layers = n_layers[q];
              p.s = p.height / p.n_layers;
            }
            p.mesh = mesh.resolve(p);
            SweepPoint sp;
            sp.index = static_cast<int>(out_pts.size());
            sp.params = p;
            sp.seed = seed + static_cast<std::uint64_t>(sp.index);
            out_pts.push_back(sp);
          }
    }
    return out_pts;
  }

  bool needs_construction() const {
    return task == Task::construct_upper_bound ||
           (task == Task::diagnostics && diagnostics_source == "construction") ||
           (init == "construction" && warm_start.empty() &&
            (task == Task::minimize_ld || task == Task::minimize_agl || task == Task::compare_ld_agl));
  }

  /// Throws ConfigError naming the violated rule.
  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    auto nonempty = [&](bool empty, const char* axis) {
      if (empty) fail(std::string("sweep axis '") + axis + "' is empty");
    };
    nonempty(epsilon.empty(), "epsilon");
    if (h_ex_rule.empty()) nonempty(h_ex.empty(), "h_ex");
    else if (h_ex_rule != "log_eps_squared") fail("unknown h_ex_rule '" + h_ex_rule + "'");
    nonempty(pad.empty(), "pad");
    if (!s.empty() && !n_layers.empty()) fail("give either s or n_layers, not both");
    nonempty(s.empty() && n_layers.empty(), "n_layers");
    if (init != "random" && init != "perturbed-normal" && init != "normal" && init != "construction")
      fail("unknown minimize.init '" + init + "'");
    if (diagnostics_source != "construction" && diagnostics_source != "random" && diagnostics_source != "minimize-ld")
      fail("unknown diagnostics.source '" + diagnostics_source + "'");
    if (!(compare_C > 0)) fail("compare.C must be positive");
    if (!(mesh.h_over_eps > 0 && mesh.h_over_eps <= 0.5)) fail("mesh.h_over_eps must be in (0, 0.5]");
    if (mesh.sub < 1) fail("mesh.sub must be >= 1");
    if (construction.candidates < 1) fail("construction.candidates must be >= 1");
    if (!(construction.d > 0)) fail("construction.d must be positive");
    try {
      minimize.validate();
    } catch (const std::invalid_argument& e) {
      fail(std::string("minimize: ") + e.what());
    }
    for (const auto& pt : points()) {
      const auto& p = pt.params;
      std::ostringstream where;
      where << "point " << pt.index << " (eps=" << p.epsilon << ", h_ex=" << p.h_ex << ", N=" << p.n_layers << ", pad=" << p.pad
            << "): ";
      if (!(p.h_ex > 0) || !(p.epsilon * std::sqrt(p.h_ex) < 1)) fail(where.str() + "needs eps*sqrt(h_ex) < 1 and h_ex > 0");
      if (mixed_regime && p.h_ex / std::abs(std::log(p.epsilon)) < 1) fail(where.str() + "h_ex/|ln eps| < 1 in a mixed-regime sweep");
      if (p.n_layers < 1 || std::abs(p.n_layers * p.s - p.height) > 1e-9 * p.height)
        fail(where.str() + "s does not divide the height");
      if (needs_construction() && p.pad + 1e-12 < p.s / 2 + construction.d)
        fail(where.str() + "the construction needs pad >= s/2 + construction.d");
      try {
        p.validate();
        p.check_resolution();
        DomainDiscretization d(p);
      } catch (const ParamError& e) {
        fail(where.str() + e.what());
      }
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["task"] = task_name(task);
    j["seed"] = seed;
    j["model"] = params_to_json(base);
    j["mesh"] = {{"h_over_eps", mesh.h_over_eps}, {"sub", mesh.sub}};
    if (mesh.nx) j["mesh"]["nx"] = *mesh.nx;
    if (mesh.ny) j["mesh"]["ny"] = *mesh.ny;
    if (mesh.dz) j["mesh"]["dz"] = *mesh.dz;
    j["sweep"] = {{"epsilon", epsilon}, {"h_ex", h_ex}, {"pad", pad}, {"s", s}, {"n_layers", n_layers},
                  {"h_ex_rule", h_ex_rule}, {"mixed_regime", mixed_regime}};
    j["minimize"] = {{"max_iters", minimize.max_iters},   {"grad_tol", minimize.grad_tol},
                     {"step_rule", step_rule_name(minimize.step_rule)}, {"step0", minimize.step0},
                     {"max_step", minimize.max_step},     {"armijo", minimize.armijo},
                     {"max_backtracks", minimize.max_backtracks}, {"gauge_fix_interval", minimize.gauge_fix_interval},
                     {"clamp_polish", minimize.clamp_polish}, {"init", init}, {"warm_start", warm_start}};
    j["construction"] = {{"d", construction.d}, {"candidates", construction.candidates}, {"lattice_tol", construction.lattice_tol}};
    j["compare"] = {{"C", compare_C}};
    j["diagnostics"] = {{"source", diagnostics_source}};
    return j;
  }
};

namespace detail {

inline void check_keys(const toml::table& t, const std::string& where, std::set<std::string> allowed) {
  for (const auto& [k, v] : t) {
    (void)v;
    if (!allowed.count(std::string(k.str()))) throw ConfigError("unknown key '" + std::string(k.str()) + "' in " + where);
  }
}

inline double get_num(const toml::node& n, const std::string& what) {
  if (auto v = n.value<double>()) return *v;
  throw ConfigError(what + " must be a number");
}

inline std::vector<double> num_list(const toml::node& n, const std::string& what) {
  std::vector<double> out;
  if (const auto* a = n.as_array()) {
    for (const auto& e : *a) out.push_back(get_num(e, what));
    return out;
  }
  out.push_back(get_num(n, what));
  return out;
}

inline const toml::table* sub(const toml::table& t, const char* name) {
  const auto* n = t.get(name);
  if (!n) return nullptr;
  if (!n->is_table()) throw ConfigError(std::string("[") + name + "] must be a table");
  return n->as_table();
}

}  // namespace detail

inline ExperimentConfig parse_config_toml(const std::string& text, const std::string& source = "config") {
  toml::table t;
  try {
    t = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << source << ": " << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError(os.str());
  }
  using detail::get_num;
  using detail::num_list;
  detail::check_keys(t, "top level",
                     {"schema_version", "task", "seed", "out", "model", "mesh", "sweep", "minimize", "construction", "compare", "diagnostics"});
  ExperimentConfig c;
  if (auto v = t["schema_version"].value<int64_t>(); v && *v != kSchemaVersion)
    throw ConfigError("unsupported schema_version " + std::to_string(*v));
  if (auto v = t["task"].value<std::string>()) {
    c.task = parse_task(*v);
    c.task_given = true;
  }
  if (auto v = t["seed"].value<int64_t>()) c.seed = static_cast<std::uint64_t>(*v);
  if (auto v = t["out"].value<std::string>()) c.out = *v;

  const auto* model = detail::sub(t, "model");
  if (!model) throw ConfigError("missing [model]");
  detail::check_keys(*model, "[model]", {"epsilon", "h_ex", "height", "n_layers", "s", "wx", "wy", "lambda", "pad"});
  auto need = [&](const char* k) -> const toml::node& {
    const auto* n = model->get(k);
    if (!n) throw ConfigError(std::string("[model] needs '") + k + "'");
    return *n;
  };
  c.base.height = get_num(need("height"), "model.height");
  c.base.wx = get_num(need("wx"), "model.wx");
  c.base.wy = get_num(need("wy"), "model.wy");
  c.base.lambda = model->get("lambda") ? get_num(*model->get("lambda"), "model.lambda") : 1.0;
  c.pad = {model->get("pad") ? get_num(*model->get("pad"), "model.pad") : 1.0};
  if (const auto* n = model->get("epsilon")) c.epsilon = {get_num(*n, "model.epsilon")};
  if (const auto* n = model->get("h_ex")) c.h_ex = {get_num(*n, "model.h_ex")};
  if (const auto* n = model->get("n_layers")) c.n_layers = {static_cast<int>(get_num(*n, "model.n_layers"))};
  if (const auto* n = model->get("s")) c.s = {get_num(*n, "model.s")};

  if (const auto* sw = detail::sub(t, "sweep")) {
    detail::check_keys(*sw, "[sweep]", {"epsilon", "h_ex", "pad", "s", "n_layers", "h_ex_rule", "mixed_regime"});
    if (const auto* n = sw->get("epsilon")) c.epsilon = num_list(*n, "sweep.epsilon");
    if (const auto* n = sw->get("h_ex")) c.h_ex = num_list(*n, "sweep.h_ex");
    if (const auto* n = sw->get("pad")) c.pad = num_list(*n, "sweep.pad");
    if (const auto* n = sw->get("s")) {
      c.s = num_list(*n, "sweep.s");
      c.n_layers.clear();
    }
    if (const auto* n = sw->get("n_layers")) {
      c.n_layers.clear();
      for (double v : num_list(*n, "sweep.n_layers")) c.n_layers.push_back(static_cast<int>(v));
      c.s.clear();
    }
    if (auto v = (*sw)["h_ex_rule"].value<std::string>()) {
      c.h_ex_rule = *v;
      c.h_ex.clear();
    }
    if (auto v = (*sw)["mixed_regime"].value<bool>()) c.mixed_regime = *v;
  }
  if (c.epsilon.empty() && !model->get("epsilon") && !(detail::sub(t, "sweep") && detail::sub(t, "sweep")->get("epsilon")))
    throw ConfigError("[model] needs 'epsilon' (or a sweep.epsilon axis)");

  if (const auto* m = detail::sub(t, "mesh")) {
    detail::check_keys(*m, "[mesh]", {"nx", "ny", "h_over_eps", "sub", "dz"});
    if (auto v = (*m)["nx"].value<int64_t>()) c.mesh.nx = static_cast<int>(*v);
    if (auto v = (*m)["ny"].value<int64_t>()) c.mesh.ny = static_cast<int>(*v);
    if (const auto* n = m->get("h_over_eps")) c.mesh.h_over_eps = get_num(*n, "mesh.h_over_eps");
    if (auto v = (*m)["sub"].value<int64_t>()) c.mesh.sub = static_cast<int>(*v);
    if (const auto* n = m->get("dz")) c.mesh.dz = get_num(*n, "mesh.dz");
  }
  if (const auto* m = detail::sub(t, "minimize")) {
    detail::check_keys(*m, "[minimize]", {"max_iters", "grad_tol", "step_rule", "step0", "max_step", "armijo", "max_backtracks",
                                          "gauge_fix_interval", "clamp_polish", "init", "warm_start"});
    auto& o = c.minimize;
    if (auto v = (*m)["max_iters"].value<int64_t>()) o.max_iters = static_cast<int>(*v);
    if (const auto* n = m->get("grad_tol")) o.grad_tol = get_num(*n, "minimize.grad_tol");
    if (auto v = (*m)["step_rule"].value<std::string>()) {
      try {
        o.step_rule = parse_step_rule(*v);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("minimize.step_rule: ") + e.what());
      }
    }
    if (const auto* n = m->get("step0")) o.step0 = get_num(*n, "minimize.step0");
    if (const auto* n = m->get("max_step")) o.max_step = get_num(*n, "minimize.max_step");
    if (const auto* n = m->get("armijo")) o.armijo = get_num(*n, "minimize.armijo");
    if (auto v = (*m)["max_backtracks"].value<int64_t>()) o.max_backtracks = static_cast<int>(*v);
    if (auto v = (*m)["gauge_fix_interval"].value<int64_t>()) o.gauge_fix_interval = static_cast<int>(*v);
    if (auto v = (*m)["clamp_polish"].value<bool>()) o.clamp_polish = *v;
    if (auto v = (*m)["init"].value<std::string>()) c.init = *v;
    if (auto v = (*m)["warm_start"].value<std::string>()) c.warm_start = *v;
  }
  if (const auto* m = detail::sub(t, "construction")) {
    detail::check_keys(*m, "[construction]", {"d", "candidates", "lattice_tol"});
    if (const auto* n = m->get("d")) c.construction.d = get_num(*n, "construction.d");
    if (auto v = (*m)["candidates"].value<int64_t>()) c.construction.candidates = static_cast<int>(*v);
    if (const auto* n = m->get("lattice_tol")) c.construction.lattice_tol = get_num(*n, "construction.lattice_tol");
  }
  if (const auto* m = detail::sub(t, "compare")) {
    detail::check_keys(*m, "[compare]", {"C"});
    if (const auto* n = m->get("C")) c.compare_C = get_num(*n, "compare.C");
  }
  if (const auto* m = detail::sub(t, "diagnostics")) {
    detail::check_keys(*m, "[diagnostics]", {"source"});
    if (auto v = (*m)["source"].value<std::string>()) c.diagnostics_source = *v;
  }
  return c;
}

inline ExperimentConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return parse_config_toml(text, path.string());
}

}  // namespace ldgl

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "gmmsgd/errors.hpp"
#include "gmmsgd/experiment.hpp"

namespace gmmsgd {

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : "\n") + s;
  return out;
}

class Reader {
 public:
  explicit Reader(std::vector<std::string>& errs) : errs_(errs) {}

  void error(const YAML::Node& n, const std::string& path, const std::string& msg) {
    std::ostringstream os;
    if (n.IsDefined() && n.Mark().line >= 0) os << "line " << n.Mark().line + 1 << ": ";
    os << path << ": " << msg;
    errs_.push_back(os.str());
  }

  bool expect_map(const YAML::Node& n, const std::string& path) {
    if (n.IsMap()) return true;
    error(n, path, "expected a mapping");
    return false;
  }

  void check_keys(const YAML::Node& map, const std::string& path,
                  std::initializer_list<const char*> allowed) {
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : map) {
      const std::string key = kv.first.as<std::string>("");
      if (!ok.count(key)) {
        std::string list;
        for (const char* a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
        error(kv.first, path.empty() ? key : path + "." + key,
              "unknown key (allowed: " + list + ")");
      }
    }
  }

  template <class T>
  bool scalar(const YAML::Node& n, const std::string& path, T& out) {
    if (!n.IsScalar()) {
      error(n, path, "expected a scalar");
      return false;
    }
    try {
      out = n.as<T>();
      return true;
    } catch (const YAML::Exception&) {
      error(n, path, "cannot parse '" + n.Scalar() + "'");
      return false;
    }
  }

  template <class T>
  bool get(const YAML::Node& map, const char* key, const std::string& path, T& out) {
    const YAML::Node n = map[key];
    if (!n.IsDefined()) return false;
    return scalar(n, path + "." + key, out);
  }

  template <class T>
  bool get_list(const YAML::Node& map, const char* key, const std::string& path,
                std::vector<T>& out, bool allow_scalar = false) {
    const YAML::Node n = map[key];
    if (!n.IsDefined()) return false;
    const std::string p = path + "." + key;
    if (allow_scalar && n.IsScalar()) {
      T v{};
      if (!scalar(n, p, v)) return false;
      out = {v};
      return true;
    }
    if (!n.IsSequence()) {
      error(n, p, "expected a list");
      return false;
    }
    std::vector<T> tmp;
    for (std::size_t j = 0; j < n.size(); ++j) {
      T v{};
      if (!scalar(n[j], p + "[" + std::to_string(j) + "]", v)) return false;
      tmp.push_back(v);
    }
    out = std::move(tmp);
    return true;
  }

  bool get4(const YAML::Node& map, const char* key, const std::string& path,
            std::array<double, 4>& out) {
    std::vector<double> v;
    if (!get_list(map, key, path, v)) return false;
    if (v.size() != 4) {
      error(map[key], path + "." + key, "expected 4 entries (blocks 00, 01, 10, 11)");
      return false;
    }
    std::copy(v.begin(), v.end(), out.begin());
    return true;
  }

 private:
  std::vector<std::string>& errs_;
};

void parse_model(Reader& r, const YAML::Node& n, ModelConfig& m) {
  const std::string p = "model";
  if (!r.expect_map(n, p)) return;
  r.check_keys(n, p, {"generator", "d", "seed", "mean_norm_sq", "alpha", "beta", "classes",
                      "orthogonalize", "fractions", "mass"});
  r.get(n, "generator", p, m.generator);
  if (r.get(n, "d", p, m.d) && m.d < 1) r.error(n["d"], "model.d", "must be >= 1");
  r.get(n, "seed", p, m.seed);
  if (r.get(n, "mean_norm_sq", p, m.mean_norm_sq) && !(m.mean_norm_sq >= 0))
    r.error(n["mean_norm_sq"], "model.mean_norm_sq", "must be >= 0");
  if (r.get_list(n, "alpha", p, m.alpha, true)) {
    for (double a : m.alpha)
      if (!(a >= 0) || !std::isfinite(a)) r.error(n["alpha"], "model.alpha", "must be >= 0");
    if (m.alpha.empty()) r.error(n["alpha"], "model.alpha", "must not be empty");
  }
  if (r.get(n, "beta", p, m.beta) && (!(m.beta >= 0) || !std::isfinite(m.beta)))
    r.error(n["beta"], "model.beta", "must be >= 0");
  if (r.get(n, "classes", p, m.classes) && m.classes < 1)
    r.error(n["classes"], "model.classes", "must be >= 1");
  r.get(n, "orthogonalize", p, m.orthogonalize);
  if (r.get4(n, "fractions", p, m.fractions)) {
    for (double f : m.fractions)
      if (!(f >= 0)) r.error(n["fractions"], "model.fractions", "must be >= 0");
  }
  if (r.get4(n, "mass", p, m.mass)) {
    for (double f : m.mass)
      if (!(f >= 0)) r.error(n["mass"], "model.mass", "must be >= 0");
  }
}

void parse_task(Reader& r, const YAML::Node& n, TaskConfig& t) {
  const std::string p = "task";
  if (!r.expect_map(n, p)) return;
  r.check_keys(n, p, {"loss", "sigma", "target_seed", "outputs", "quadrature_nodes"});
  r.get(n, "loss", p, t.loss);
  if (r.get(n, "sigma", p, t.sigma) && !(t.sigma >= 0))
    r.error(n["sigma"], "task.sigma", "must be >= 0");
  r.get(n, "target_seed", p, t.target_seed);
  if (r.get(n, "outputs", p, t.outputs) && t.outputs < 0)
    r.error(n["outputs"], "task.outputs", "must be >= 0");
  if (r.get(n, "quadrature_nodes", p, t.quadrature_nodes) &&
      (t.quadrature_nodes < 2 || t.quadrature_nodes > 1000))
    r.error(n["quadrature_nodes"], "task.quadrature_nodes", "must be in [2, 1000]");
}

void parse_gamma(Reader& r, const YAML::Node& n, std::vector<GammaConfig>& out) {
  const std::string p = "run.gamma";
  auto one = [&](const YAML::Node& g, const std::string& path, GammaConfig& gc) {
    if (g.IsScalar()) {
      double v = 0;
      if (r.scalar(g, path, v)) gc = GammaConfig{{}, {v}};
      return;
    }
    if (!r.expect_map(g, path)) return;
    r.check_keys(g, path, {"breaks", "values"});
    r.get_list(g, "breaks", path, gc.breaks);
    if (!r.get_list(g, "values", path, gc.values)) r.error(g, path, "missing 'values'");
  };
  out.clear();
  if (n.IsSequence()) {
    for (std::size_t j = 0; j < n.size(); ++j) {
      GammaConfig gc;
      one(n[j], p + "[" + std::to_string(j) + "]", gc);
      out.push_back(gc);
    }
  } else {
    GammaConfig gc;
    one(n, p, gc);
    out.push_back(gc);
  }
}

void parse_run(Reader& r, const YAML::Node& n, RunConfig& run) {
  const std::string p = "run";
  if (!r.expect_map(n, p)) return;
  r.check_keys(n, p, {"kinds", "gamma", "gamma_bar", "horizon", "grid", "seeds", "solver",
                      "hsgd_dt", "workers"});
  r.get_list(n, "kinds", p, run.kinds, true);
  if (n["gamma"].IsDefined()) parse_gamma(r, n["gamma"], run.gamma);
  r.get(n, "gamma_bar", p, run.gamma_bar);
  if (r.get(n, "horizon", p, run.horizon) && !(run.horizon > 0))
    r.error(n["horizon"], "run.horizon", "must be > 0");
  if (const YAML::Node g = n["grid"]; g.IsDefined() && r.expect_map(g, "run.grid")) {
    r.check_keys(g, "run.grid", {"spacing", "points_per_decade", "t_min", "step"});
    r.get(g, "spacing", "run.grid", run.grid.spacing);
    r.get(g, "points_per_decade", "run.grid", run.grid.points_per_decade);
    r.get(g, "t_min", "run.grid", run.grid.t_min);
    r.get(g, "step", "run.grid", run.grid.step);
  }
  r.get_list(n, "seeds", p, run.seeds, true);
  if (const YAML::Node s = n["solver"]; s.IsDefined() && r.expect_map(s, "run.solver")) {
    r.check_keys(s, "run.solver", {"step", "stretch_after", "stretch_factor", "max_stiffness"});
    r.get(s, "step", "run.solver", run.solver.step);
    r.get(s, "stretch_after", "run.solver", run.solver.stretch_after);
    r.get(s, "stretch_factor", "run.solver", run.solver.stretch_factor);
    r.get(s, "max_stiffness", "run.solver", run.solver.max_stiffness);
  }
  r.get(n, "hsgd_dt", p, run.hsgd_dt);
  r.get(n, "workers", p, run.workers);
}

void parse_analysis(Reader& r, const YAML::Node& n, AnalysisConfig& a) {
  const std::string p = "analysis";
  if (!r.expect_map(n, p)) return;
  r.check_keys(n, p, {"regime", "cw", "compare", "partition", "tail_fits", "concentration_dims"});
  r.get(n, "regime", p, a.regime);
  r.get(n, "cw", p, a.cw);
  r.get(n, "compare", p, a.compare);
  r.get(n, "partition", p, a.partition);
  r.get_list(n, "concentration_dims", p, a.concentration_dims);
  if (const YAML::Node tf = n["tail_fits"]; tf.IsDefined()) {
    if (!tf.IsSequence()) {
      r.error(tf, "analysis.tail_fits", "expected a list");
      return;
    }
    a.tail_fits.clear();
    for (std::size_t j = 0; j < tf.size(); ++j) {
      const std::string path = "analysis.tail_fits[" + std::to_string(j) + "]";
      TailFitConfig f;
      if (r.expect_map(tf[j], path)) {
        r.check_keys(tf[j], path, {"column", "law", "window"});
        r.get(tf[j], "column", path, f.column);
        r.get(tf[j], "law", path, f.law);
        std::vector<double> w;
        if (r.get_list(tf[j], "window", path, w)) {
          if (w.size() != 2) r.error(tf[j]["window"], path + ".window", "expected [t1, t2]");
          else {
            f.t1 = w[0];
            f.t2 = w[1];
          }
        }
      }
      a.tail_fits.push_back(f);
    }
  }
}

ExperimentConfig parse_node(const YAML::Node& root) {
  std::vector<std::string> errs;
  Reader r(errs);
  ExperimentConfig c;
  if (!root.IsMap()) throw ConfigError({"config root must be a mapping"});
  r.check_keys(root, "", {"model", "task", "run", "analysis", "output"});
  if (root["model"].IsDefined()) parse_model(r, root["model"], c.model);
  else errs.push_back("model: section is required");
  if (root["task"].IsDefined()) parse_task(r, root["task"], c.task);
  if (root["run"].IsDefined()) parse_run(r, root["run"], c.run);
  if (root["analysis"].IsDefined()) parse_analysis(r, root["analysis"], c.analysis);
  r.get(root, "output", "output", c.output);
  if (errs.empty()) {
    for (auto& e : validate_config(c)) errs.push_back(std::move(e));
  }
  if (!errs.empty()) throw ConfigError(std::move(errs));
  return c;
}

void emit_doubles(YAML::Emitter& e, const std::vector<double>& v) {
  e << YAML::Flow << YAML::BeginSeq;
  for (double x : v) e << x;
  e << YAML::EndSeq;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error("[experiment-cli] invalid config:\n" + join(errors)),
      errors_(std::move(errors)) {}

std::string GammaConfig::label() const {
  std::ostringstream os;
  if (breaks.empty() && values.size() == 1) {
    os << values[0];
  } else {
    os << "piecewise";
    for (double v : values) os << "_" << v;
  }
  return os.str();
}

SolverSettings SolverConfig::settings() const {
  SolverSettings s;
  s.step = step;
  s.stretch_after = stretch_after;
  s.stretch_factor = stretch_factor;
  s.max_stiffness = max_stiffness;
  return s;
}

std::vector<std::string> validate_config(const ExperimentConfig& c) {
  std::vector<std::string> e;
  const auto& m = c.model;
  const std::set<std::string> gens{"identity", "power_law", "zero_one", "multiclass_power_law"};
  if (!gens.count(m.generator))
    e.push_back("model.generator: unknown generator '" + m.generator +
                "' (identity, power_law, zero_one, multiclass_power_law)");
  if (m.generator == "power_law" && (m.alpha.empty() || m.alpha.size() > 2))
    e.push_back("model.alpha: power_law takes one or two exponents");
  if ((m.generator == "power_law" || m.generator == "multiclass_power_law") && m.d < 2)
    e.push_back("model.d: power-law generators need d >= 2");
  if (m.generator == "power_law" && !(m.mean_norm_sq > 0))
    e.push_back("model.mean_norm_sq: power_law needs a positive norm");
  if (m.generator == "zero_one") {
    double s = 0;
    for (double f : m.fractions) s += f;
    if (std::abs(s - 1) > 1e-9) e.push_back("model.fractions: must sum to 1");
  }
  int classes = 2;
  if (m.generator == "power_law") {
    classes = m.alpha.size() == 2 ? 2 : m.classes;
    if (classes != 1 && classes != 2) e.push_back("model.classes: power_law has one or two classes");
  }
  if (m.generator == "multiclass_power_law") classes = m.classes;

  const auto& t = c.task;
  const std::set<std::string> losses{"logistic", "cross_entropy", "mse"};
  if (!losses.count(t.loss))
    e.push_back("task.loss: unknown loss '" + t.loss + "' (logistic, cross_entropy, mse)");
  if (t.loss == "logistic" && classes != 2)
    e.push_back("task.loss: logistic needs a two-class model");
  if (t.loss == "cross_entropy" && classes < 2)
    e.push_back("task.loss: cross_entropy needs at least two classes");

  const auto& r = c.run;
  if (r.kinds.empty()) e.push_back("run.kinds: must not be empty");
  for (const auto& k : r.kinds)
    if (k != "ode" && k != "sgd" && k != "hsgd")
      e.push_back("run.kinds: unknown kind '" + k + "' (ode, sgd, hsgd)");
  if (!(r.horizon > 0)) e.push_back("run.horizon: must be > 0");
  if (!(r.gamma_bar > 0)) e.push_back("run.gamma_bar: must be > 0");
  if (r.gamma.empty()) e.push_back("run.gamma: at least one learning rate required");
  for (const auto& g : r.gamma) {
    if (g.values.size() != g.breaks.size() + 1) {
      e.push_back("run.gamma: need exactly one more value than breaks");
      continue;
    }
    for (double v : g.values)
      if (!(v >= 0 && v <= r.gamma_bar))
        e.push_back("run.gamma: value " + std::to_string(v) + " outside [0, gamma_bar]");
    for (std::size_t j = 1; j < g.breaks.size(); ++j)
      if (!(g.breaks[j] > g.breaks[j - 1])) e.push_back("run.gamma: breaks must increase");
  }
  if (r.grid.spacing != "log" && r.grid.spacing != "linear")
    e.push_back("run.grid.spacing: must be log or linear");
  if (r.grid.spacing == "log") {
    if (r.grid.points_per_decade < 1) e.push_back("run.grid.points_per_decade: must be >= 1");
    if (!(r.grid.t_min > 0) || !(r.grid.t_min < r.horizon))
      e.push_back("run.grid.t_min: must satisfy 0 < t_min < horizon");
  } else if (!(r.grid.step > 0)) {
    e.push_back("run.grid.step: must be > 0");
  }
  const bool stochastic = std::count(r.kinds.begin(), r.kinds.end(), "sgd") ||
                          std::count(r.kinds.begin(), r.kinds.end(), "hsgd");
  if (stochastic && r.seeds.empty()) e.push_back("run.seeds: stochastic kinds need seeds");
  if (!(r.solver.step > 0) || !(r.solver.max_stiffness > 0) || r.solver.stretch_factor < 0)
    e.push_back("run.solver: step and max_stiffness must be > 0, stretch_factor >= 0");
  if (r.hsgd_dt < 0 || r.hsgd_dt > 0.01) e.push_back("run.hsgd_dt: must be in [0, 0.01]");

  const auto& a = c.analysis;
  if (a.cw && t.loss != "logistic") e.push_back("analysis.cw: requires task.loss = logistic");
  if (a.partition && m.generator != "zero_one")
    e.push_back("analysis.partition: requires model.generator = zero_one");
  if (a.partition && t.loss != "logistic")
    e.push_back("analysis.partition: requires task.loss = logistic");
  if (a.regime && m.generator != "power_law" && m.generator != "identity")
    e.push_back("analysis.regime: requires a power_law or identity model");
  if (a.compare && (!std::count(r.kinds.begin(), r.kinds.end(), "ode") || !stochastic))
    e.push_back("analysis.compare: requires run.kinds to contain ode and sgd or hsgd");
  for (const auto& f : a.tail_fits) {
    if (f.law != "power" && f.law != "log" && f.law != "const")
      e.push_back("analysis.tail_fits.law: unknown law '" + f.law + "'");
    if (!(f.t1 < f.t2)) e.push_back("analysis.tail_fits.window: need t1 < t2");
    if (!std::count(r.kinds.begin(), r.kinds.end(), "ode"))
      e.push_back("analysis.tail_fits: requires run.kinds to contain ode");
  }
  for (int d : a.concentration_dims)
    if (d < 2) e.push_back("analysis.concentration_dims: dimensions must be >= 2");
  if (c.output.empty()) e.push_back("output: must not be empty");
  return e;
}

ExperimentConfig parse_config_string(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& ex) {
    throw ConfigError({"line " + std::to_string(ex.mark.line + 1) + ": " + ex.msg});
  }
  return parse_node(root);
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file " + path.string()});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_string(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  e << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "generator" << YAML::Value << c.model.generator;
  e << YAML::Key << "d" << YAML::Value << c.model.d;
  e << YAML::Key << "seed" << YAML::Value << c.model.seed;
  e << YAML::Key << "mean_norm_sq" << YAML::Value << c.model.mean_norm_sq;
  e << YAML::Key << "alpha" << YAML::Value;
  emit_doubles(e, c.model.alpha);
  e << YAML::Key << "beta" << YAML::Value << c.model.beta;
  e << YAML::Key << "classes" << YAML::Value << c.model.classes;
  e << YAML::Key << "orthogonalize" << YAML::Value << c.model.orthogonalize;
  e << YAML::Key << "fractions" << YAML::Value;
  emit_doubles(e, {c.model.fractions.begin(), c.model.fractions.end()});
  e << YAML::Key << "mass" << YAML::Value;
  emit_doubles(e, {c.model.mass.begin(), c.model.mass.end()});
  e << YAML::EndMap;

  e << YAML::Key << "task" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "loss" << YAML::Value << c.task.loss;
  e << YAML::Key << "sigma" << YAML::Value << c.task.sigma;
  e << YAML::Key << "target_seed" << YAML::Value << c.task.target_seed;
  e << YAML::Key << "outputs" << YAML::Value << c.task.outputs;
  e << YAML::Key << "quadrature_nodes" << YAML::Value << c.task.quadrature_nodes;
  e << YAML::EndMap;

  e << YAML::Key << "run" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kinds" << YAML::Value << YAML::Flow << c.run.kinds;
  e << YAML::Key << "gamma" << YAML::Value << YAML::BeginSeq;
  for (const auto& g : c.run.gamma) {
    if (g.breaks.empty() && g.values.size() == 1) {
      e << g.values[0];
    } else {
      e << YAML::Flow << YAML::BeginMap << YAML::Key << "breaks" << YAML::Value;
      emit_doubles(e, g.breaks);
      e << YAML::Key << "values" << YAML::Value;
      emit_doubles(e, g.values);
      e << YAML::EndMap;
    }
  }
  e << YAML::EndSeq;
  e << YAML::Key << "gamma_bar" << YAML::Value << c.run.gamma_bar;
  e << YAML::Key << "horizon" << YAML::Value << c.run.horizon;
  e << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "spacing" << YAML::Value << c.run.grid.spacing;
  e << YAML::Key << "points_per_decade" << YAML::Value << c.run.grid.points_per_decade;
  e << YAML::Key << "t_min" << YAML::Value << c.run.grid.t_min;
  e << YAML::Key << "step" << YAML::Value << c.run.grid.step;
  e << YAML::EndMap;
  e << YAML::Key << "seeds" << YAML::Value << YAML::Flow << c.run.seeds;
  e << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "step" << YAML::Value << c.run.solver.step;
  e << YAML::Key << "stretch_after" << YAML::Value << c.run.solver.stretch_after;
  e << YAML::Key << "stretch_factor" << YAML::Value << c.run.solver.stretch_factor;
  e << YAML::Key << "max_stiffness" << YAML::Value << c.run.solver.max_stiffness;
  e << YAML::EndMap;
  e << YAML::Key << "hsgd_dt" << YAML::Value << c.run.hsgd_dt;
  e << YAML::Key << "workers" << YAML::Value << c.run.workers;
  e << YAML::EndMap;

  e << YAML::Key << "analysis" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "regime" << YAML::Value << c.analysis.regime;
  e << YAML::Key << "cw" << YAML::Value << c.analysis.cw;
  e << YAML::Key << "compare" << YAML::Value << c.analysis.compare;
  e << YAML::Key << "partition" << YAML::Value << c.analysis.partition;
  e << YAML::Key << "tail_fits" << YAML::Value << YAML::BeginSeq;
  for (const auto& f : c.analysis.tail_fits) {
    e << YAML::Flow << YAML::BeginMap;
    e << YAML::Key << "column" << YAML::Value << f.column;
    e << YAML::Key << "law" << YAML::Value << f.law;
    e << YAML::Key << "window" << YAML::Value;
    emit_doubles(e, {f.t1, f.t2});
    e << YAML::EndMap;
  }
  e << YAML::EndSeq;
  e << YAML::Key << "concentration_dims" << YAML::Value << YAML::Flow
    << c.analysis.concentration_dims;
  e << YAML::EndMap;

  e << YAML::Key << "output" << YAML::Value << c.output;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace gmmsgd

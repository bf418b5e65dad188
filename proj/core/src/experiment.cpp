#include <cmath>
#include <fstream>
#include <map>
#include <mutex>

#include <nlohmann/json.hpp>

#include "gmmsgd/asymptotics.hpp"
#include "gmmsgd/errors.hpp"
#include "gmmsgd/experiment.hpp"
#include "gmmsgd/hashing.hpp"
#include "gmmsgd/parallel.hpp"
#include "gmmsgd/sgd.hpp"

namespace gmmsgd {

namespace {

const char* kModule = "experiment-cli";
using json = nlohmann::ordered_json;

struct Job {
  std::string kind;
  std::size_t gamma = 0;
  std::optional<std::uint64_t> seed;
  std::string file;
  LearningCurve curve;
};

std::string file_name(const Job& j, const ExperimentConfig& c) {
  std::string s = j.kind + "_gamma" + c.run.gamma[j.gamma].label();
  if (j.seed) s += "_seed" + std::to_string(*j.seed);
  return s + ".csv";
}

// json cannot hold inf/nan; they become null
json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

bool has_kind(const RunConfig& r, const char* k) {
  return std::find(r.kinds.begin(), r.kinds.end(), k) != r.kinds.end();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(kModule, "cannot write " + path.string());
  out << text;
}

// Curve-level invariants: finite rows, nonnegative risk and norms, and
// Cauchy-Schwarz m^2 <= |mu|^2 V for the logistic overlap.
void check_curve(const Job& j, const SpectralMixture& model, const TaskSpec& task,
                 std::vector<std::string>& out) {
  const double mu2 = model.mean_norm_sq(0);
  for (const auto& r : j.curve.rows) {
    std::string what;
    if (!std::isfinite(r.loss) || !std::isfinite(r.m) || !std::isfinite(r.V)) what = "non-finite value";
    else if (r.loss < -1e-12) what = "negative loss";
    else if (r.V < -1e-12) what = "negative norm";
    else if (task.loss == LossFamily::BinaryLogistic && r.m * r.m > mu2 * r.V * (1 + 1e-8) + 1e-12)
      what = "overlap exceeds |mu|^2 V";
    if (!what.empty()) {
      out.push_back(j.file + ": " + what + " at t=" + format_double(r.t));
      return;
    }
  }
}

}  // namespace

BuiltProblem build_problem(const ExperimentConfig& c, std::optional<int> d_override) {
  const ModelConfig& m = c.model;
  const int d = d_override.value_or(m.d);
  BuiltProblem p;
  if (m.generator == "identity") {
    p.model = build_identity(d, m.mean_norm_sq);
  } else if (m.generator == "power_law") {
    // a single exponent is shared by both classes of the binary model
    std::vector<double> alphas = m.alpha;
    if (alphas.size() == 1 && m.classes == 2) alphas.push_back(alphas[0]);
    p.model = build_power_law(d, alphas, m.beta, m.mean_norm_sq);
  } else if (m.generator == "zero_one") {
    ZeroOneModel z = build_zero_one(d, m.fractions, m.mass, m.seed);
    p.model = std::move(z.model);
    p.partition = std::move(z.partition);
  } else if (m.generator == "multiclass_power_law") {
    p.model = build_multiclass_power_law(d, m.classes, m.alpha.at(0), m.mean_norm_sq, m.seed,
                                         m.orthogonalize);
  } else {
    throw InvalidArgument(kModule, "unknown generator '" + m.generator + "'");
  }
  const LossFamily loss = loss_family_from_string(c.task.loss);
  if (loss == LossFamily::Mse) {
    const int outputs = c.task.outputs > 0 ? c.task.outputs : p.model.num_classes();
    p.task = make_mse_task(p.model, outputs, c.task.sigma, c.task.target_seed);
  } else {
    p.task.loss = loss;
  }
  p.task.quadrature_nodes = c.task.quadrature_nodes;
  return p;
}

LearningRateSchedule make_schedule(const GammaConfig& g, double gamma_bar) {
  if (g.breaks.empty() && g.values.size() == 1) return LearningRateSchedule(g.values[0], gamma_bar);
  return LearningRateSchedule(g.breaks, g.values, gamma_bar);
}

std::vector<double> make_grid(const RunConfig& run) {
  if (run.grid.spacing == "linear") return linear_grid(run.horizon, run.grid.step);
  return log_grid(run.grid.t_min, run.horizon, run.grid.points_per_decade);
}

RunResult run_experiment(const ExperimentConfig& c) {
  if (auto errs = validate_config(c); !errs.empty()) throw ConfigError(std::move(errs));
  const BuiltProblem prob = build_problem(c);
  const std::vector<double> grid = make_grid(c.run);
  const SolverSettings solver = c.run.solver.settings();
  const ZeroOnePartition* part =
      c.analysis.partition && prob.partition ? &*prob.partition : nullptr;

  std::vector<LearningRateSchedule> schedules;
  for (const auto& g : c.run.gamma) schedules.push_back(make_schedule(g, c.run.gamma_bar));

  std::vector<Job> jobs;
  for (const auto& kind : c.run.kinds) {
    for (std::size_t g = 0; g < c.run.gamma.size(); ++g) {
      if (kind == "ode") {
        jobs.push_back(Job{kind, g, std::nullopt, {}, {}});
      } else {
        for (auto s : c.run.seeds) jobs.push_back(Job{kind, g, s, {}, {}});
      }
    }
  }
  for (auto& j : jobs) j.file = file_name(j, c);

  RunResult res;
  res.output_dir = c.output;
  res.deterministic = !has_kind(c.run, "sgd") && !has_kind(c.run, "hsgd");
  std::filesystem::create_directories(res.output_dir);

  parallel_for(jobs.size(), c.run.workers, [&](std::size_t idx) {
    Job& j = jobs[idx];
    const auto& gamma = schedules[j.gamma];
    if (j.kind == "ode") {
      j.curve = integrate_task(prob.model, prob.task, gamma, grid, solver, part);
    } else if (j.kind == "sgd") {
      SgdOptions o;
      if (part) o.partition = *part;
      j.curve = run_sgd(prob.model, prob.task, gamma, grid, *j.seed, o);
    } else {
      HsgdOptions o;
      o.dt = c.run.hsgd_dt;
      j.curve = run_hsgd(prob.model, prob.task, gamma, grid, *j.seed, o);
    }
    write_csv(j.curve, res.output_dir / j.file);
  });

  {
    std::ofstream out(res.output_dir / "model.csv", std::ios::binary);
    write_model_csv(prob.model, out);
  }

  json report;
  report["model"] = {{"generator", c.model.generator},
                     {"d", prob.model.d},
                     {"classes", prob.model.num_classes()},
                     {"hash", model_hash(prob.model)}};
  json model_viol = json::array();
  for (const auto& v : validate(prob.model)) {
    model_viol.push_back({{"assumption", v.assumption}, {"message", v.message}});
    res.violations.push_back("model: " + v.assumption + ": " + v.message);
  }
  report["model"]["violations"] = model_viol;

  json runs = json::array();
  for (const auto& j : jobs) {
    json r = {{"file", j.file},
              {"kind", j.kind},
              {"gamma", j.curve.meta.gamma},
              {"seed", j.seed ? json(*j.seed) : json(nullptr)},
              {"final_loss", num(j.curve.rows.back().loss)}};
    runs.push_back(r);
    check_curve(j, prob.model, prob.task, res.violations);
  }
  report["runs"] = runs;

  if (c.analysis.compare) {
    json cmp = json::array();
    for (const auto& ode : jobs) {
      if (ode.kind != "ode") continue;
      for (const auto& j : jobs) {
        if (j.kind == "ode" || j.gamma != ode.gamma) continue;
        json e = {{"file", j.file}, {"reference", ode.file}};
        for (const auto& [col, v] : compare(j.curve, ode.curve, Metric::Sup)) e["sup"][col] = num(v);
        for (const auto& [col, v] : compare(j.curve, ode.curve, Metric::L2)) e["l2"][col] = num(v);
        cmp.push_back(e);
      }
    }
    report["comparisons"] = cmp;
  }

  if (c.analysis.regime) {
    const RegimeReport rr =
        classify_regime(c.model.generator == "identity" ? 0.0 : c.model.alpha.at(0),
                        c.model.generator == "identity" ? 0.0 : c.model.beta);
    report["regime"] = {{"alpha", rr.alpha},
                        {"beta", rr.beta},
                        {"kappa_mu", num(rr.kappa_mu)},
                        {"kappa_2", num(rr.kappa_2)},
                        {"kappa_lambda", num(rr.kappa_lambda)},
                        {"regime", rr.regime},
                        {"identity", rr.identity},
                        {"extreme_tail_expected", rr.extreme_tail_expected()},
                        {"note", rr.note}};
  }

  const std::string primary = has_kind(c.run, "ode") ? "ode" : c.run.kinds.front();
  if (c.analysis.cw) {
    json cw = json::array();
    for (const auto& j : jobs) {
      if (j.kind != primary) continue;
      const CwSeries s = measure_cw(j.curve, c.task.quadrature_nodes);
      std::size_t flagged = std::count(s.flagged.begin(), s.flagged.end(), true);
      cw.push_back({{"file", j.file},
                    {"sup", num(s.sup)},
                    {"plateau", num(s.plateau)},
                    {"flagged_points", flagged}});
    }
    report["cw"] = cw;
  }

  if (!c.analysis.tail_fits.empty()) {
    json fits = json::array();
    for (const auto& f : c.analysis.tail_fits) {
      for (const auto& j : jobs) {
        if (j.kind != "ode") continue;
        json e = {{"file", j.file}, {"column", f.column}, {"law", f.law},
                  {"window", {f.t1, f.t2}}};
        try {
          const TailFit fit = fit_tail(j.curve, f.column, f.t1, f.t2, tail_law_from_string(f.law));
          e["slope"] = num(fit.slope);
          e["intercept"] = num(fit.intercept);
          e["level"] = num(fit.level);
          e["max_dev"] = num(fit.max_dev);
          e["r2"] = num(fit.r2);
          e["points"] = fit.points;
        } catch (const Error& ex) {
          e["error"] = ex.what();
        }
        fits.push_back(e);
      }
    }
    report["tail_fits"] = fits;
  }
  report["violations"] = res.violations;
  write_text(res.output_dir / "report.json", report.dump(2) + "\n");

  for (const auto& j : jobs)
    res.files.push_back({j.file, sha256_file(res.output_dir / j.file), "curve"});
  res.files.push_back({"model.csv", sha256_file(res.output_dir / "model.csv"), "model"});
  res.files.push_back({"report.json", sha256_file(res.output_dir / "report.json"), "report"});

  json manifest;
  manifest["deterministic"] = res.deterministic;
  manifest["model_hash"] = model_hash(prob.model);
  manifest["solver"] = solver.describe();
  manifest["grid"] = {{"spacing", c.run.grid.spacing}, {"points", grid.size()},
                      {"horizon", c.run.horizon}};
  manifest["config"] = serialize_config(c);
  json files = json::array();
  for (const auto& f : res.files)
    files.push_back({{"path", f.path}, {"sha256", f.sha256}, {"role", f.role}});
  manifest["files"] = files;
  manifest["ok"] = res.ok();
  write_text(res.output_dir / "manifest.json", manifest.dump(2) + "\n");
  return res;
}

std::filesystem::path run_sweep(const ExperimentConfig& c) {
  if (auto errs = validate_config(c); !errs.empty()) throw ConfigError(std::move(errs));
  if (c.analysis.concentration_dims.empty())
    throw InvalidArgument(kModule, "sweep needs analysis.concentration_dims");
  ConcentrationSpec spec;
  spec.make_model = [&](int d) { return build_problem(c, d).model; };
  spec.make_task = [&](const SpectralMixture& m) {
    // the target depends on d, so rebuild from the model dimension
    return build_problem(c, m.d).task;
  };
  spec.gamma = make_schedule(c.run.gamma.front(), c.run.gamma_bar);
  spec.grid = make_grid(c.run);
  spec.dims = c.analysis.concentration_dims;
  spec.seeds = c.run.seeds;
  spec.solver = c.run.solver.settings();
  spec.workers = c.run.workers;
  const ConcentrationTable table = concentration_sweep(spec);

  json out;
  out["gamma"] = spec.gamma.describe();
  out["horizon"] = c.run.horizon;
  out["seeds"] = c.run.seeds;
  json rows = json::array();
  for (const auto& r : table.rows) {
    json e = {{"d", r.d}, {"median", num(r.median)}};
    json errs = json::array();
    for (double x : r.errors) errs.push_back(num(x));
    e["errors"] = errs;
    rows.push_back(e);
  }
  out["rows"] = rows;
  out["slope"] = table.slope ? json(*table.slope) : json(nullptr);
  std::filesystem::create_directories(c.output);
  const auto path = std::filesystem::path(c.output) / "sweep.json";
  write_text(path, out.dump(2) + "\n");
  return path;
}

}  // namespace gmmsgd

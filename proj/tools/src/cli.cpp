#include "cli.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gmmsgd/asymptotics.hpp"
#include "gmmsgd/curve.hpp"
#include "gmmsgd/errors.hpp"
#include "gmmsgd/experiment.hpp"

namespace gmmsgd::cli {

namespace {

using json = nlohmann::ordered_json;

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

int cmd_run(const std::string& path, const std::string& output, std::ostream& out,
            std::ostream& err) {
  ExperimentConfig c = parse_config(path);
  if (!output.empty()) c.output = output;
  const RunResult res = run_experiment(c);
  for (const auto& f : res.files) out << f.sha256 << "  " << f.path << "\n";
  out << "manifest: " << (res.output_dir / "manifest.json").string() << "\n";
  for (const auto& v : res.violations) err << "violation: " << v << "\n";
  return res.ok() ? kOk : kViolation;
}

int cmd_compare(const std::string& a, const std::string& b, const std::string& metric,
                std::ostream& out) {
  const auto res = compare(read_csv(std::filesystem::path(a)), read_csv(std::filesystem::path(b)),
                           metric_from_string(metric));
  json j;
  for (const auto& [col, v] : res) j[col] = num(v);
  out << j.dump(2) << "\n";
  return kOk;
}

int cmd_regime(double alpha, double beta, std::ostream& out) {
  const RegimeReport r = classify_regime(alpha, beta);
  json j = {{"alpha", r.alpha},
            {"beta", r.beta},
            {"kappa_mu", num(r.kappa_mu)},
            {"kappa_2", num(r.kappa_2)},
            {"kappa_lambda", num(r.kappa_lambda)},
            {"regime", r.regime},
            {"identity", r.identity},
            {"extreme_tail_expected", r.extreme_tail_expected()},
            {"note", r.note}};
  out << j.dump(2) << "\n";
  return kOk;
}

int cmd_sweep(const std::string& path, const std::string& output, std::ostream& out) {
  ExperimentConfig c = parse_config(path);
  if (!output.empty()) c.output = output;
  const auto file = run_sweep(c);
  std::ifstream in(file);
  out << in.rdbuf();
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"SGD on Gaussian mixtures: simulation, deterministic equivalents and analysis"};
  app.require_subcommand(1);

  std::string config, output, curve_a, curve_b, metric = "sup";
  double alpha = 0, beta = 0;

  auto* run_cmd = app.add_subcommand("run", "run every (kind, gamma, seed) of a config");
  run_cmd->add_option("config", config, "YAML config")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("-o,--output", output, "override the output directory");

  auto* cmp_cmd = app.add_subcommand("compare", "distance between two curve CSVs per column");
  cmp_cmd->add_option("a", curve_a)->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("b", curve_b)->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("--metric", metric, "sup or l2")
      ->check(CLI::IsMember({"sup", "l2"}, CLI::ignore_case));

  auto* reg_cmd = app.add_subcommand("regime", "classify a power-law (alpha, beta) pair");
  reg_cmd->add_option("--alpha", alpha)->required();
  reg_cmd->add_option("--beta", beta)->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "concentration sweep over analysis.concentration_dims");
  sweep_cmd->add_option("config", config, "YAML config")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("-o,--output", output, "override the output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run_cmd) return cmd_run(config, output, out, err);
    if (*cmp_cmd) return cmd_compare(curve_a, curve_b, metric, out);
    if (*reg_cmd) return cmd_regime(alpha, beta, out);
    if (*sweep_cmd) return cmd_sweep(config, output, out);
  } catch (const ConfigError& e) {
    for (const auto& msg : e.errors()) err << "config error: " << msg << "\n";
    return kUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace gmmsgd::cli

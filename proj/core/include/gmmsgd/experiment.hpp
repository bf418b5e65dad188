#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmmsgd/ode.hpp"
#include "gmmsgd/schedule.hpp"
#include "gmmsgd/spectral_model.hpp"
#include "gmmsgd/task.hpp"

namespace gmmsgd {

struct ModelConfig {
  std::string generator = "identity";  // identity | power_law | zero_one | multiclass_power_law
  int d = 1000;
  std::uint64_t seed = 0;
  double mean_norm_sq = 1.0;
  std::vector<double> alpha{1.0};
  double beta = 0.0;
  int classes = 2;
  bool orthogonalize = true;
  std::array<double, 4> fractions{0.25, 0.25, 0.25, 0.25};
  std::array<double, 4> mass{0.25, 0.25, 0.25, 0.25};

  bool operator==(const ModelConfig&) const = default;
};

struct TaskConfig {
  std::string loss = "logistic";  // logistic | cross_entropy | mse
  double sigma = 0.0;
  std::uint64_t target_seed = 0;
  int outputs = 0;  // MSE target columns; 0 means one per class
  int quadrature_nodes = kDefaultNodes;

  bool operator==(const TaskConfig&) const = default;
};

/// One learning-rate setting: a constant, or piecewise constant values with
/// breaks in continuous time.
struct GammaConfig {
  std::vector<double> breaks;
  std::vector<double> values;

  bool operator==(const GammaConfig&) const = default;
  std::string label() const;
};

struct GridConfig {
  std::string spacing = "log";  // log | linear
  int points_per_decade = 32;
  double t_min = 0.01;          // first positive point of a log grid
  double step = 0.1;            // linear spacing

  bool operator==(const GridConfig&) const = default;
};

struct SolverConfig {
  double step = 0.01;
  double stretch_after = 100.0;
  double stretch_factor = 0.05;
  double max_stiffness = 1.0;

  bool operator==(const SolverConfig&) const = default;
  SolverSettings settings() const;
};

struct RunConfig {
  std::vector<std::string> kinds{"ode"};
  std::vector<GammaConfig> gamma{GammaConfig{{}, {0.5}}};
  double gamma_bar = 2.0;
  double horizon = 10.0;
  GridConfig grid{};
  std::vector<std::uint64_t> seeds{1};
  SolverConfig solver{};
  double hsgd_dt = 0.0;
  unsigned workers = 0;

  bool operator==(const RunConfig&) const = default;
};

struct TailFitConfig {
  std::string column = "loss";
  std::string law = "power";
  double t1 = 100.0;
  double t2 = 10000.0;

  bool operator==(const TailFitConfig&) const = default;
};

struct AnalysisConfig {
  bool regime = false;
  bool cw = false;
  bool compare = false;
  bool partition = false;  // subspace projections (zero-one generator)
  std::vector<TailFitConfig> tail_fits;
  std::vector<int> concentration_dims;

  bool operator==(const AnalysisConfig&) const = default;
};

struct ExperimentConfig {
  ModelConfig model;
  TaskConfig task;
  RunConfig run;
  AnalysisConfig analysis;
  std::string output = "out";

  bool operator==(const ExperimentConfig&) const = default;
};

/// Schema errors, one message per problem, each with "line N:" context when
/// the source is known.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config_string(const std::string& text);
/// YAML text with every field spelled out.
std::string serialize_config(const ExperimentConfig& config);
/// Cross-field validation; returns the list of problems (empty if valid).
std::vector<std::string> validate_config(const ExperimentConfig& config);

struct BuiltProblem {
  SpectralMixture model;
  std::optional<ZeroOnePartition> partition;
  TaskSpec task;
};

/// Model and task for the config, optionally at a different dimension.
BuiltProblem build_problem(const ExperimentConfig& config, std::optional<int> d = std::nullopt);
LearningRateSchedule make_schedule(const GammaConfig& gamma, double gamma_bar);
std::vector<double> make_grid(const RunConfig& run);

struct ManifestEntry {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::string role;  // curve | report | model
};

struct RunResult {
  std::filesystem::path output_dir;
  std::vector<ManifestEntry> files;
  bool deterministic = true;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

/// Execute every (kind, gamma, seed) run, write one CSV each, report.json
/// and manifest.json (last). Violated invariants are listed in the report and
/// returned; the caller maps them to the exit status.
RunResult run_experiment(const ExperimentConfig& config);

/// Concentration sweep over analysis.concentration_dims for the first gamma;
/// writes sweep.json into the output directory and returns its path.
std::filesystem::path run_sweep(const ExperimentConfig& config);

}  // namespace gmmsgd

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "gmmsgd/curve.hpp"
#include "gmmsgd/moments.hpp"
#include "gmmsgd/ode.hpp"
#include "gmmsgd/schedule.hpp"
#include "gmmsgd/spectral_model.hpp"
#include "gmmsgd/task.hpp"

namespace gmmsgd {

using Rng = std::mt19937_64;

/// Independent stream per (seed, tag); runs with different tags never share
/// random numbers.
Rng make_rng(std::uint64_t seed, std::uint64_t tag);

struct DataPoint {
  Eigen::VectorXd a;  // eigencoordinates
  int cls = 0;
  Eigen::VectorXd y;  // soft label (MSE only)
};

/// a_rho = sqrt(lambda_rho^(cls)) z_rho + mu_cls,rho. With a soft-label task
/// also draws y = X*^T a + eps.
DataPoint sample_point(const SpectralMixture& model, int cls, Rng& rng,
                       const TaskSpec* task = nullptr);

struct SgdState {
  Eigen::MatrixXd X;  // d x l
  long k = 0;
  Rng rng;
};

SgdState make_sgd_state(const SpectralMixture& model, const TaskSpec& task,
                        std::uint64_t seed, const Eigen::MatrixXd& x0 = {});

/// One streaming step X <- X - (gamma/d) a grad_x f(X^T a) with a fresh
/// sample. Throws NumericalError(k, |X|) on overflow.
void sgd_step(SgdState& state, const SpectralMixture& model, const TaskSpec& task,
              double gamma_k);

/// Observables of an iterate: overlap, norm, B_i and the population risk of
/// X computed from its own (B_i, m_i).
CurveRow iterate_observables(const Eigen::MatrixXd& X, double t,
                             const SpectralMixture& model, const TaskSpec& task,
                             const ZeroOnePartition* partition = nullptr);

/// V_rho = d x_rho^2 and m_rho = d x_rho mu_rho for a one-column iterate.
struct PerModeStats {
  Eigen::ArrayXd V;
  Eigen::ArrayXd M;
};
PerModeStats per_mode_stats(const Eigen::VectorXd& x, const SpectralMixture& model);

struct SgdOptions {
  Eigen::MatrixXd x0;  // empty means 0
  std::optional<ZeroOnePartition> partition;
  std::function<void(double t, const SgdState&)> observer;
  long max_steps = 2'000'000'000L;
};

/// floor(T d) steps, T = grid.back(); records at k = floor(t d) for each grid
/// time t.
LearningCurve run_sgd(const SpectralMixture& model, const TaskSpec& task,
                      const LearningRateSchedule& gamma,
                      const std::vector<double>& grid, std::uint64_t seed,
                      const SgdOptions& opts = {});

struct HsgdOptions {
  double dt = 0;           // 0 means min(1/d, 0.01)
  bool diffusion = true;   // off gives Euler gradient flow
  Eigen::MatrixXd x0;
  std::function<void(double t, const Eigen::MatrixXd& X)> observer;
};

/// Euler-Maruyama on homogenized SGD. Drift -gamma sum_i p_i (K_i X g2_i +
/// mu_i g1_i); diffusion gamma sqrt((1/d) sum_i p_i (K_i + mu_i mu_i^T) (x) gg_i),
/// sampled mode by mode with class-shared noise for the rank-one mean part.
LearningCurve run_hsgd(const SpectralMixture& model, const TaskSpec& task,
                       const LearningRateSchedule& gamma,
                       const std::vector<double>& grid, std::uint64_t seed,
                       const HsgdOptions& opts = {});

struct ConcentrationRow {
  int d = 0;
  std::vector<double> errors;  // one per seed
  double median = 0;
};

struct ConcentrationTable {
  std::vector<ConcentrationRow> rows;
  std::optional<double> slope;  // least-squares slope of log err vs log d
};

struct ConcentrationSpec {
  std::function<SpectralMixture(int d)> make_model;
  std::function<TaskSpec(const SpectralMixture&)> make_task;
  LearningRateSchedule gamma{0.5};
  std::vector<double> grid;
  std::vector<int> dims;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  SolverSettings solver{};
  unsigned workers = 0;
};

/// err(d) = median over seeds of sup_t |L_sgd(t) - L_ode(t)|.
ConcentrationTable concentration_sweep(const ConcentrationSpec& spec);

}  // namespace gmmsgd

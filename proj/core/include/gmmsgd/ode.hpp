#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gmmsgd/curve.hpp"
#include "gmmsgd/moments.hpp"
#include "gmmsgd/schedule.hpp"
#include "gmmsgd/spectral_model.hpp"
#include "gmmsgd/task.hpp"

namespace gmmsgd {

/// Fixed-step classical RK4. The step is `step` up to `stretch_after`, then
/// max(step, stretch_factor * t). Steps are additionally capped so that
/// h * (largest per-mode decay rate) <= max_stiffness, and shortened so the
/// integrator lands exactly on every output time.
struct SolverSettings {
  double step = 0.01;
  double stretch_after = 100.0;
  double stretch_factor = 0.05;
  double max_stiffness = 1.0;
  /// Keep the gamma^2 (noise) terms. Off gives the gradient-flow system.
  bool second_order = true;

  std::string describe() const;
};

/// Flat state vector; mode rho owns y[rho * stride, (rho + 1) * stride), any
/// trailing entries are auxiliary scalars.
struct FlatState {
  double t = 0;
  int d = 0;
  int stride = 0;
  Eigen::VectorXd y;
};

using Rhs = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy,
                               double& rate)>;

/// Drive `y` through every grid time, calling `on_grid` at each (including
/// grid[0] if it equals the initial time). Throws NumericalError naming the
/// time and mode on a non-finite state.
void rk4_integrate(FlatState& state, const std::vector<double>& grid,
                   const SolverSettings& settings, const Rhs& rhs,
                   const std::function<void(const FlatState&)>& on_grid,
                   const char* module);

// ---------------------------------------------------------------------------
// Binary logistic, symmetric means +-mu: scalar V_rho, m_rho per mode.

struct BinaryOdeState {
  double t = 0;
  Eigen::ArrayXd V;    // per-mode V_rho
  Eigen::ArrayXd M;    // per-mode m_rho
  double omega1 = 0;   // int_0^t (p1 W1(m, B1) + p2 W1(m, B2))
};

struct BinaryOdeOptions {
  SolverSettings solver{};
  Eigen::VectorXd x0;                       // empty means X0 = 0
  std::optional<ZeroOnePartition> partition;
  std::function<void(const BinaryOdeState&)> observer;
  int nodes = kDefaultNodes;
};

LearningCurve integrate_binary_logistic(const SpectralMixture& model,
                                        const LearningRateSchedule& gamma,
                                        const std::vector<double>& grid,
                                        const BinaryOdeOptions& opts = {});

/// m, V, B1, B2, loss, alignment, and subspace projections
/// m_(jk) = (1/d) sum_{rho in I_jk} m_rho, v_(jk) likewise.
CurveRow ode_observables(const BinaryOdeState& state, const SpectralMixture& model,
                         const ZeroOnePartition* partition = nullptr,
                         int nodes = kDefaultNodes);

// ---------------------------------------------------------------------------
// General system: per mode an n x n matrix V_rho and one n-vector m_rho,j per
// class, where n is the oracle width (trainable plus target columns).

struct GeneralOdeState {
  double t = 0;
  int d = 0, n = 0, classes = 0;
  const Eigen::VectorXd* y = nullptr;

  Eigen::Map<const Eigen::MatrixXd> V(int rho) const;
  Eigen::Map<const Eigen::VectorXd> M(int rho, int cls) const;
  Eigen::MatrixXd B(const SpectralMixture& model, int cls) const;
  Eigen::VectorXd m(int cls) const;
};

struct GeneralOdeOptions {
  SolverSettings solver{};
  Eigen::MatrixXd x0;  // d x trainable; empty means 0
  std::function<void(const GeneralOdeState&)> observer;
};

LearningCurve integrate_general(const SpectralMixture& model, const TaskSpec& task,
                                const MomentOracle& oracle,
                                const LearningRateSchedule& gamma,
                                const std::vector<double>& grid,
                                const GeneralOdeOptions& opts = {});

CurveRow ode_observables(const GeneralOdeState& state, const SpectralMixture& model,
                         const TaskSpec& task, const MomentOracle& oracle);

// ---------------------------------------------------------------------------
// Reduced MSE system: per-mode distance D_rho and overlaps m_rho,j,u.

struct MseOdeState {
  double t = 0;
  int d = 0, classes = 0, outputs = 0;
  const Eigen::VectorXd* y = nullptr;

  double D(int rho) const { return (*y)[rho * stride() ]; }
  double M(int rho, int cls, int u) const {
    return (*y)[rho * stride() + 1 + cls * outputs + u];
  }
  int stride() const { return 1 + classes * outputs; }
  /// m_{i,u} = (1/d) sum_rho M(rho, i, u).
  Eigen::MatrixXd overlaps() const;
  /// L_i per class.
  Eigen::VectorXd class_losses(const SpectralMixture& model, double sigma) const;
};

struct MseOdeOptions {
  SolverSettings solver{};
  Eigen::MatrixXd x0;  // d x l; empty means 0
  std::function<void(const MseOdeState&)> observer;
};

LearningCurve integrate_mse(const SpectralMixture& model, const TaskSpec& task,
                            const LearningRateSchedule& gamma,
                            const std::vector<double>& grid,
                            const MseOdeOptions& opts = {});

CurveRow ode_observables(const MseOdeState& state, const SpectralMixture& model,
                         const TaskSpec& task);

// ---------------------------------------------------------------------------

/// Pick the deterministic system for a task: the scalar binary system for
/// symmetric binary logistic, the reduced system for MSE, the general system
/// otherwise.
LearningCurve integrate_task(const SpectralMixture& model, const TaskSpec& task,
                             const LearningRateSchedule& gamma,
                             const std::vector<double>& grid,
                             const SolverSettings& solver = {},
                             const ZeroOnePartition* partition = nullptr);

}  // namespace gmmsgd

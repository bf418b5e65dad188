#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "gmmsgd/errors.hpp"
#include "gmmsgd/sgd.hpp"

namespace gmmsgd {

namespace {

const char* kModule = "sgd-lab";

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()));
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

LearningCurve run_hsgd(const SpectralMixture& model, const TaskSpec& task,
                       const LearningRateSchedule& gamma, const std::vector<double>& grid,
                       std::uint64_t seed, const HsgdOptions& opts) {
  check_grid(grid);
  check_task(model, task);
  const int d = model.d, k = model.num_classes();
  const double dt = opts.dt > 0 ? opts.dt : std::min(1.0 / d, 0.01);
  if (dt > 0.01 + 1e-15) throw InvalidArgument(kModule, "HSGD step dt must be <= 0.01");

  const auto oracle = make_oracle(model, task);
  const int n = oracle->dim(), ell = oracle->trainable();

  // full iterate: trainable columns followed by the target columns
  Eigen::MatrixXd Xh = Eigen::MatrixXd::Zero(d, n);
  if (opts.x0.size()) {
    if (opts.x0.rows() != d || opts.x0.cols() != ell)
      throw InvalidArgument(kModule, "x0 must be d x " + std::to_string(ell));
    Xh.leftCols(ell) = opts.x0;
  }
  if (n > ell) Xh.rightCols(n - ell) = task.target;

  Rng rng = make_rng(seed, 0x4b5);
  std::normal_distribution<double> normal;
  std::vector<Eigen::MatrixXd> Bs(k);
  std::vector<Eigen::VectorXd> ms(k);
  Eigen::MatrixXd drift(d, ell), noise(d, ell), xi(d, ell), inner(d, ell);
  Eigen::VectorXd eta(ell);

  LearningCurve curve;
  curve.meta.kind = "hsgd";
  curve.meta.seed = seed;
  curve.meta.model_hash = model_hash(model);
  curve.meta.gamma = gamma.describe();
  curve.meta.d = d;
  {
    std::ostringstream os;
    os << "euler_maruyama(dt=" << dt << ",diffusion=" << (opts.diffusion ? "true" : "false") << ")";
    curve.meta.settings = os.str();
  }

  long step = 0;
  for (double target_t : grid) {
    const long target = static_cast<long>(std::floor(target_t / dt + 1e-9));
    while (step < target) {
      const double t = step * dt;
      const double g = gamma(t);
      drift.setZero();
      noise.setZero();
      for (int i = 0; i < k; ++i) {
        const Eigen::VectorXd lam = model.eigvals.row(i).transpose();
        const Eigen::VectorXd mu = model.mean_coords.row(i).transpose();
        Bs[i] = Xh.transpose() * lam.asDiagonal() * Xh;
        ms[i] = Xh.transpose() * mu;
        const MomentTriple mom = oracle->evaluate(i, Bs[i], ms[i]);
        const double p = model.probs[i];
        // rows: lambda_rho g2 x_rho + mu_rho g1, restricted to trainable outputs
        drift.noalias() += p * (lam.asDiagonal() * (Xh * mom.g2.topRows(ell).transpose()));
        drift.noalias() += p * mu * mom.g1.head(ell).transpose();
        if (opts.diffusion && g > 0) {
          for (int rho = 0; rho < d; ++rho)
            for (int u = 0; u < ell; ++u) xi(rho, u) = normal(rng);
          for (int u = 0; u < ell; ++u) eta[u] = normal(rng);
          inner = lam.cwiseSqrt().asDiagonal() * xi;
          inner.noalias() += mu * eta.transpose();
          noise.noalias() += std::sqrt(p) * inner * psd_sqrt(mom.gg.topLeftCorner(ell, ell));
        }
      }
      Xh.leftCols(ell) -= g * dt * drift;
      if (opts.diffusion && g > 0) Xh.leftCols(ell) += g * std::sqrt(dt / d) * noise;
      ++step;
      if (!Xh.allFinite())
        throw NumericalError(kModule, "HSGD iterate is not finite", step * dt, step);
    }
    const Eigen::MatrixXd X = Xh.leftCols(ell);
    curve.rows.push_back(iterate_observables(X, target_t, model, task));
    if (opts.observer) opts.observer(target_t, X);
  }
  return curve;
}

}  // namespace gmmsgd

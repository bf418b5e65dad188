#include <cmath>

#include "gmmsgd/errors.hpp"
#include "gmmsgd/ode.hpp"

namespace gmmsgd {

namespace {
const char* kModule = "ode-engine";

// E|eps|^2 / 2 with eps ~ N(0, sigma^2 / l* I_l)
double noise_floor(double sigma, int outputs, int classes) {
  return 0.5 * sigma * sigma * outputs / classes;
}
}  // namespace

Eigen::MatrixXd MseOdeState::overlaps() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(classes, outputs);
  for (int rho = 0; rho < d; ++rho)
    for (int i = 0; i < classes; ++i)
      for (int u = 0; u < outputs; ++u) m(i, u) += M(rho, i, u);
  return m / d;
}

Eigen::VectorXd MseOdeState::class_losses(const SpectralMixture& model, double sigma) const {
  const Eigen::MatrixXd m = overlaps();
  Eigen::VectorXd L(classes);
  for (int i = 0; i < classes; ++i) {
    double acc = 0;
    for (int rho = 0; rho < d; ++rho) acc += model.eigvals(i, rho) * D(rho);
    L[i] = acc / (2.0 * d) + 0.5 * m.row(i).squaredNorm() + noise_floor(sigma, outputs, classes);
  }
  return L;
}

LearningCurve integrate_mse(const SpectralMixture& model, const TaskSpec& task,
                            const LearningRateSchedule& gamma,
                            const std::vector<double>& grid,
                            const MseOdeOptions& opts) {
  if (task.loss != LossFamily::Mse) throw InvalidArgument(kModule, "integrate_mse needs an MSE task");
  check_task(model, task);
  const int d = model.d, k = model.num_classes();
  const int ell = static_cast<int>(task.target.cols());
  if (opts.x0.size() != 0 && (opts.x0.rows() != d || opts.x0.cols() != ell))
    throw InvalidArgument(kModule, "x0 must be d x " + std::to_string(ell));

  const int stride = 1 + k * ell;
  FlatState s;
  s.d = d;
  s.stride = stride;
  s.y = Eigen::VectorXd::Zero(static_cast<long>(d) * stride);
  for (int rho = 0; rho < d; ++rho) {
    Eigen::VectorXd delta = -task.target.row(rho).transpose();
    if (opts.x0.size()) delta += opts.x0.row(rho).transpose();
    double* base = s.y.data() + static_cast<long>(rho) * stride;
    base[0] = d * delta.squaredNorm();
    for (int i = 0; i < k; ++i)
      for (int u = 0; u < ell; ++u) base[1 + i * ell + u] = d * model.mean_coords(i, rho) * delta[u];
  }

  Eigen::ArrayXd Lambda = Eigen::ArrayXd::Zero(d);
  for (int i = 0; i < k; ++i) Lambda += model.probs[i] * model.eigvals.row(i).transpose();
  const double lam_max = Lambda.maxCoeff();
  const bool second = opts.solver.second_order;
  const double sigma = task.sigma;

  Eigen::VectorXd srow(ell);
  Rhs rhs = [&](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy, double& rate) {
    const double g = gamma(t);
    MseOdeState st;
    st.t = t;
    st.d = d;
    st.classes = k;
    st.outputs = ell;
    st.y = &y;
    const Eigen::MatrixXd m = st.overlaps();
    const Eigen::VectorXd L = st.class_losses(model, sigma);
    dy.resize(y.size());
    for (int rho = 0; rho < d; ++rho) {
      const double* in = y.data() + static_cast<long>(rho) * stride;
      double* out = dy.data() + static_cast<long>(rho) * stride;
      double cross = 0, noise = 0;
      srow.setZero();
      for (int i = 0; i < k; ++i) {
        const double p = model.probs[i], mc = model.mean_coords(i, rho);
        for (int u = 0; u < ell; ++u) cross += p * in[1 + i * ell + u] * m(i, u);
        srow += p * mc * m.row(i).transpose();
        noise += p * (model.eigvals(i, rho) + mc * mc) * L[i];
      }
      out[0] = -2 * g * Lambda[rho] * in[0] - 2 * g * cross + (second ? 2 * g * g * noise : 0.0);
      for (int j = 0; j < k; ++j) {
        const double mc = model.mean_coords(j, rho);
        for (int u = 0; u < ell; ++u)
          out[1 + j * ell + u] = -g * Lambda[rho] * in[1 + j * ell + u] - g * d * mc * srow[u];
      }
    }
    rate = 2 * g * lam_max;
  };

  LearningCurve curve;
  curve.meta.kind = "ode";
  curve.meta.model_hash = model_hash(model);
  curve.meta.gamma = gamma.describe();
  curve.meta.settings = opts.solver.describe();
  curve.meta.d = d;
  rk4_integrate(s, grid, opts.solver, rhs, [&](const FlatState& fs) {
    MseOdeState st;
    st.t = fs.t;
    st.d = d;
    st.classes = k;
    st.outputs = ell;
    st.y = &fs.y;
    curve.rows.push_back(ode_observables(st, model, task));
    if (opts.observer) opts.observer(st);
  }, kModule);
  return curve;
}

CurveRow ode_observables(const MseOdeState& st, const SpectralMixture& model,
                         const TaskSpec& task) {
  const int d = st.d, k = st.classes;
  CurveRow r;
  r.t = st.t;
  double V = 0;
  for (int rho = 0; rho < d; ++rho) V += st.D(rho);
  r.V = V / d;
  const Eigen::MatrixXd m = st.overlaps();
  const Eigen::VectorXd L = st.class_losses(model, task.sigma);
  double msq = 0;
  for (int i = 0; i < k; ++i) {
    r.loss += model.probs[i] * L[i];
    msq += model.probs[i] * m.row(i).squaredNorm();
    double b = 0;
    for (int rho = 0; rho < d; ++rho) b += model.eigvals(i, rho) * st.D(rho);
    r.B.push_back(b / d);
  }
  r.m = std::sqrt(msq);
  r.align = r.V > 0 ? r.m / std::sqrt(r.V) : 0.0;
  return r;
}

}  // namespace gmmsgd

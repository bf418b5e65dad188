#include <cmath>

#include "gmmsgd/errors.hpp"
#include "gmmsgd/ode.hpp"

namespace gmmsgd {

namespace {

const char* kModule = "ode-engine";

int stride_of(int n, int classes) { return n * n + classes * n; }

}  // namespace

Eigen::Map<const Eigen::MatrixXd> GeneralOdeState::V(int rho) const {
  return {y->data() + static_cast<long>(rho) * stride_of(n, classes), n, n};
}

Eigen::Map<const Eigen::VectorXd> GeneralOdeState::M(int rho, int cls) const {
  return {y->data() + static_cast<long>(rho) * stride_of(n, classes) + n * n + cls * n, n};
}

Eigen::MatrixXd GeneralOdeState::B(const SpectralMixture& model, int cls) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (int rho = 0; rho < d; ++rho) out += model.eigvals(cls, rho) * V(rho);
  return out / d;
}

Eigen::VectorXd GeneralOdeState::m(int cls) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int rho = 0; rho < d; ++rho) out += M(rho, cls);
  return out / d;
}

LearningCurve integrate_general(const SpectralMixture& model, const TaskSpec& task,
                                const MomentOracle& oracle,
                                const LearningRateSchedule& gamma,
                                const std::vector<double>& grid,
                                const GeneralOdeOptions& opts) {
  check_task(model, task);
  const int d = model.d, k = model.num_classes();
  const int n = oracle.dim(), ell = oracle.trainable();
  if (ell != task.width(model))
    throw InvalidArgument(kModule, "oracle width does not match the task");
  if (opts.x0.size() != 0 && (opts.x0.rows() != d || opts.x0.cols() != ell))
    throw InvalidArgument(kModule, "x0 must be d x " + std::to_string(ell));
  if (n != ell && (!task.soft_labels() || n != ell + task.target.cols()))
    throw InvalidArgument(kModule, "oracle width inconsistent with target columns");

  const int stride = stride_of(n, k);
  FlatState s;
  s.d = d;
  s.stride = stride;
  s.y = Eigen::VectorXd::Zero(static_cast<long>(d) * stride);
  {
    Eigen::VectorXd xh(n);
    for (int rho = 0; rho < d; ++rho) {
      xh.setZero();
      if (opts.x0.size()) xh.head(ell) = opts.x0.row(rho).transpose();
      if (n > ell) xh.tail(n - ell) = task.target.row(rho).transpose();
      double* base = s.y.data() + static_cast<long>(rho) * stride;
      Eigen::Map<Eigen::MatrixXd>(base, n, n) = d * xh * xh.transpose();
      for (int j = 0; j < k; ++j)
        Eigen::Map<Eigen::VectorXd>(base + n * n + j * n, n) = d * model.mean_coords(j, rho) * xh;
    }
  }

  const bool second = opts.solver.second_order;
  std::vector<MomentTriple> mom(k);
  Eigen::MatrixXd A(n, n), N(n, n), dV(n, n), cross(n, n);
  Eigen::VectorXd sv(n);

  Rhs rhs = [&](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy, double& rate) {
    const double g = gamma(t);
    GeneralOdeState st;
    st.t = t;
    st.d = d;
    st.n = n;
    st.classes = k;
    st.y = &y;
    for (int i = 0; i < k; ++i) mom[i] = oracle.evaluate(i, st.B(model, i), st.m(i));
    dy.resize(y.size());
    double amax = 0;
    for (int rho = 0; rho < d; ++rho) {
      A.setZero();
      N.setZero();
      sv.setZero();
      cross.setZero();
      for (int i = 0; i < k; ++i) {
        const double p = model.probs[i], lam = model.eigvals(i, rho), mc = model.mean_coords(i, rho);
        A += p * lam * mom[i].g2;
        sv += p * mc * mom[i].g1;
        if (second) N += p * (lam + mc * mc) * mom[i].gg;
        cross += p * mom[i].g1 * st.M(rho, i).transpose();
      }
      const auto V = st.V(rho);
      dV = -g * (A * V + V * A.transpose() + cross + cross.transpose());
      if (second) dV += g * g * N;
      double* out = dy.data() + static_cast<long>(rho) * stride;
      Eigen::Map<Eigen::MatrixXd>(out, n, n) = 0.5 * (dV + dV.transpose());
      for (int j = 0; j < k; ++j) {
        Eigen::Map<Eigen::VectorXd>(out + n * n + j * n, n) =
            -g * (A * st.M(rho, j) + d * model.mean_coords(j, rho) * sv);
      }
      amax = std::max(amax, A.cwiseAbs().rowwise().sum().maxCoeff());
    }
    rate = 2 * g * amax;
  };

  LearningCurve curve;
  curve.meta.kind = "ode";
  curve.meta.model_hash = model_hash(model);
  curve.meta.gamma = gamma.describe();
  curve.meta.settings = opts.solver.describe();
  curve.meta.d = d;
  rk4_integrate(s, grid, opts.solver, rhs, [&](const FlatState& fs) {
    GeneralOdeState st;
    st.t = fs.t;
    st.d = d;
    st.n = n;
    st.classes = k;
    st.y = &fs.y;
    curve.rows.push_back(ode_observables(st, model, task, oracle));
    if (opts.observer) opts.observer(st);
  }, kModule);
  return curve;
}

CurveRow ode_observables(const GeneralOdeState& st, const SpectralMixture& model,
                         const TaskSpec& task, const MomentOracle& oracle) {
  const int d = st.d, k = st.classes, n = st.n, ell = oracle.trainable();
  // P maps the preactivation to the quantity whose norm/overlap is reported:
  // the residual r - r* for soft labels, r itself otherwise.
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(ell, n);
  P.leftCols(ell).setIdentity();
  if (n > ell) P.rightCols(n - ell) = -Eigen::MatrixXd::Identity(ell, n - ell);

  CurveRow r;
  r.t = st.t;
  double V = 0;
  for (int rho = 0; rho < d; ++rho) V += (P * st.V(rho) * P.transpose()).trace();
  r.V = V / d;
  double loss = 0, msq = 0;
  for (int i = 0; i < k; ++i) {
    const Eigen::MatrixXd Bi = st.B(model, i);
    const Eigen::VectorXd mi = st.m(i);
    loss += model.probs[i] * oracle.evaluate(i, Bi, mi).value;
    r.B.push_back((P * Bi * P.transpose()).trace());
    const Eigen::VectorXd pm = P * mi;
    switch (task.loss) {
      case LossFamily::BinaryLogistic:
        if (i == 0) r.m = pm[0];
        break;
      case LossFamily::CrossEntropy:
        r.m += model.probs[i] * pm[i];
        break;
      case LossFamily::Mse:
        msq += model.probs[i] * pm.squaredNorm();
        break;
    }
  }
  if (task.loss == LossFamily::Mse) r.m = std::sqrt(msq);
  r.loss = loss;
  r.align = r.V > 0 ? r.m / std::sqrt(r.V) : 0.0;
  return r;
}

LearningCurve integrate_task(const SpectralMixture& model, const TaskSpec& task,
                             const LearningRateSchedule& gamma,
                             const std::vector<double>& grid,
                             const SolverSettings& solver,
                             const ZeroOnePartition* partition) {
  check_task(model, task);
  if (task.loss == LossFamily::BinaryLogistic && model.is_symmetric_binary()) {
    BinaryOdeOptions o;
    o.solver = solver;
    o.nodes = task.quadrature_nodes;
    if (partition) o.partition = *partition;
    return integrate_binary_logistic(model, gamma, grid, o);
  }
  if (partition) throw InvalidArgument(kModule, "subspace projections need the binary logistic system");
  if (task.loss == LossFamily::Mse) {
    MseOdeOptions o;
    o.solver = solver;
    return integrate_mse(model, task, gamma, grid, o);
  }
  const auto oracle = make_oracle(model, task);
  GeneralOdeOptions o;
  o.solver = solver;
  return integrate_general(model, task, *oracle, gamma, grid, o);
}

}  // namespace gmmsgd

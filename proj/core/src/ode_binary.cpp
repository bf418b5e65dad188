#include <cmath>

#include "gmmsgd/errors.hpp"
#include "gmmsgd/ode.hpp"

namespace gmmsgd {

namespace {

const char* kModule = "ode-engine";

struct Aggregates {
  double m = 0, B1 = 0, B2 = 0, V = 0;
};

Aggregates aggregate(const SpectralMixture& model, const Eigen::VectorXd& y) {
  const int d = model.d;
  Aggregates a;
  for (int rho = 0; rho < d; ++rho) {
    const double v = y[2 * rho];
    a.V += v;
    a.m += y[2 * rho + 1];
    a.B1 += model.eigvals(0, rho) * v;
    a.B2 += model.eigvals(1, rho) * v;
  }
  a.V /= d;
  a.m /= d;
  a.B1 = std::max(a.B1 / d, 0.0);
  a.B2 = std::max(a.B2 / d, 0.0);
  return a;
}

BinaryOdeState unpack(const FlatState& s) {
  BinaryOdeState out;
  out.t = s.t;
  out.V.resize(s.d);
  out.M.resize(s.d);
  for (int rho = 0; rho < s.d; ++rho) {
    out.V[rho] = s.y[2 * rho];
    out.M[rho] = s.y[2 * rho + 1];
  }
  out.omega1 = s.y[2 * s.d];
  return out;
}

}  // namespace

LearningCurve integrate_binary_logistic(const SpectralMixture& model,
                                        const LearningRateSchedule& gamma,
                                        const std::vector<double>& grid,
                                        const BinaryOdeOptions& opts) {
  if (!model.is_symmetric_binary())
    throw InvalidArgument(kModule, "binary logistic system needs two classes with means +mu, -mu");
  const int d = model.d;
  if (opts.x0.size() != 0 && opts.x0.size() != d)
    throw InvalidArgument(kModule, "x0 must have d entries");
  if (opts.partition && static_cast<int>(opts.partition->block_of.size()) != d)
    throw InvalidArgument(kModule, "partition does not match model dimension");

  const double p1 = model.probs[0], p2 = model.probs[1];
  Eigen::ArrayXd mu_sq(d);
  for (int rho = 0; rho < d; ++rho) mu_sq[rho] = model.mean_sq(0, rho);

  FlatState s;
  s.d = d;
  s.stride = 2;
  s.y = Eigen::VectorXd::Zero(2 * d + 1);
  if (opts.x0.size() == d) {
    for (int rho = 0; rho < d; ++rho) {
      const double x = opts.x0[rho];
      s.y[2 * rho] = d * x * x;
      s.y[2 * rho + 1] = d * x * model.mean_coords(0, rho);
    }
  }

  const bool second = opts.solver.second_order;
  const int nodes = opts.nodes;
  Rhs rhs = [&](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy, double& rate) {
    const double g = gamma(t);
    const Aggregates a = aggregate(model, y);
    const LogisticMoments c1 = logistic_moments(a.m, a.B1, nodes);
    const LogisticMoments c2 = logistic_moments(a.m, a.B2, nodes);
    const double q1 = p1 * (c1.W1 - c1.W2), q2 = p2 * (c2.W1 - c2.W2);
    const double src = p1 * c1.W1 + p2 * c2.W1;
    const double n1 = second ? g * g * p1 * c1.W2 : 0.0;
    const double n2 = second ? g * g * p2 * c2.W2 : 0.0;
    dy.resize(y.size());
    double cmax = 0;
    for (int rho = 0; rho < d; ++rho) {
      const double l1 = model.eigvals(0, rho), l2 = model.eigvals(1, rho);
      const double c = q1 * l1 + q2 * l2;
      const double v = y[2 * rho], mr = y[2 * rho + 1];
      dy[2 * rho] = -2 * g * c * v + 2 * g * mr * src + n1 * (l1 + mu_sq[rho]) +
                    n2 * (l2 + mu_sq[rho]);
      dy[2 * rho + 1] = -g * c * mr + g * d * mu_sq[rho] * src;
      cmax = std::max(cmax, c);
    }
    dy[2 * d] = src;
    rate = 2 * g * cmax;
  };

  LearningCurve curve;
  curve.meta.kind = "ode";
  curve.meta.model_hash = model_hash(model);
  curve.meta.gamma = gamma.describe();
  curve.meta.settings = opts.solver.describe();
  curve.meta.d = d;
  const ZeroOnePartition* part = opts.partition ? &*opts.partition : nullptr;
  rk4_integrate(s, grid, opts.solver, rhs, [&](const FlatState& fs) {
    const BinaryOdeState st = unpack(fs);
    curve.rows.push_back(ode_observables(st, model, part, nodes));
    if (opts.observer) opts.observer(st);
  }, kModule);
  return curve;
}

CurveRow ode_observables(const BinaryOdeState& st, const SpectralMixture& model,
                         const ZeroOnePartition* partition, int nodes) {
  const int d = model.d;
  CurveRow r;
  r.t = st.t;
  r.m = st.M.sum() / d;
  r.V = st.V.sum() / d;
  double b1 = 0, b2 = 0;
  for (int rho = 0; rho < d; ++rho) {
    b1 += model.eigvals(0, rho) * st.V[rho];
    b2 += model.eigvals(1, rho) * st.V[rho];
  }
  b1 = std::max(b1 / d, 0.0);
  b2 = std::max(b2 / d, 0.0);
  r.B = {b1, b2};
  r.loss = binary_logistic_risk(r.m, b1, b2, model.probs[0], nodes);
  r.align = r.V > 0 ? r.m / std::sqrt(r.V) : 0.0;
  if (partition) {
    std::array<double, 4> mb{}, vb{};
    for (int b = 0; b < 4; ++b) {
      for (int rho : partition->blocks[b]) {
        mb[b] += st.M[rho];
        vb[b] += st.V[rho];
      }
      mb[b] /= d;
      vb[b] /= d;
    }
    r.m_block = mb;
    r.v_block = vb;
  }
  return r;
}

}  // namespace gmmsgd

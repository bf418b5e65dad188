#include "gmmsgd/moments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>

#include "gmmsgd/errors.hpp"
#include "gmmsgd/quadrature.hpp"

namespace gmmsgd {

namespace {

const char* kModule = "moment-oracle";

void check_finite(double m, double B) {
  if (!std::isfinite(m) || !std::isfinite(B))
    throw InvalidArgument(kModule, "non-finite moment inputs");
  if (B < 0) throw InvalidArgument(kModule, "variance B must be >= 0");
}

struct ScratchRule {
  std::vector<double> x, w;
};

ScratchRule& scratch() {
  thread_local ScratchRule s;
  return s;
}

}  // namespace

double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double logistic_weight(double x) {
  if (x > 0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

LogisticMoments logistic_moments(double m, double B, int nodes) {
  check_finite(m, B);
  if (B == 0) {
    const double w = logistic_weight(m);
    return {w, w * w};
  }
  auto& s = scratch();
  logit_rule(m, B, nodes, s.x, s.w);
  double w1 = 0, w2 = 0;
  for (std::size_t k = 0; k < s.x.size(); ++k) {
    const double v = logistic_weight(s.x[k]);
    w1 += s.w[k] * v;
    w2 += s.w[k] * v * v;
  }
  return {w1, w2};
}

double expected_softplus(double c, double B, int nodes) {
  check_finite(c, B);
  if (B == 0) return softplus(c);
  auto& s = scratch();
  logit_rule(c, B, nodes, s.x, s.w);
  double acc = 0;
  for (std::size_t k = 0; k < s.x.size(); ++k) acc += s.w[k] * softplus(s.x[k]);
  return acc;
}

Interval w12_bounds(double m, double B) {
  auto pos = [B](double mm) {
    const double lo = 1.0 / (1.0 + std::exp(mm));
    const double hi = std::min(0.5, 2.0 / (3.0 + std::exp(mm - 0.5 * B)));
    return Interval{lo, hi};
  };
  if (m >= 0) return pos(m);
  const Interval r = pos(-m);
  return {1.0 - r.hi, 1.0 - r.lo};
}

double binary_logistic_risk(double m, double B1, double B2, double p1, int nodes) {
  return p1 * expected_softplus(-m, B1, nodes) +
         (1.0 - p1) * expected_softplus(-m, B2, nodes);
}

MomentTriple BinaryLogisticOracle::evaluate(int cls, const Eigen::MatrixXd& B,
                                            const Eigen::VectorXd& m) const {
  if (B.rows() != 1 || B.cols() != 1 || m.size() != 1)
    throw InvalidArgument(kModule, "binary logistic oracle expects scalar B, m");
  if (cls != 0 && cls != 1)
    throw InvalidArgument(kModule, "binary logistic oracle has two classes");
  const double b = std::max(B(0, 0), 0.0);
  MomentTriple out;
  out.g1.resize(1);
  out.g2.resize(1, 1);
  out.gg.resize(1, 1);
  if (cls == 0) {
    const LogisticMoments lm = logistic_moments(m[0], b, nodes_);
    out.g1[0] = -lm.W1;
    out.g2(0, 0) = lm.W1 - lm.W2;
    out.gg(0, 0) = lm.W2;
    out.value = expected_softplus(-m[0], b, nodes_);
  } else {
    const LogisticMoments lm = logistic_moments(-m[0], b, nodes_);
    out.g1[0] = lm.W1;
    out.g2(0, 0) = lm.W1 - lm.W2;
    out.gg(0, 0) = lm.W2;
    out.value = expected_softplus(m[0], b, nodes_);
  }
  return out;
}

Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& B, double tol) {
  const Eigen::MatrixXd S = 0.5 * (B + B.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  std::vector<int> keep;
  for (int k = 0; k < ev.size(); ++k) {
    if (ev[k] < -tol * scale)
      throw InvalidArgument(kModule, "B is not positive semidefinite (eigenvalue " +
                                         std::to_string(ev[k]) + ")");
    if (ev[k] > 1e-14 * scale) keep.push_back(k);
  }
  Eigen::MatrixXd Q(B.rows(), static_cast<int>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j)
    Q.col(j) = es.eigenvectors().col(keep[j]) * std::sqrt(ev[keep[j]]);
  return Q;
}

namespace {

struct SoftmaxAccumulator {
  explicit SoftmaxAccumulator(int n, int cls) : cls(cls) {
    g1 = Eigen::VectorXd::Zero(n);
    g2 = Eigen::MatrixXd::Zero(n, n);
    gg = Eigen::MatrixXd::Zero(n, n);
    w.resize(n);
  }

  void add(const Eigen::VectorXd& theta, double weight) {
    const double mx = theta.maxCoeff();
    w = (theta.array() - mx).exp();
    const double z = w.sum();
    w /= z;
    const double lse = mx + std::log(z);
    value += weight * (lse - theta[cls]);
    Eigen::VectorXd r = w;
    r[cls] -= 1.0;
    g1.noalias() += weight * r;
    g2.noalias() -= weight * w * w.transpose();
    g2.diagonal().noalias() += weight * w;
    gg.noalias() += weight * r * r.transpose();
  }

  int cls;
  Eigen::VectorXd g1, w;
  Eigen::MatrixXd g2, gg;
  double value = 0;
};

}  // namespace

MomentTriple cross_entropy_moments(const Eigen::MatrixXd& B,
                                   const Eigen::VectorXd& m, int cls,
                                   const SoftmaxQuadrature& q) {
  const int n = static_cast<int>(m.size());
  if (B.rows() != n || B.cols() != n)
    throw InvalidArgument(kModule, "B and m dimensions disagree");
  if (cls < 0 || cls >= n) throw InvalidArgument(kModule, "class index out of range");
  if (!B.allFinite() || !m.allFinite())
    throw InvalidArgument(kModule, "non-finite moment inputs");

  const Eigen::MatrixXd Q = psd_factor(B);
  const int k = static_cast<int>(Q.cols());
  SoftmaxAccumulator acc(n, cls);
  Eigen::VectorXd theta(n);

  if (k == 0) {
    acc.add(m, 1.0);
  } else if (k == 1) {
    // composite Gauss-Legendre on [-9, 9]; robust for large variance
    const QuadRule& gl = legendre(12);
    const int panels = 36;
    const double width = 18.0 / panels;
    const double c = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    for (int p = 0; p < panels; ++p) {
      const double mid = -9.0 + (p + 0.5) * width;
      for (std::size_t j = 0; j < gl.size(); ++j) {
        const double z = mid + 0.5 * width * gl.x[j];
        const double wt = 0.5 * width * gl.w[j] * c * std::exp(-0.5 * z * z);
        theta = m + Q.col(0) * z;
        acc.add(theta, wt);
      }
    }
  } else if (k <= 3) {
    const int nd = q.nodes_per_dim > 0 ? q.nodes_per_dim : (k == 2 ? 40 : 24);
    const QuadRule& gh = hermite_normal(nd);
    std::vector<int> idx(k, 0);
    Eigen::VectorXd z(k);
    while (true) {
      double wt = 1.0;
      for (int a = 0; a < k; ++a) {
        z[a] = gh.x[idx[a]];
        wt *= gh.w[idx[a]];
      }
      theta.noalias() = m + Q * z;
      acc.add(theta, wt);
      int a = 0;
      while (a < k && ++idx[a] == nd) idx[a++] = 0;
      if (a == k) break;
    }
  } else {
    if (q.mc_samples <= 0) throw InvalidArgument(kModule, "mc_samples must be positive");
    std::mt19937_64 rng(q.mc_seed);
    std::normal_distribution<double> normal;
    Eigen::VectorXd z(k);
    const double wt = 1.0 / static_cast<double>(q.mc_samples);
    for (long s = 0; s < q.mc_samples; ++s) {
      for (int a = 0; a < k; ++a) z[a] = normal(rng);
      theta.noalias() = m + Q * z;
      acc.add(theta, wt);
    }
  }

  MomentTriple out;
  out.g1 = acc.g1;
  out.g2 = 0.5 * (acc.g2 + acc.g2.transpose());
  out.gg = 0.5 * (acc.gg + acc.gg.transpose());
  out.value = acc.value;
  return out;
}

MomentTriple CrossEntropyOracle::evaluate(int cls, const Eigen::MatrixXd& B,
                                          const Eigen::VectorXd& m) const {
  return cross_entropy_moments(B, m, cls, q_);
}

}  // namespace gmmsgd

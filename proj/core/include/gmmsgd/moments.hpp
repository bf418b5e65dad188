#pragma once

#include <cstdint>
#include <memory>

#include <Eigen/Core>

namespace gmmsgd {

/// W1 = E[w], W2 = E[w^2] with w = 1 / (1 + exp(m + sqrt(B) z)).
struct LogisticMoments {
  double W1 = 0;
  double W2 = 0;
};

inline constexpr int kDefaultNodes = 80;

LogisticMoments logistic_moments(double m, double B, int nodes = kDefaultNodes);

/// E[log(1 + exp(c + sqrt(B) z))].
double expected_softplus(double c, double B, int nodes = kDefaultNodes);

/// Numerically safe log(1 + e^x).
double softplus(double x);
/// 1 / (1 + e^x).
double logistic_weight(double x);

struct Interval {
  double lo = 0;
  double hi = 0;
  bool contains(double v, double slack = 0) const {
    return v >= lo - slack && v <= hi + slack;
  }
};

/// Analytic bracket for W1(m, B).
Interval w12_bounds(double m, double B);

/// Population risk of symmetric binary logistic regression at overlap m and
/// class variances B1, B2: p1 E[softplus(-m + sqrt(B1) z)] + p2 (same, B2).
double binary_logistic_risk(double m, double B1, double B2, double p1,
                            int nodes = kDefaultNodes);

/// Gaussian expectations of gradient, gradient Jacobian and gradient outer
/// product of one class loss, plus the expected loss itself.
///
/// g2 is the Jacobian of grad_x f with respect to the full preactivation
/// vector; for hard labels this is the (symmetric) Hessian, for soft labels
/// its rows belonging to the target columns are zero.
struct MomentTriple {
  Eigen::VectorXd g1;
  Eigen::MatrixXd g2;
  Eigen::MatrixXd gg;
  double value = 0;
};

/// Monte Carlo/quadrature controls for the softmax family.
struct SoftmaxQuadrature {
  int nodes_per_dim = 0;          // 0 picks 80 / 40 / 24 for 1 / 2 / 3 active dims
  long mc_samples = 200000;       // used when more than 3 dims are active
  std::uint64_t mc_seed = 20240917;
};

/// Cross-entropy moments for label `cls` at theta = m + sqrt(B) z.
MomentTriple cross_entropy_moments(const Eigen::MatrixXd& B,
                                   const Eigen::VectorXd& m, int cls,
                                   const SoftmaxQuadrature& q = {});

/// Per-class moment provider used by the general ODE and by HSGD.
class MomentOracle {
 public:
  virtual ~MomentOracle() = default;
  /// Width of the preactivation vector (trainable plus target columns).
  virtual int dim() const = 0;
  /// Number of trainable columns; the first `trainable()` entries of theta.
  virtual int trainable() const { return dim(); }
  virtual MomentTriple evaluate(int cls, const Eigen::MatrixXd& B,
                                const Eigen::VectorXd& m) const = 0;
};

/// Binary logistic regression, one output. Class 0 has label 1 (loss
/// softplus(-r)), class 1 has label 0 (loss softplus(r)).
class BinaryLogisticOracle final : public MomentOracle {
 public:
  explicit BinaryLogisticOracle(int nodes = kDefaultNodes) : nodes_(nodes) {}
  int dim() const override { return 1; }
  MomentTriple evaluate(int cls, const Eigen::MatrixXd& B,
                        const Eigen::VectorXd& m) const override;

 private:
  int nodes_;
};

/// Softmax cross-entropy with one output per class.
class CrossEntropyOracle final : public MomentOracle {
 public:
  CrossEntropyOracle(int classes, SoftmaxQuadrature q = {})
      : classes_(classes), q_(q) {}
  int dim() const override { return classes_; }
  MomentTriple evaluate(int cls, const Eigen::MatrixXd& B,
                        const Eigen::VectorXd& m) const override;

 private:
  int classes_;
  SoftmaxQuadrature q_;
};

/// Project B onto the PSD cone: eigenvalues in [-tol, 0) are clipped to
/// zero, anything more negative throws. Returns a factor Q with B = Q Q^T
/// keeping only columns with positive eigenvalue.
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& B, double tol = 1e-8);

}  // namespace gmmsgd

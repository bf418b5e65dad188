#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include <Eigen/Core>

#include "gmmsgd/moments.hpp"
#include "gmmsgd/spectral_model.hpp"

namespace gmmsgd {

enum class LossFamily { BinaryLogistic, CrossEntropy, Mse };

std::string to_string(LossFamily f);
LossFamily loss_family_from_string(const std::string& s);

/// Loss family and label mode. Binary logistic and cross-entropy use hard
/// labels; MSE uses soft labels y = X*^T a + eps with eps ~ N(0, sigma^2/l* I).
struct TaskSpec {
  LossFamily loss = LossFamily::BinaryLogistic;
  double sigma = 0;
  Eigen::MatrixXd target;  // d x l, eigencoordinates of X* (MSE only)
  int quadrature_nodes = kDefaultNodes;
  SoftmaxQuadrature softmax{};

  /// Number of trainable columns of X.
  int width(const SpectralMixture& model) const;
  bool soft_labels() const { return loss == LossFamily::Mse; }
};

/// MSE task with X* entries drawn i.i.d. N(0, 1/(d l*)) from `seed`.
TaskSpec make_mse_task(const SpectralMixture& model, int outputs, double sigma,
                       std::uint64_t seed);

/// Throws InvalidArgument if the task does not fit the model.
void check_task(const SpectralMixture& model, const TaskSpec& task);

/// Closed-form moments of the squared loss 0.5 |r - r* - eps|^2 as a function
/// of the stacked preactivation (r, r*) of width 2l.
class SoftMseOracle final : public MomentOracle {
 public:
  SoftMseOracle(int outputs, int classes, double sigma)
      : outputs_(outputs), classes_(classes), sigma_(sigma) {}
  int dim() const override { return 2 * outputs_; }
  int trainable() const override { return outputs_; }
  MomentTriple evaluate(int cls, const Eigen::MatrixXd& B,
                        const Eigen::VectorXd& m) const override;

 private:
  int outputs_;
  int classes_;
  double sigma_;
};

std::unique_ptr<MomentOracle> make_oracle(const SpectralMixture& model,
                                          const TaskSpec& task);

/// Population risk sum_i p_i E f_i at the given per-class (B_i, m_i), where
/// B_i and m_i cover the full preactivation (trainable plus target columns).
double population_risk(const MomentOracle& oracle, const SpectralMixture& model,
                       const std::vector<Eigen::MatrixXd>& B,
                       const std::vector<Eigen::VectorXd>& m);

}  // namespace gmmsgd

#include "gmmsgd/task.hpp"

#include <cmath>
#include <random>

#include "gmmsgd/errors.hpp"

namespace gmmsgd {

namespace {
const char* kModule = "task";
}

std::string to_string(LossFamily f) {
  switch (f) {
    case LossFamily::BinaryLogistic: return "logistic";
    case LossFamily::CrossEntropy: return "cross_entropy";
    case LossFamily::Mse: return "mse";
  }
  return "unknown";
}

LossFamily loss_family_from_string(const std::string& s) {
  if (s == "logistic") return LossFamily::BinaryLogistic;
  if (s == "cross_entropy") return LossFamily::CrossEntropy;
  if (s == "mse") return LossFamily::Mse;
  throw InvalidArgument(kModule, "unknown loss '" + s + "'");
}

int TaskSpec::width(const SpectralMixture& model) const {
  switch (loss) {
    case LossFamily::BinaryLogistic: return 1;
    case LossFamily::CrossEntropy: return model.num_classes();
    case LossFamily::Mse: return static_cast<int>(target.cols());
  }
  return 0;
}

void check_task(const SpectralMixture& model, const TaskSpec& task) {
  switch (task.loss) {
    case LossFamily::BinaryLogistic:
      if (model.num_classes() != 2)
        throw InvalidArgument(kModule, "binary logistic needs exactly two classes");
      break;
    case LossFamily::CrossEntropy:
      if (model.num_classes() < 2)
        throw InvalidArgument(kModule, "cross-entropy needs at least two classes");
      break;
    case LossFamily::Mse:
      if (task.target.rows() != model.d || task.target.cols() < 1)
        throw InvalidArgument(kModule, "target X* must be d x l with l >= 1 (got " +
                                           std::to_string(task.target.rows()) + " x " +
                                           std::to_string(task.target.cols()) + ")");
      if (task.sigma < 0) throw InvalidArgument(kModule, "sigma must be >= 0");
      break;
  }
}

TaskSpec make_mse_task(const SpectralMixture& model, int outputs, double sigma,
                       std::uint64_t seed) {
  if (outputs < 1) throw InvalidArgument(kModule, "MSE task needs at least one output");
  TaskSpec t;
  t.loss = LossFamily::Mse;
  t.sigma = sigma;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0x7a49u};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(
      0.0, 1.0 / std::sqrt(static_cast<double>(model.d) * model.num_classes()));
  t.target.resize(model.d, outputs);
  for (int u = 0; u < outputs; ++u)
    for (int rho = 0; rho < model.d; ++rho) t.target(rho, u) = normal(rng);
  return t;
}

MomentTriple SoftMseOracle::evaluate(int /*cls*/, const Eigen::MatrixXd& B,
                                     const Eigen::VectorXd& m) const {
  const int l = outputs_;
  if (B.rows() != 2 * l || B.cols() != 2 * l || m.size() != 2 * l)
    throw InvalidArgument(kModule, "soft MSE oracle expects width 2l");
  // residual r - r* = P theta with P = [I, -I]
  Eigen::MatrixXd P(l, 2 * l);
  P << Eigen::MatrixXd::Identity(l, l), -Eigen::MatrixXd::Identity(l, l);
  const Eigen::VectorXd pm = P * m;
  MomentTriple out;
  out.g1 = Eigen::VectorXd::Zero(2 * l);
  out.g1.head(l) = pm;
  out.g2 = Eigen::MatrixXd::Zero(2 * l, 2 * l);
  out.g2.topRows(l) = P;
  out.gg = Eigen::MatrixXd::Zero(2 * l, 2 * l);
  out.gg.topLeftCorner(l, l) = P * B * P.transpose() + pm * pm.transpose();
  out.gg.topLeftCorner(l, l).diagonal().array() += sigma_ * sigma_ / classes_;
  out.value = 0.5 * out.gg.topLeftCorner(l, l).trace();
  return out;
}

std::unique_ptr<MomentOracle> make_oracle(const SpectralMixture& model,
                                          const TaskSpec& task) {
  check_task(model, task);
  switch (task.loss) {
    case LossFamily::BinaryLogistic:
      return std::make_unique<BinaryLogisticOracle>(task.quadrature_nodes);
    case LossFamily::CrossEntropy:
      return std::make_unique<CrossEntropyOracle>(model.num_classes(), task.softmax);
    case LossFamily::Mse:
      return std::make_unique<SoftMseOracle>(static_cast<int>(task.target.cols()),
                                             model.num_classes(), task.sigma);
  }
  throw InvalidArgument(kModule, "unhandled loss family");
}

double population_risk(const MomentOracle& oracle, const SpectralMixture& model,
                       const std::vector<Eigen::MatrixXd>& B,
                       const std::vector<Eigen::VectorXd>& m) {
  double L = 0;
  for (int i = 0; i < model.num_classes(); ++i)
    L += model.probs[i] * oracle.evaluate(i, B[i], m[i]).value;
  return L;
}

}  // namespace gmmsgd

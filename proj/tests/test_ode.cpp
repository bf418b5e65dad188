#include <gtest/gtest.h>

#include <cmath>

#include "gmmsgd/errors.hpp"
#include "gmmsgd/ode.hpp"

using namespace gmmsgd;

namespace {

SpectralMixture single_class_identity(int d) {
  SpectralMixture m;
  m.d = d;
  m.probs = Eigen::ArrayXd::Ones(1);
  m.eigvals = ClassModeArray::Ones(1, d);
  m.mean_coords = ClassModeArray::Zero(1, d);
  return m;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST(BinaryOde, ZeroRateFreezesState) {
  const auto model = build_power_law(50, {1.0, 1.0}, 0.0, 1.0);
  BinaryOdeOptions o;
  o.x0 = Eigen::VectorXd::LinSpaced(50, -0.1, 0.2);
  std::vector<BinaryOdeState> seen;
  o.observer = [&](const BinaryOdeState& s) { seen.push_back(s); };
  integrate_binary_logistic(model, 0.0, linear_grid(5, 1), o);
  ASSERT_EQ(seen.size(), 6u);
  for (const auto& s : seen) {
    EXPECT_EQ((s.V - seen[0].V).abs().maxCoeff(), 0);
    EXPECT_EQ((s.M - seen[0].M).abs().maxCoeff(), 0);
  }
}

TEST(BinaryOde, OriginObservables) {
  const auto model = build_identity(100, 1.0);
  const auto c = integrate_binary_logistic(model, 0.5, {0, 1});
  EXPECT_NEAR(c.rows[0].loss, std::log(2.0), 1e-15);
  EXPECT_EQ(c.rows[0].m, 0);
  EXPECT_EQ(c.rows[0].V, 0);
  EXPECT_EQ(c.rows[0].align, 0);
  EXPECT_EQ(c.meta.kind, "ode");
  EXPECT_FALSE(c.meta.seed.has_value());
}

TEST(BinaryOde, IdentityOverlapMonotone) {
  const auto model = build_identity(200, 1.0);
  const auto c = integrate_binary_logistic(model, 0.5, log_grid(0.01, 1000, 16));
  for (std::size_t j = 1; j < c.size(); ++j) EXPECT_GE(c.rows[j].m, c.rows[j - 1].m - 1e-14);
  EXPECT_LT(c.rows.back().loss, std::log(2.0));
}

TEST(BinaryOde, PerModeBounds) {
  const int d = 300;
  const double gamma = 0.7;
  const auto model = build_power_law(d, {1.0, 1.0}, 0.5, 1.0);
  BinaryOdeOptions o;
  int checked = 0;
  o.observer = [&](const BinaryOdeState& s) {
    for (int r = 0; r < d; ++r) {
      const double mt = model.mean_sq(0, r), lam = model.eigvals(0, r);
      EXPECT_GE(s.V[r], -1e-10);
      EXPECT_GE(s.M[r], 0);
      EXPECT_LE(s.M[r] * s.M[r], mt * d * s.V[r] + 1e-8 * (1 + s.V[r]));
      const double lower = mt * d / lam * (1 - std::exp(-gamma * lam * s.omega1));
      EXPECT_GE(s.M[r], lower - 1e-10 * (1 + lower));
    }
    ++checked;
  };
  integrate_binary_logistic(model, gamma, log_grid(0.01, 100, 8), o);
  EXPECT_GT(checked, 10);
}

TEST(BinaryOde, StepRefinement) {
  const auto model = build_power_law(100, {1.0, 1.0}, 0.0, 1.0);
  const auto grid = linear_grid(10, 1);
  BinaryOdeOptions a, b;
  b.solver.step = 0.005;
  const auto ca = integrate_binary_logistic(model, 0.9, grid, a);
  const auto cb = integrate_binary_logistic(model, 0.9, grid, b);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    EXPECT_LT(rel(ca.rows[j].loss, cb.rows[j].loss), 1e-6);
    EXPECT_LT(rel(ca.rows[j].m, cb.rows[j].m), 1e-6);
    EXPECT_LT(rel(ca.rows[j].V, cb.rows[j].V), 1e-6);
  }
}

TEST(BinaryOde, ZeroOneSingleBlockSupport) {
  const auto z = build_zero_one(40, {0.25, 0.25, 0.25, 0.25}, {1, 0, 0, 0}, 4);
  BinaryOdeOptions o;
  o.partition = z.partition;
  const auto c = integrate_binary_logistic(z.model, 0.9, log_grid(0.1, 50, 8), o);
  for (const auto& r : c.rows) {
    ASSERT_TRUE(r.m_block.has_value());
    EXPECT_NEAR(r.m, (*r.m_block)[0], 1e-14 * (1 + std::abs(r.m)));
  }
}

TEST(BinaryOde, BlocksSumToTotals) {
  const std::array<double, 4> q{0.25, 0.25, 0.25, 0.25};
  const auto z = build_zero_one(40, q, q, 4);
  const auto c = integrate_task(z.model, TaskSpec{}, 0.9, log_grid(0.1, 50, 8), {}, &z.partition);
  for (const auto& r : c.rows) {
    double ms = 0, vs = 0;
    for (int b = 0; b < 4; ++b) {
      ms += (*r.m_block)[b];
      vs += (*r.v_block)[b];
    }
    EXPECT_NEAR(ms, r.m, 1e-13 * (1 + r.m));
    EXPECT_NEAR(vs, r.V, 1e-13 * (1 + r.V));
  }
}

TEST(BinaryOde, RejectsAsymmetricModel) {
  const auto m = build_multiclass_power_law(20, 2, 1.0, 1.0, 3, false);
  EXPECT_THROW(integrate_binary_logistic(m, 0.5, {0, 1}), InvalidArgument);
}

// Two-class softmax at rate gamma/2 from X = 0 is binary logistic at rate
// gamma in the difference coordinate w = x_0 - x_1.
TEST(GeneralOde, TwoClassCrossEntropyMatchesBinary) {
  const int d = 120;
  const double gamma = 0.8;
  const auto model = build_power_law(d, {1.0, 1.0}, 0.0, 1.0);
  const auto grid = linear_grid(10, 0.5);
  const auto bin = integrate_binary_logistic(model, gamma, grid);

  TaskSpec task;
  task.loss = LossFamily::CrossEntropy;
  const CrossEntropyOracle oracle(2);
  std::vector<double> ms, vs;
  GeneralOdeOptions o;
  o.observer = [&](const GeneralOdeState& s) {
    double m = 0, v = 0;
    for (int r = 0; r < d; ++r) {
      m += s.M(r, 0)[0] - s.M(r, 0)[1];
      const auto V = s.V(r);
      v += V(0, 0) - 2 * V(0, 1) + V(1, 1);
    }
    ms.push_back(m / d);
    vs.push_back(v / d);
  };
  const auto ce = integrate_general(model, task, oracle, gamma / 2, grid, o);
  ASSERT_EQ(ce.size(), bin.size());
  double err_l = 0, err_m = 0, err_v = 0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    err_l = std::max(err_l, std::abs(ce.rows[j].loss - bin.rows[j].loss));
    err_m = std::max(err_m, std::abs(ms[j] - bin.rows[j].m));
    err_v = std::max(err_v, std::abs(vs[j] - bin.rows[j].V));
  }
  EXPECT_LT(err_l, 1e-4);
  EXPECT_LT(err_m, 1e-4);
  EXPECT_LT(err_v, 1e-4);
}

TEST(GeneralOde, ZeroMeansGiveZeroOverlap) {
  const int d = 30;
  const auto model = build_multiclass_power_law(d, 3, 1.0, 0.0, 1, false);
  TaskSpec task;
  task.loss = LossFamily::CrossEntropy;
  const CrossEntropyOracle oracle(3);
  GeneralOdeOptions o;
  o.observer = [&](const GeneralOdeState& s) {
    for (int r = 0; r < d; ++r)
      for (int i = 0; i < 3; ++i) EXPECT_EQ(s.M(r, i).norm(), 0);
  };
  const auto c = integrate_general(model, task, oracle, 0.5, linear_grid(2, 0.5), o);
  // the overlap never moves but noise grows V, and by Jensen the risk can only rise
  EXPECT_NEAR(c.rows.front().loss, std::log(3.0), 1e-12);
  EXPECT_GT(c.rows.back().loss, std::log(3.0));
}

TEST(GeneralOde, VStaysSymmetric) {
  const int d = 20;
  const auto model = build_multiclass_power_law(d, 3, 1.0, 1.0, 2, true);
  TaskSpec task;
  task.loss = LossFamily::CrossEntropy;
  const CrossEntropyOracle oracle(3);
  GeneralOdeOptions o;
  o.observer = [&](const GeneralOdeState& s) {
    for (int r = 0; r < d; ++r) {
      const Eigen::MatrixXd V = s.V(r);
      EXPECT_LT((V - V.transpose()).norm(), 1e-12);
    }
  };
  integrate_general(model, task, oracle, 0.5, linear_grid(1, 0.25), o);
}

TEST(GeneralOde, SingleClassMseMatchesReducedSystem) {
  const auto model = build_power_law(80, {1.0}, 0.0, 1.0);
  const auto task = make_mse_task(model, 1, 0.2, 5);
  const auto grid = linear_grid(10, 0.5);
  const SoftMseOracle oracle(1, 1, task.sigma);
  const auto gen = integrate_general(model, task, oracle, 0.7, grid);
  const auto red = integrate_mse(model, task, 0.7, grid);
  for (const auto& [col, v] : compare(gen, red, Metric::Sup)) EXPECT_LT(v, 1e-8) << col;
}

TEST(MseOde, ScalarDecayIsExact) {
  const int d = 50;
  const auto model = single_class_identity(d);
  const auto task = make_mse_task(model, 1, 0.0, 3);
  const double D0 = task.target.squaredNorm();
  for (double gamma : {0.3, 0.9, 1.5}) {
    const auto c = integrate_mse(model, task, gamma, linear_grid(10, 0.5));
    for (const auto& r : c.rows) {
      const double want = D0 * std::exp(-gamma * (2 - gamma) * r.t);
      EXPECT_LT(std::abs(r.V - want) / want, 1e-8) << gamma << " t=" << r.t;
    }
  }
}

TEST(MseOde, ZeroRateKeepsDistance) {
  const auto model = single_class_identity(10);
  const auto task = make_mse_task(model, 1, 0.0, 3);
  const auto c = integrate_mse(model, task, 0.0, {0, 5});
  EXPECT_EQ(c.rows[0].V, c.rows[1].V);
}

TEST(MseOde, StabilityAroundThreshold) {
  const auto model = single_class_identity(20);
  const auto task = make_mse_task(model, 1, 0.0, 3);
  const auto below = integrate_mse(model, task, 0.9, linear_grid(10, 0.5));
  for (std::size_t j = 1; j < below.size(); ++j) EXPECT_LE(below.rows[j].V, below.rows[j - 1].V);
  const auto above = integrate_mse(model, task, LearningRateSchedule(2.1, 3.0), linear_grid(10, 0.5));
  for (std::size_t j = 1; j < above.size(); ++j) EXPECT_GT(above.rows[j].V, above.rows[j - 1].V);
}

TEST(MseOde, MulticlassLossNonincreasingBelowThreshold) {
  const auto model = build_multiclass_power_law(200, 10, 1.3, 1.0, 7, true);
  const auto task = make_mse_task(model, 10, 0.0, 8);
  const auto c = integrate_mse(model, task, 0.5, log_grid(0.01, 100, 8));
  for (std::size_t j = 1; j < c.size(); ++j) EXPECT_LE(c.rows[j].loss, c.rows[j - 1].loss + 1e-15);
}

TEST(Rk4, NonFiniteStateNamesTimeAndMode) {
  FlatState s{0, 4, 1, Eigen::VectorXd::Zero(4)};
  const Rhs rhs = [](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy, double& rate) {
    dy = Eigen::VectorXd::Zero(y.size());
    if (t > 0.5) dy[2] = NAN;
    rate = 0;
  };
  try {
    rk4_integrate(s, {0, 1}, {}, rhs, [](const FlatState&) {}, "ode-engine");
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.index(), 2);
    EXPECT_GT(e.time(), 0.5);
    EXPECT_NE(std::string(e.what()).find("[ode-engine]"), std::string::npos);
  }
}

TEST(Rk4, LandsOnGridAndRespectsStiffnessCap) {
  // dy = -k y with k = 50: h = 0.01 alone would give h k = 0.5, so only the
  // cap with max_stiffness = 0.1 keeps h <= 0.002
  FlatState s{0, 1, 1, Eigen::VectorXd::Ones(1)};
  int evals = 0;
  const Rhs rhs = [&](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy, double& rate) {
    dy = -50 * y;
    rate = 50;
    ++evals;
  };
  SolverSettings set;
  set.max_stiffness = 0.1;
  std::vector<double> seen;
  rk4_integrate(s, {0, 0.1, 0.25}, set, rhs, [&](const FlatState& st) { seen.push_back(st.t); }, "ode-engine");
  EXPECT_EQ(seen, (std::vector<double>{0, 0.1, 0.25}));
  EXPECT_GE(evals, 4 * 125);
  EXPECT_NEAR(s.y[0], std::exp(-12.5), 1e-9);
}

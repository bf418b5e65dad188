#include <gtest/gtest.h>

#include <cmath>

#include "gmmsgd/errors.hpp"
#include "gmmsgd/sgd.hpp"

using namespace gmmsgd;

TEST(SamplePoint, ZeroVarianceIsMean) {
  auto model = build_identity(6, 1.0);
  model.eigvals.setZero();
  Rng rng = make_rng(1, 2);
  for (int cls : {0, 1}) {
    const auto p = sample_point(model, cls, rng);
    EXPECT_EQ((p.a.array() - model.mean_coords.row(cls).transpose()).abs().maxCoeff(), 0);
  }
  EXPECT_THROW(sample_point(model, 2, rng), InvalidArgument);
}

TEST(SamplePoint, EmpiricalCovarianceIsIdentity) {
  const auto model = build_identity(8, 0.0);
  Rng rng = make_rng(3, 4);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(8, 8);
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    const auto p = sample_point(model, k % 2, rng);
    C.noalias() += p.a * p.a.transpose();
  }
  C /= n;
  EXPECT_LT((C - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff(), 0.05);
}

TEST(SamplePoint, ZeroOneNullBlockIsExact) {
  const std::array<double, 4> q{0.25, 0.25, 0.25, 0.25};
  const auto z = build_zero_one(16, q, q, 2);
  Rng rng = make_rng(5, 6);
  for (int k = 0; k < 50; ++k) {
    const auto p = sample_point(z.model, k % 2, rng);
    for (int r : z.partition.blocks[0]) EXPECT_EQ(p.a[r], z.model.mean_coords(k % 2, r));
  }
}

TEST(SgdStep, ZeroRateLeavesIterate) {
  const auto model = build_identity(10, 1.0);
  const TaskSpec task;
  auto s = make_sgd_state(model, task, 1, Eigen::MatrixXd::Constant(10, 1, 0.3));
  const Eigen::MatrixXd before = s.X;
  sgd_step(s, model, task, 0.0);
  EXPECT_EQ(s.X, before);
  EXPECT_EQ(s.k, 1);
}

// From X = 0 the logistic weight is 1/2, so X = +-(gamma/2d) a. On the null
// block a = +-mu, and both signs land on (gamma/2d) mu.
TEST(SgdStep, FirstLogisticStepFromOrigin) {
  const std::array<double, 4> q{0.25, 0.25, 0.25, 0.25};
  const auto z = build_zero_one(40, q, q, 3);
  const TaskSpec task;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    auto s = make_sgd_state(z.model, task, seed);
    sgd_step(s, z.model, task, 0.8);
    for (int r : z.partition.blocks[0])
      EXPECT_NEAR(s.X(r, 0), 0.8 / (2 * 40) * z.model.mean_coords(0, r), 1e-17);
  }
}

TEST(SgdStep, MseAtTargetIsStationary) {
  const auto model = build_multiclass_power_law(30, 3, 1.0, 1.0, 2);
  const auto task = make_mse_task(model, 3, 0.0, 4);
  auto s = make_sgd_state(model, task, 1, task.target);
  for (int k = 0; k < 20; ++k) sgd_step(s, model, task, 0.5);
  EXPECT_LT((s.X - task.target).norm(), 1e-15);
}

TEST(SgdStep, OverflowRaises) {
  const auto model = build_multiclass_power_law(20, 1, 0.0, 0.0, 1);
  const auto task = make_mse_task(model, 1, 0.0, 2);
  auto s = make_sgd_state(model, task, 1);
  try {
    for (int k = 0; k < 100000; ++k) sgd_step(s, model, task, 60.0);
    FAIL() << "expected overflow";
  } catch (const NumericalError& e) {
    EXPECT_GT(e.index(), 0);
    EXPECT_NE(std::string(e.what()).find("[sgd-lab]"), std::string::npos);
  }
}

TEST(RunSgd, SeedReproducible) {
  const auto model = build_identity(100, 1.0);
  const auto grid = log_grid(0.1, 5, 8);
  const auto a = run_sgd(model, TaskSpec{}, 0.5, grid, 42);
  const auto b = run_sgd(model, TaskSpec{}, 0.5, grid, 42);
  const auto c = run_sgd(model, TaskSpec{}, 0.5, grid, 43);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t j = 0; j < a.size(); ++j) {
    EXPECT_EQ(a.rows[j].loss, b.rows[j].loss);
    EXPECT_EQ(a.rows[j].m, b.rows[j].m);
    EXPECT_EQ(a.rows[j].V, b.rows[j].V);
  }
  EXPECT_NE(a.rows.back().m, c.rows.back().m);
  EXPECT_EQ(a.meta.kind, "sgd");
  EXPECT_EQ(a.meta.seed, 42u);
}

TEST(RunSgd, RecordsAtFloorTd) {
  const auto model = build_identity(10, 1.0);
  std::vector<long> steps;
  SgdOptions o;
  o.observer = [&](double, const SgdState& s) { steps.push_back(s.k); };
  run_sgd(model, TaskSpec{}, 0.5, {0, 0.25, 1.0, 2.35}, 1, o);
  EXPECT_EQ(steps, (std::vector<long>{0, 2, 10, 23}));
}

TEST(RunSgd, ObservablesMatchDefinitions) {
  const std::array<double, 4> q{0.25, 0.25, 0.25, 0.25};
  const auto z = build_zero_one(40, q, q, 3);
  SgdOptions o;
  o.partition = z.partition;
  const auto c = run_sgd(z.model, TaskSpec{}, 0.9, {0, 1, 3}, 2, o);
  for (const auto& r : c.rows) {
    ASSERT_TRUE(r.m_block && r.v_block);
    double ms = 0, vs = 0;
    for (int b = 0; b < 4; ++b) {
      ms += (*r.m_block)[b];
      vs += (*r.v_block)[b];
    }
    EXPECT_NEAR(ms, r.m, 1e-14);
    EXPECT_NEAR(vs, r.V, 1e-14);
    EXPECT_NEAR(r.loss, binary_logistic_risk(r.m, r.B[0], r.B[1], 0.5), 1e-14);
  }
}

TEST(RunSgd, Guards) {
  const auto model = build_identity(1000, 1.0);
  SgdOptions o;
  o.max_steps = 5000;
  EXPECT_THROW(run_sgd(model, TaskSpec{}, 0.5, {0, 10}, 1, o), InvalidArgument);
  const auto mc = build_multiclass_power_law(20, 3, 1.0, 1.0, 1);
  TaskSpec ce;
  ce.loss = LossFamily::CrossEntropy;
  SgdOptions p;
  p.partition = build_zero_one(20, {0.25, 0.25, 0.25, 0.25}, {1, 0, 0, 0}, 1).partition;
  EXPECT_THROW(run_sgd(mc, ce, 0.5, {0, 1}, 1, p), InvalidArgument);
}

TEST(PerMode, RankOneIdentityIsExact) {
  const auto model = build_power_law(64, {1.0, 1.0}, 0.3, 1.0);
  SgdOptions o;
  int checked = 0;
  o.observer = [&](double, const SgdState& s) {
    const auto st = per_mode_stats(s.X.col(0), model);
    for (int r = 0; r < model.d; ++r) {
      const double rhs = st.V[r] * model.mean_sq(0, r) * model.d;
      EXPECT_LE(std::abs(st.M[r] * st.M[r] - rhs), 1e-8 * (1 + rhs));
    }
    ++checked;
  };
  run_sgd(model, TaskSpec{}, 0.7, linear_grid(3, 0.5), 9, o);
  EXPECT_EQ(checked, 7);
}

TEST(RunSgd, MseDistanceTrendsDown) {
  const auto model = build_multiclass_power_law(300, 3, 1.0, 1.0, 4);
  const auto task = make_mse_task(model, 3, 0.0, 5);
  const auto c = run_sgd(model, task, 0.5, linear_grid(10, 0.05), 3);
  // average over windows of width 0.5 in t (10 points)
  std::vector<double> avg;
  for (std::size_t j = 0; j + 10 <= c.size(); j += 10) {
    double s = 0;
    for (std::size_t k = j; k < j + 10; ++k) s += c.rows[k].V;
    avg.push_back(s / 10);
  }
  for (std::size_t j = 1; j < avg.size(); ++j) EXPECT_LE(avg[j], avg[j - 1]);
}

TEST(Hsgd, ZeroRateIsConstant) {
  const auto model = build_identity(50, 1.0);
  HsgdOptions o;
  o.x0 = Eigen::MatrixXd::Constant(50, 1, 0.01);
  const auto c = run_hsgd(model, TaskSpec{}, 0.0, {0, 0.5, 1}, 1, o);
  EXPECT_EQ(c.rows[0].V, c.rows[2].V);
  EXPECT_EQ(c.rows[0].m, c.rows[2].m);
  EXPECT_EQ(c.meta.kind, "hsgd");
}

TEST(Hsgd, SeedReproducibleAndDtChecked) {
  const auto model = build_identity(60, 1.0);
  const auto a = run_hsgd(model, TaskSpec{}, 0.5, {0, 1}, 4);
  const auto b = run_hsgd(model, TaskSpec{}, 0.5, {0, 1}, 4);
  EXPECT_EQ(a.rows.back().loss, b.rows.back().loss);
  HsgdOptions o;
  o.dt = 0.02;
  EXPECT_THROW(run_hsgd(model, TaskSpec{}, 0.5, {0, 1}, 4, o), InvalidArgument);
}

TEST(Hsgd, GradientFlowMatchesFirstOrderOde) {
  const auto model = build_power_law(100, {1.0, 1.0}, 0.0, 1.0);
  const auto grid = linear_grid(5, 0.25);
  HsgdOptions o;
  o.diffusion = false;
  o.dt = 1e-3;
  const auto flow = run_hsgd(model, TaskSpec{}, 0.5, grid, 1, o);
  SolverSettings s;
  s.second_order = false;
  const auto ode = integrate_task(model, TaskSpec{}, 0.5, grid, s);
  EXPECT_LT(compare(flow, ode).at("loss"), 1e-3);
}

TEST(Hsgd, MseDriftUsesTargetColumns) {
  const auto model = build_multiclass_power_law(60, 2, 1.0, 1.0, 2);
  const auto task = make_mse_task(model, 2, 0.0, 3);
  HsgdOptions o;
  o.diffusion = false;
  o.dt = 1e-3;
  const auto grid = linear_grid(3, 0.5);
  const auto flow = run_hsgd(model, task, 0.5, grid, 1, o);
  SolverSettings s;
  s.second_order = false;
  const auto ode = integrate_task(model, task, 0.5, grid, s);
  EXPECT_LT(compare(flow, ode).at("loss"), 1e-3);
}

TEST(Concentration, SingleDimensionHasNoSlope) {
  ConcentrationSpec spec;
  spec.make_model = [](int d) { return build_identity(d, 1.0); };
  spec.grid = linear_grid(2, 0.5);
  spec.dims = {100};
  const auto t = concentration_sweep(spec);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0].errors.size(), 3u);
  EXPECT_FALSE(t.slope.has_value());
}

TEST(Concentration, IndependentOfWorkerCount) {
  ConcentrationSpec spec;
  spec.make_model = [](int d) { return build_identity(d, 1.0); };
  spec.grid = linear_grid(2, 0.5);
  spec.dims = {50, 100};
  spec.workers = 1;
  const auto a = concentration_sweep(spec);
  spec.workers = 4;
  const auto b = concentration_sweep(spec);
  for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(a.rows[j].errors, b.rows[j].errors);
  EXPECT_TRUE(a.slope.has_value());
  EXPECT_EQ(*a.slope, *b.slope);
}

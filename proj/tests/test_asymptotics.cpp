#include <gtest/gtest.h>

#include <cmath>

#include "gmmsgd/asymptotics.hpp"
#include "gmmsgd/errors.hpp"
#include "gmmsgd/ode.hpp"

using namespace gmmsgd;

TEST(Kernels, FmuAtZeroIsMeanNorm) {
  const auto m = build_power_law(500, {1.2, 1.2}, 0.4, 1.7);
  EXPECT_NEAR(kernel_F_mu(m, 0.5, 0), 1.7, 1e-12);
}

TEST(Kernels, IdentityClosedForms) {
  const auto m = build_identity(100, 2.0);
  for (double x : {0.0, 0.3, 4.0}) {
    EXPECT_NEAR(kernel_F_mu(m, 0.7, x), 2.0 * std::exp(-0.7 * x), 1e-13);
    EXPECT_NEAR(kernel_K2(m, 0.7, x), std::exp(-1.4 * x), 1e-13);
  }
  EXPECT_NEAR(0.7 * kernel_F_mu_l1(m, 0.7), 2.0, 1e-12);
  EXPECT_NEAR(kernel_K2_l1(m, 0.7), 1 / 1.4, 1e-12);
}

TEST(Kernels, IdentityL1NormByQuadrature) {
  const auto m = build_identity(10, 1.0);
  const double gamma = 0.5, h = 1e-3, X = 80;
  const int n = static_cast<int>(X / h);
  double s = 0;
  for (int k = 0; k <= n; ++k) {
    const double c = (k == 0 || k == n) ? 1 : (k % 2 ? 4 : 2);
    s += c * kernel_F_mu(m, gamma, k * h);
  }
  EXPECT_NEAR(gamma * s * h / 3, 1.0, 1e-6);
}

TEST(Kernels, PowerLawMatchesIntegrals) {
  const auto m = build_power_law(10000, {1.0, 1.0}, 0.0, 1.0);
  EXPECT_NEAR(kernel_F_mu(m, 1, 2), 0.43233235838169365, 0.01 * 0.43233235838169365);
  EXPECT_NEAR(kernel_K2(m, 1, 1), 0.08083089595423412, 0.01 * 0.08083089595423412);
  double l2 = 0;
  for (int r = 0; r < m.d; ++r) l2 += m.eigvals(0, r) * m.eigvals(0, r);
  EXPECT_NEAR(kernel_K2(m, 1, 0), l2 / m.d, 1e-14);
}

TEST(Kernels, DecreasingAndConvex) {
  const auto m = build_power_law(300, {1.3, 1.3}, 0.5, 1.0);
  std::vector<double> f, k;
  for (double x = 0; x <= 50; x += 0.5) {
    f.push_back(kernel_F_mu(m, 0.5, x));
    k.push_back(kernel_K2(m, 0.5, x));
  }
  for (std::size_t j = 1; j + 1 < f.size(); ++j) {
    EXPECT_LT(f[j], f[j - 1]);
    EXPECT_LT(k[j], k[j - 1]);
    EXPECT_GE(f[j - 1] + f[j + 1], 2 * f[j] - 1e-15);
    EXPECT_GE(k[j - 1] + k[j + 1], 2 * k[j] - 1e-15);
  }
}

TEST(Regime, Classification) {
  EXPECT_EQ(classify_regime(1.2, 1.0).regime, "mild");
  EXPECT_EQ(classify_regime(2.0, 0.2).regime, "extreme");
  const auto b = classify_regime(1.0, 0.0);
  EXPECT_EQ(b.regime, "boundary");
  EXPECT_DOUBLE_EQ(b.kappa_mu, 1.0);
  EXPECT_TRUE(b.extreme_tail_expected());
  EXPECT_FALSE(classify_regime(1.2, 1.0).extreme_tail_expected());
}

// (0.2 + 1) / 1.2 is exactly 1, which sits on the boundary; the polynomial
// decay analysis still applies there.
TEST(Regime, ExtremeExamplePairIsOnTheBoundary) {
  const auto r = classify_regime(1.2, 0.2);
  EXPECT_NEAR(r.kappa_mu, 1.0, 1e-15);
  EXPECT_EQ(r.regime, "boundary");
  EXPECT_TRUE(r.extreme_tail_expected());
}

TEST(Regime, ExponentsAndIdentity) {
  const auto r = classify_regime(2.0, 3.0);
  EXPECT_DOUBLE_EQ(r.kappa_2, 2.5);
  EXPECT_DOUBLE_EQ(r.kappa_lambda, 1.5);
  EXPECT_FALSE(r.note.empty());
  const auto id = classify_regime(0.0, 0.0);
  EXPECT_TRUE(id.identity);
  EXPECT_TRUE(std::isinf(id.kappa_mu));
  EXPECT_THROW(classify_regime(-1, 0), InvalidArgument);
}

TEST(Cw, OriginIsTwo) {
  LearningCurve c;
  CurveRow r;
  r.B = {0, 0};
  c.rows = {r};
  const auto s = measure_cw(c);
  EXPECT_DOUBLE_EQ(s.a[0], 2.0);
  EXPECT_FALSE(s.flagged[0]);
}

TEST(Cw, LowerBoundAlongIdentityRun) {
  const auto model = build_identity(100, 1.0);
  const auto c = integrate_binary_logistic(model, 0.3, log_grid(0.01, 1000, 8));
  const auto s = measure_cw(c);
  for (std::size_t j = 0; j < s.a.size(); ++j)
    if (!s.flagged[j]) EXPECT_GE(s.a[j], 1 + std::exp(-s.m[j]) - 1e-9);
  EXPECT_GE(s.plateau, 2.0);
  EXPECT_GE(s.sup, s.plateau);
}

TEST(TailFit, ExactPowerLaw) {
  std::vector<double> t, y;
  for (double x = 100; x <= 1e4 * 1.0001; x *= 1.2) {
    t.push_back(x);
    y.push_back(3 / x);
  }
  const auto f = fit_tail(t, y, 100, 1e4, TailLaw::Power);
  EXPECT_NEAR(f.slope, -1, 1e-6);
  EXPECT_NEAR(f.r2, 1, 1e-12);
  EXPECT_NEAR(std::exp(f.intercept), 3, 1e-9);
}

TEST(TailFit, LogAndConst) {
  std::vector<double> t, y, c;
  for (double x = 10; x <= 1e5; x *= 1.5) {
    t.push_back(x);
    y.push_back(std::log(x) + 0.3);
    c.push_back(x < 1000 ? 2.0 : 2.1);
  }
  const auto f = fit_tail(t, y, 10, 1e5, TailLaw::Log);
  EXPECT_NEAR(f.slope, 1, 1e-12);
  EXPECT_NEAR(f.intercept, 0.3, 1e-10);
  const auto k = fit_tail(t, c, 10, 1e5, TailLaw::Const);
  EXPECT_GT(k.level, 2.0);
  EXPECT_LT(k.level, 2.1);
  EXPECT_NEAR(k.max_dev, std::max(k.level - 2.0, 2.1 - k.level), 1e-15);
}

TEST(TailFit, Errors) {
  std::vector<double> t{1, 2, 3}, y{1, 1, 1};
  EXPECT_THROW(fit_tail(t, y, 1, 3, TailLaw::Power), InvalidArgument);
  std::vector<double> tt, yy;
  for (int j = 1; j <= 20; ++j) {
    tt.push_back(j);
    yy.push_back(j == 5 ? -1 : 1);
  }
  EXPECT_THROW(fit_tail(tt, yy, 1, 20, TailLaw::Power), InvalidArgument);
  EXPECT_EQ(tail_law_from_string(to_string(TailLaw::Log)), TailLaw::Log);
  EXPECT_THROW(tail_law_from_string("exp"), InvalidArgument);
}

TEST(Threshold, MseLearningRate) {
  EXPECT_DOUBLE_EQ(lr_threshold_mse(build_identity(50, 0.0)), 1.0);
  EXPECT_NEAR(lr_threshold_mse(build_identity(50, 1.0)), 1 / (1 + 1.0 / 50), 1e-15);
  const int d = 100000;
  EXPECT_NEAR(lr_threshold_mse(build_power_law(d, {1.0}, 0.0, 1e-300)), 2.0 * d / (d + 1), 1e-9);
}

TEST(RelativeVariation, OfFlatAndRamp) {
  LearningCurve c;
  for (double t : {1.0, 2.0, 3.0, 4.0}) {
    CurveRow r;
    r.t = t;
    r.loss = t;
    c.rows.push_back(r);
  }
  EXPECT_NEAR(relative_variation(c, "loss", 1, 4), 0.75, 1e-15);
  EXPECT_NEAR(relative_variation(c, "loss", 2, 2), 0.0, 1e-15);
}

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "gmmsgd/quadrature.hpp"

using namespace gmmsgd;

namespace {

double sum_w(const QuadRule& r) { return std::accumulate(r.w.begin(), r.w.end(), 0.0); }

}  // namespace

TEST(Hermite, IntegratesGaussianMoments) {
  for (int n : {4, 10, 40, 80, 160}) {
    const auto& r = hermite_normal(n);
    ASSERT_EQ(r.size(), static_cast<std::size_t>(n));
    EXPECT_NEAR(sum_w(r), 1.0, 1e-13) << n;
    double m2 = 0, m4 = 0, m1 = 0;
    for (std::size_t k = 0; k < r.size(); ++k) {
      m1 += r.w[k] * r.x[k];
      m2 += r.w[k] * r.x[k] * r.x[k];
      m4 += r.w[k] * std::pow(r.x[k], 4);
    }
    EXPECT_NEAR(m1, 0.0, 1e-13);
    EXPECT_NEAR(m2, 1.0, 1e-12);
    if (n >= 3) EXPECT_NEAR(m4, 3.0, 1e-11);
  }
}

TEST(Hermite, CachedReference) { EXPECT_EQ(&hermite_normal(33), &hermite_normal(33)); }

TEST(Legendre, ExactForPolynomials) {
  const auto& r = legendre(12);
  EXPECT_NEAR(sum_w(r), 2.0, 1e-14);
  double i22 = 0;
  for (std::size_t k = 0; k < r.size(); ++k) i22 += r.w[k] * std::pow(r.x[k], 22);
  EXPECT_NEAR(i22, 2.0 / 23, 1e-14);
}

TEST(LogitRule, GaussianExpectationOfPolynomial) {
  std::vector<double> x, w;
  for (double B : {0.5, 3.0, 25.0}) {
    logit_rule(0.7, B, 80, x, w);
    double s0 = 0, s1 = 0, s2 = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      s0 += w[k];
      s1 += w[k] * x[k];
      s2 += w[k] * x[k] * x[k];
    }
    EXPECT_NEAR(s0, 1.0, 1e-12) << B;
    EXPECT_NEAR(s1, 0.7, 1e-10) << B;
    EXPECT_NEAR(s2, 0.49 + B, 1e-9) << B;
  }
}

TEST(LogitRule, DegenerateVarianceIsPointMass) {
  std::vector<double> x, w;
  logit_rule(1.5, 0.0, 80, x, w);
  for (double v : x) EXPECT_EQ(v, 1.5);
  EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-13);
}

#pragma once

#include <vector>

namespace gmmsgd {

/// Nodes and weights of a one-dimensional rule.
struct QuadRule {
  std::vector<double> x;
  std::vector<double> w;
  std::size_t size() const { return x.size(); }
};

/// Gauss-Hermite rule for E[g(z)], z ~ N(0,1): sum_k w_k g(x_k), weights sum
/// to one. Computed once per n (Golub-Welsch) and cached.
const QuadRule& hermite_normal(int n);

/// Gauss-Legendre rule on [-1, 1]; cached.
const QuadRule& legendre(int n);

/// Rule for E[g(m + sqrt(B) z)] when g is logistic-like: smooth on the real
/// line but with complex singularities above and below x = 0. Returns nodes
/// already mapped to x = m + sqrt(B) z, weights including the Gaussian
/// density. For small B this is plain Gauss-Hermite with `nodes` points; for
/// larger B the z-axis is split into Gauss-Legendre panels graded toward
/// z0 = -m/sqrt(B) where the singularities sit.
void logit_rule(double m, double B, int nodes, std::vector<double>& x,
                std::vector<double>& w);

/// Threshold on B above which logit_rule switches to graded panels.
inline constexpr double kHermiteMaxVariance = 2.0;

}  // namespace gmmsgd

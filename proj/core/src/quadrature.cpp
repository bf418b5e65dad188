#include "gmmsgd/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "gmmsgd/errors.hpp"

namespace gmmsgd {

namespace {

// Golub-Welsch: eigen-decomposition of the Jacobi matrix with off-diagonal
// entries beta_k; weights are mu0 * (first eigenvector component)^2.
QuadRule golub_welsch(int n, double mu0, double (*beta)(int)) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = beta(k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  QuadRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int k = 0; k < n; ++k) {
    r.x[k] = es.eigenvalues()[k];
    const double v = es.eigenvectors()(0, k);
    r.w[k] = mu0 * v * v;
  }
  // symmetrize to kill round-off asymmetry
  for (int k = 0; k < n / 2; ++k) {
    const double xa = 0.5 * (r.x[n - 1 - k] - r.x[k]);
    const double wa = 0.5 * (r.w[n - 1 - k] + r.w[k]);
    r.x[k] = -xa;
    r.x[n - 1 - k] = xa;
    r.w[k] = r.w[n - 1 - k] = wa;
  }
  if (n % 2 == 1) r.x[n / 2] = 0.0;
  return r;
}

double hermite_beta(int k) { return std::sqrt(static_cast<double>(k)); }
double legendre_beta(int k) {
  const double kk = static_cast<double>(k);
  return kk / std::sqrt(4.0 * kk * kk - 1.0);
}

const QuadRule& cached(std::map<int, std::unique_ptr<QuadRule>>& cache,
                       std::mutex& mu, int n, double mu0, double (*beta)(int)) {
  if (n < 1 || n > 4096) throw InvalidArgument("moment-oracle", "quadrature size out of range");
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<QuadRule>(golub_welsch(n, mu0, beta));
  return *slot;
}

constexpr double kZMax = 9.0;  // N(0,1) tail mass beyond 9 is ~2e-19

}  // namespace

const QuadRule& hermite_normal(int n) {
  static std::map<int, std::unique_ptr<QuadRule>> cache;
  static std::mutex mu;
  return cached(cache, mu, n, 1.0, &hermite_beta);
}

const QuadRule& legendre(int n) {
  static std::map<int, std::unique_ptr<QuadRule>> cache;
  static std::mutex mu;
  return cached(cache, mu, n, 2.0, &legendre_beta);
}

void logit_rule(double m, double B, int nodes, std::vector<double>& x,
                std::vector<double>& w) {
  x.clear();
  w.clear();
  const double b = std::sqrt(std::max(B, 0.0));
  if (B <= kHermiteMaxVariance) {
    const QuadRule& gh = hermite_normal(nodes);
    x.resize(gh.size());
    w = gh.w;
    for (std::size_t k = 0; k < gh.size(); ++k) x[k] = m + b * gh.x[k];
    return;
  }

  // Panel edges: z0, z0 +- h, z0 +- 3h, ... doubling up to a cap, clipped to
  // [-kZMax, kZMax].
  const double z0 = std::clamp(-m / b, -kZMax, kZMax);
  const double h = std::min(0.5, 1.0 / b);
  const double cap = 1.5;
  std::vector<double> edges{z0};
  for (int dir : {-1, 1}) {
    double pos = z0;
    double step = h;
    while (dir < 0 ? pos > -kZMax : pos < kZMax) {
      pos += dir * step;
      pos = std::clamp(pos, -kZMax, kZMax);
      edges.push_back(pos);
      step = std::min(2 * step, cap);
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  const QuadRule& gl = legendre(std::max(12, nodes / 5));
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  x.reserve(gl.size() * edges.size());
  w.reserve(gl.size() * edges.size());
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double lo = edges[p], hi = edges[p + 1];
    const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    for (std::size_t k = 0; k < gl.size(); ++k) {
      const double z = mid + half * gl.x[k];
      x.push_back(m + b * z);
      w.push_back(half * gl.w[k] * inv_sqrt_2pi * std::exp(-0.5 * z * z));
    }
  }
}

}  // namespace gmmsgd

#pragma once

#include <string>
#include <vector>

#include "gmmsgd/curve.hpp"
#include "gmmsgd/moments.hpp"
#include "gmmsgd/spectral_model.hpp"

namespace gmmsgd {

struct RegimeReport {
  double alpha = 0;
  double beta = 0;
  double kappa_mu = 0;      // (beta + 1) / alpha
  double kappa_2 = 0;       // 1/alpha + 2, exponent of the lambda^2-weighted kernel
  double kappa_lambda = 0;  // 1/alpha + 1, exponent of a lambda-weighted kernel
  std::string regime;       // mild | boundary | extreme
  bool identity = false;    // alpha == 0: flat spectrum
  std::string note;

  /// beta + 1 <= alpha: the polynomial-decay (extreme) analysis applies,
  /// which includes the boundary case.
  bool extreme_tail_expected() const { return regime != "mild"; }
};

RegimeReport classify_regime(double alpha, double beta, double tol = 1e-9);

/// F_mu(x) = sum_rho mu~_rho exp(-gamma lambda_rho x) for the equal-covariance
/// binary configuration (class 0 spectrum and mean).
double kernel_F_mu(const SpectralMixture& model, double gamma, double x);
/// K2(x) = (1/d) sum_rho lambda_rho^2 exp(-2 gamma lambda_rho x).
double kernel_K2(const SpectralMixture& model, double gamma, double x);
/// int_0^inf F_mu = sum mu~_rho / (gamma lambda_rho); inf if mass sits on lambda = 0.
double kernel_F_mu_l1(const SpectralMixture& model, double gamma);
/// int_0^inf K2 = (1/d) sum lambda_rho / (2 gamma).
double kernel_K2_l1(const SpectralMixture& model, double gamma);

struct CwSeries {
  std::vector<double> t;
  std::vector<double> a;        // W1 / (W1 - W2); inf where flagged
  std::vector<bool> flagged;    // W1 - W2 <= 0 numerically
  std::vector<double> m;
  double sup = 0;               // over unflagged points
  double plateau = 0;           // mean over the terminal decade (or last 10% of rows)
};

/// a(t) from the (m, B1) columns of a binary logistic curve.
CwSeries measure_cw(const LearningCurve& curve, int nodes = kDefaultNodes);

enum class TailLaw { Power, Log, Const };
TailLaw tail_law_from_string(const std::string& s);
std::string to_string(TailLaw law);

struct TailFit {
  TailLaw law = TailLaw::Power;
  double slope = 0;      // power: exponent of t; log: coefficient of log t
  double intercept = 0;
  double level = 0;      // const: mean
  double max_dev = 0;    // const: max |y - mean|; others: max residual
  double r2 = 0;
  int points = 0;
};

inline constexpr int kMinTailPoints = 10;

/// Least squares in transformed coordinates over t in [t1, t2].
TailFit fit_tail(const std::vector<double>& t, const std::vector<double>& y,
                 double t1, double t2, TailLaw law);
TailFit fit_tail(const LearningCurve& curve, const std::string& column,
                 double t1, double t2, TailLaw law);

/// (max - min) / max of a column over [t1, t2].
double relative_variation(const LearningCurve& curve, const std::string& column,
                          double t1, double t2);

/// 1 / max_i ((tr K_i + |mu_i|^2) / d).
double lr_threshold_mse(const SpectralMixture& model);

}  // namespace gmmsgd

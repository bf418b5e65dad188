#include "gmmsgd/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gmmsgd/errors.hpp"

namespace gmmsgd {

namespace {
const char* kModule = "asymptotics";
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

RegimeReport classify_regime(double alpha, double beta, double tol) {
  if (!std::isfinite(alpha) || !std::isfinite(beta) || alpha < 0 || beta < 0)
    throw InvalidArgument(kModule, "alpha and beta must be finite and >= 0");
  RegimeReport r;
  r.alpha = alpha;
  r.beta = beta;
  r.note =
      "kappa_2 = 1/alpha + 2 is the decay exponent of the lambda^2-weighted kernel K2; "
      "a lambda-weighted kernel decays with kappa_lambda = 1/alpha + 1";
  if (alpha == 0) {
    r.identity = true;
    r.kappa_mu = r.kappa_2 = r.kappa_lambda = kInf;
    r.regime = "mild";
    r.note = "alpha = 0: flat spectrum, handled as the identity model";
    return r;
  }
  r.kappa_mu = (beta + 1) / alpha;
  r.kappa_2 = 1 / alpha + 2;
  r.kappa_lambda = 1 / alpha + 1;
  if (std::abs(r.kappa_mu - 1) <= tol) r.regime = "boundary";
  else if (r.kappa_mu > 1) r.regime = "mild";
  else r.regime = "extreme";
  return r;
}

double kernel_F_mu(const SpectralMixture& model, double gamma, double x) {
  double acc = 0;
  for (int rho = 0; rho < model.d; ++rho)
    acc += model.mean_sq(0, rho) * std::exp(-gamma * model.eigvals(0, rho) * x);
  return acc;
}

double kernel_K2(const SpectralMixture& model, double gamma, double x) {
  double acc = 0;
  for (int rho = 0; rho < model.d; ++rho) {
    const double l = model.eigvals(0, rho);
    acc += l * l * std::exp(-2 * gamma * l * x);
  }
  return acc / model.d;
}

double kernel_F_mu_l1(const SpectralMixture& model, double gamma) {
  if (!(gamma > 0)) throw InvalidArgument(kModule, "gamma must be positive");
  double acc = 0;
  for (int rho = 0; rho < model.d; ++rho) {
    const double mu = model.mean_sq(0, rho), l = model.eigvals(0, rho);
    if (mu == 0) continue;
    if (l == 0) return kInf;
    acc += mu / (gamma * l);
  }
  return acc;
}

double kernel_K2_l1(const SpectralMixture& model, double gamma) {
  if (!(gamma > 0)) throw InvalidArgument(kModule, "gamma must be positive");
  return model.eigvals.row(0).sum() / (2 * gamma * model.d);
}

CwSeries measure_cw(const LearningCurve& curve, int nodes) {
  if (curve.rows.empty()) throw InvalidArgument(kModule, "empty curve");
  if (curve.rows.front().B.empty()) throw InvalidArgument(kModule, "curve has no B1 column");
  CwSeries s;
  for (const auto& r : curve.rows) {
    const LogisticMoments lm = logistic_moments(r.m, std::max(r.B[0], 0.0), nodes);
    const double den = lm.W1 - lm.W2;
    const bool bad = !(den > 0);
    s.t.push_back(r.t);
    s.m.push_back(r.m);
    s.flagged.push_back(bad);
    s.a.push_back(bad ? kInf : lm.W1 / den);
    if (!bad) s.sup = std::max(s.sup, s.a.back());
  }
  const double t_end = s.t.back();
  const std::size_t n = s.t.size();
  std::size_t first = n - std::max<std::size_t>(1, n / 10);
  if (t_end >= 10 && s.t.size() > 1 && s.t[1] <= t_end / 10) {
    first = static_cast<std::size_t>(
        std::lower_bound(s.t.begin(), s.t.end(), t_end / 10) - s.t.begin());
  }
  double acc = 0;
  int cnt = 0;
  for (std::size_t j = first; j < n; ++j) {
    if (s.flagged[j]) continue;
    acc += s.a[j];
    ++cnt;
  }
  s.plateau = cnt ? acc / cnt : kInf;
  return s;
}

TailLaw tail_law_from_string(const std::string& s) {
  if (s == "power") return TailLaw::Power;
  if (s == "log") return TailLaw::Log;
  if (s == "const") return TailLaw::Const;
  throw InvalidArgument(kModule, "unknown tail law '" + s + "' (power, log, const)");
}

std::string to_string(TailLaw law) {
  switch (law) {
    case TailLaw::Power: return "power";
    case TailLaw::Log: return "log";
    case TailLaw::Const: return "const";
  }
  return "unknown";
}

TailFit fit_tail(const std::vector<double>& t, const std::vector<double>& y, double t1,
                 double t2, TailLaw law) {
  if (t.size() != y.size()) throw InvalidArgument(kModule, "t and y lengths differ");
  std::vector<double> xs, ys;
  for (std::size_t j = 0; j < t.size(); ++j) {
    if (t[j] < t1 || t[j] > t2) continue;
    double x = t[j], v = y[j];
    if (law != TailLaw::Const) {
      if (!(x > 0)) throw InvalidArgument(kModule, "log transform of nonpositive time");
      x = std::log(x);
    }
    if (law == TailLaw::Power) {
      if (!(v > 0)) throw InvalidArgument(kModule, "log transform of nonpositive value");
      v = std::log(v);
    }
    xs.push_back(x);
    ys.push_back(v);
  }
  const int n = static_cast<int>(xs.size());
  if (n < kMinTailPoints)
    throw InvalidArgument(kModule, "tail fit needs at least " + std::to_string(kMinTailPoints) +
                                       " points in the window, got " + std::to_string(n));
  TailFit f;
  f.law = law;
  f.points = n;
  double my = 0;
  for (double v : ys) my += v;
  my /= n;
  if (law == TailLaw::Const) {
    f.level = my;
    double ss = 0;
    for (double v : ys) {
      f.max_dev = std::max(f.max_dev, std::abs(v - my));
      ss += (v - my) * (v - my);
    }
    f.r2 = ss == 0 ? 1.0 : 0.0;
    return f;
  }
  double mx = 0;
  for (double x : xs) mx += x;
  mx /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (int j = 0; j < n; ++j) {
    sxx += (xs[j] - mx) * (xs[j] - mx);
    sxy += (xs[j] - mx) * (ys[j] - my);
    syy += (ys[j] - my) * (ys[j] - my);
  }
  if (sxx == 0) throw InvalidArgument(kModule, "degenerate time window");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sres = 0;
  for (int j = 0; j < n; ++j) {
    const double res = ys[j] - (f.intercept + f.slope * xs[j]);
    sres += res * res;
    f.max_dev = std::max(f.max_dev, std::abs(res));
  }
  f.r2 = syy == 0 ? 1.0 : 1.0 - sres / syy;
  f.level = my;
  return f;
}

TailFit fit_tail(const LearningCurve& curve, const std::string& column, double t1, double t2,
                 TailLaw law) {
  return fit_tail(curve.times(), curve.column(column), t1, t2, law);
}

double relative_variation(const LearningCurve& curve, const std::string& column, double t1,
                          double t2) {
  const auto t = curve.times();
  const auto y = curve.column(column);
  double lo = kInf, hi = -kInf;
  for (std::size_t j = 0; j < t.size(); ++j) {
    if (t[j] < t1 || t[j] > t2) continue;
    lo = std::min(lo, y[j]);
    hi = std::max(hi, y[j]);
  }
  if (!(hi >= lo)) throw InvalidArgument(kModule, "no points in the window");
  return hi == 0 ? 0.0 : (hi - lo) / std::abs(hi);
}

double lr_threshold_mse(const SpectralMixture& model) {
  double worst = 0;
  for (int i = 0; i < model.num_classes(); ++i)
    worst = std::max(worst, (model.trace(i) + model.mean_norm_sq(i)) / model.d);
  if (!(worst > 0)) throw InvalidArgument(kModule, "all-zero spectrum and means: no threshold");
  return 1.0 / worst;
}

}  // namespace gmmsgd

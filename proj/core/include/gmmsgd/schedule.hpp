#pragma once

#include <functional>
#include <string>
#include <vector>

namespace gmmsgd {

/// gamma(t) with t = k/d. Either piecewise constant (values[j] on
/// [breaks[j-1], breaks[j])) or an arbitrary callable. All values must lie
/// in [0, gamma_bar].
class LearningRateSchedule {
 public:
  static constexpr double kDefaultBound = 2.0;

  LearningRateSchedule(double gamma, double gamma_bar = kDefaultBound);  // NOLINT implicit
  LearningRateSchedule(std::vector<double> breaks, std::vector<double> values,
                       double gamma_bar = kDefaultBound);
  LearningRateSchedule(std::function<double(double)> fn, double gamma_bar);

  /// Throws InvalidArgument if the callable leaves [0, gamma_bar].
  double operator()(double t) const;

  double bound() const { return gamma_bar_; }
  bool is_constant() const { return !fn_ && values_.size() == 1; }
  /// Largest value over the piecewise pieces, or the bound for callables.
  double max_value() const;
  std::string describe() const;

  const std::vector<double>& breaks() const { return breaks_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> breaks_;
  std::vector<double> values_;
  std::function<double(double)> fn_;
  double gamma_bar_;
};

}  // namespace gmmsgd

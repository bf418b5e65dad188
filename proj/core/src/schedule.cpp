#include "gmmsgd/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gmmsgd/errors.hpp"

namespace gmmsgd {

namespace {
const char* kModule = "schedule";

void check_value(double g, double bound) {
  if (!std::isfinite(g) || g < 0 || g > bound) {
    std::ostringstream os;
    os << "learning rate " << g << " outside [0, " << bound << "]";
    throw InvalidArgument(kModule, os.str());
  }
}
}  // namespace

LearningRateSchedule::LearningRateSchedule(double gamma, double gamma_bar)
    : values_{gamma}, gamma_bar_(gamma_bar) {
  check_value(gamma, gamma_bar_);
}

LearningRateSchedule::LearningRateSchedule(std::vector<double> breaks,
                                           std::vector<double> values,
                                           double gamma_bar)
    : breaks_(std::move(breaks)), values_(std::move(values)), gamma_bar_(gamma_bar) {
  if (values_.size() != breaks_.size() + 1)
    throw InvalidArgument(kModule, "piecewise schedule needs one more value than breaks");
  if (!std::is_sorted(breaks_.begin(), breaks_.end()) ||
      std::adjacent_find(breaks_.begin(), breaks_.end()) != breaks_.end())
    throw InvalidArgument(kModule, "breaks must be strictly increasing");
  for (double g : values_) check_value(g, gamma_bar_);
}

LearningRateSchedule::LearningRateSchedule(std::function<double(double)> fn,
                                           double gamma_bar)
    : fn_(std::move(fn)), gamma_bar_(gamma_bar) {
  if (!fn_) throw InvalidArgument(kModule, "empty schedule callable");
}

double LearningRateSchedule::operator()(double t) const {
  if (fn_) {
    const double g = fn_(t);
    check_value(g, gamma_bar_);
    return g;
  }
  const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
  return values_[static_cast<std::size_t>(it - breaks_.begin())];
}

double LearningRateSchedule::max_value() const {
  if (fn_) return gamma_bar_;
  return *std::max_element(values_.begin(), values_.end());
}

std::string LearningRateSchedule::describe() const {
  std::ostringstream os;
  if (fn_) {
    os << "callable(bound=" << gamma_bar_ << ")";
  } else if (values_.size() == 1) {
    os << values_[0];
  } else {
    os << "piecewise(";
    for (std::size_t j = 0; j < values_.size(); ++j) {
      if (j) os << ";" << breaks_[j - 1] << ":";
      os << values_[j];
    }
    os << ")";
  }
  return os.str();
}

}  // namespace gmmsgd

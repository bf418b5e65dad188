#include <cmath>
#include <sstream>

#include "gmmsgd/errors.hpp"
#include "gmmsgd/ode.hpp"

namespace gmmsgd {

std::string SolverSettings::describe() const {
  std::ostringstream os;
  os << "rk4(step=" << step << ",stretch_after=" << stretch_after
     << ",stretch_factor=" << stretch_factor << ",max_stiffness=" << max_stiffness
     << ",second_order=" << (second_order ? "true" : "false") << ")";
  return os.str();
}

namespace {

void check_finite(const FlatState& s, const char* module) {
  if (s.y.allFinite()) return;
  long idx = 0;
  for (; idx < s.y.size(); ++idx)
    if (!std::isfinite(s.y[idx])) break;
  const long mode = idx < static_cast<long>(s.d) * s.stride ? idx / s.stride : -1;
  throw NumericalError(module, "non-finite ODE state at mode", s.t, mode);
}

}  // namespace

void rk4_integrate(FlatState& s, const std::vector<double>& grid,
                   const SolverSettings& cfg, const Rhs& rhs,
                   const std::function<void(const FlatState&)>& on_grid,
                   const char* module) {
  check_grid(grid);
  if (!(cfg.step > 0) || !(cfg.max_stiffness > 0) || cfg.stretch_factor < 0)
    throw InvalidArgument(module, "invalid solver settings");
  if (grid.front() < s.t) throw InvalidArgument(module, "grid starts before the initial time");

  const long n = s.y.size();
  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), tmp(n);
  double rate = 0, unused = 0;

  for (double target : grid) {
    while (s.t < target) {
      rhs(s.t, s.y, k1, rate);
      double h = s.t < cfg.stretch_after ? cfg.step : std::max(cfg.step, cfg.stretch_factor * s.t);
      if (rate > 0) h = std::min(h, cfg.max_stiffness / rate);
      const double remaining = target - s.t;
      const double pieces = std::ceil(remaining / h - 1e-9);
      const bool last = pieces <= 1;
      h = last ? remaining : remaining / pieces;

      tmp = s.y + 0.5 * h * k1;
      rhs(s.t + 0.5 * h, tmp, k2, unused);
      tmp = s.y + 0.5 * h * k2;
      rhs(s.t + 0.5 * h, tmp, k3, unused);
      tmp = s.y + h * k3;
      rhs(s.t + h, tmp, k4, unused);
      s.y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      s.t = last ? target : s.t + h;
      check_finite(s, module);
    }
    if (on_grid) on_grid(s);
  }
}

}  // namespace gmmsgd

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gmmsgd {

/// One recorded time of a learning curve.
struct CurveRow {
  double t = 0;
  double loss = 0;
  double m = 0;      // overlap
  double V = 0;      // squared norm (distance for MSE)
  std::vector<double> B;
  std::optional<std::array<double, 4>> m_block;  // m00, m01, m10, m11
  std::optional<std::array<double, 4>> v_block;
  double align = 0;  // m / sqrt(V), 0 when V == 0
};

struct CurveMetadata {
  std::string kind = "ode";  // ode | sgd | hsgd
  std::optional<std::uint64_t> seed;
  std::string model_hash;
  std::string gamma;
  std::string settings;
  int d = 0;
};

struct LearningCurve {
  CurveMetadata meta;
  std::vector<CurveRow> rows;

  std::vector<double> times() const;
  std::vector<double> column(const std::string& name) const;
  /// Names of numeric observable columns present in every row.
  std::vector<std::string> columns() const;
  std::size_t size() const { return rows.size(); }
};

/// CSV with header t,loss,m,V,B1..Bk,m00,m01,m10,m11,v00,v01,v10,v11,align,seed,kind.
/// Absent blocks and the seed of deterministic runs are empty fields. Reals
/// are written in shortest round-trip form.
void write_csv(const LearningCurve& curve, std::ostream& out);
void write_csv(const LearningCurve& curve, const std::filesystem::path& path);
LearningCurve read_csv(std::istream& in);
LearningCurve read_csv(const std::filesystem::path& path);

std::string format_double(double x);

enum class Metric { Sup, L2 };
Metric metric_from_string(const std::string& s);

/// Per-column distance between two curves on their common time range. The
/// finer curve is linearly interpolated onto the coarser grid. L2 is the
/// root-mean-square over time (trapezoid rule). Throws on disjoint ranges.
std::map<std::string, double> compare(const LearningCurve& a, const LearningCurve& b,
                                      Metric metric = Metric::Sup);

/// Linear interpolation of (xs, ys) at x; xs strictly increasing, x inside.
double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x);

/// 0 followed by points_per_decade log-spaced points per decade on
/// [t_min, t_max] (t_max always included).
std::vector<double> log_grid(double t_min, double t_max, int points_per_decade = 32);
/// 0, spacing, 2 spacing, ..., t_max.
std::vector<double> linear_grid(double t_max, double spacing);
/// Throws unless strictly increasing and nonnegative.
void check_grid(const std::vector<double>& grid);

}  // namespace gmmsgd

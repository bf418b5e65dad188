#include "gmmsgd/curve.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gmmsgd/errors.hpp"

namespace gmmsgd {

namespace {

const char* kModule = "curve";

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, int line) {
  double v = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    // from_chars does not accept "inf"/"nan" spellings from every writer
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    if (s == "nan") return NAN;
    throw InvalidArgument(kModule, "line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

int num_b(const LearningCurve& c) {
  return c.rows.empty() ? 0 : static_cast<int>(c.rows.front().B.size());
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::vector<double> LearningCurve::times() const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.t);
  return out;
}

std::vector<std::string> LearningCurve::columns() const {
  std::vector<std::string> out{"loss", "m", "V"};
  for (int i = 0; i < num_b(*this); ++i) out.push_back("B" + std::to_string(i + 1));
  const bool blocks = !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const CurveRow& r) {
    return r.m_block.has_value() && r.v_block.has_value();
  });
  if (blocks) {
    for (const char* p : {"m", "v"})
      for (const char* b : {"00", "01", "10", "11"}) out.push_back(std::string(p) + b);
  }
  out.push_back("align");
  return out;
}

std::vector<double> LearningCurve::column(const std::string& name) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    if (name == "t") out.push_back(r.t);
    else if (name == "loss") out.push_back(r.loss);
    else if (name == "m") out.push_back(r.m);
    else if (name == "V") out.push_back(r.V);
    else if (name == "align") out.push_back(r.align);
    else if (name.size() >= 2 && name[0] == 'B') {
      const std::size_t i = std::stoul(name.substr(1)) - 1;
      if (i >= r.B.size()) throw InvalidArgument(kModule, "no column " + name);
      out.push_back(r.B[i]);
    } else if (name.size() == 3 && (name[0] == 'm' || name[0] == 'v')) {
      const auto& blk = name[0] == 'm' ? r.m_block : r.v_block;
      const int idx = (name[1] - '0') * 2 + (name[2] - '0');
      if (!blk || idx < 0 || idx > 3) throw InvalidArgument(kModule, "no column " + name);
      out.push_back((*blk)[idx]);
    } else {
      throw InvalidArgument(kModule, "no column " + name);
    }
  }
  return out;
}

void write_csv(const LearningCurve& curve, std::ostream& out) {
  const int k = num_b(curve);
  out << "t,loss,m,V";
  for (int i = 0; i < k; ++i) out << ",B" << i + 1;
  out << ",m00,m01,m10,m11,v00,v01,v10,v11,align,seed,kind\n";
  const std::string seed = curve.meta.seed ? std::to_string(*curve.meta.seed) : "";
  for (const auto& r : curve.rows) {
    out << format_double(r.t) << ',' << format_double(r.loss) << ','
        << format_double(r.m) << ',' << format_double(r.V);
    for (double b : r.B) out << ',' << format_double(b);
    for (const auto* blk : {&r.m_block, &r.v_block}) {
      for (int j = 0; j < 4; ++j) {
        out << ',';
        if (*blk) out << format_double((**blk)[j]);
      }
    }
    out << ',' << format_double(r.align) << ',' << seed << ',' << curve.meta.kind << '\n';
  }
}

void write_csv(const LearningCurve& curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument(kModule, "cannot write " + path.string());
  write_csv(curve, out);
}

LearningCurve read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument(kModule, "empty CSV");
  const auto header = split(line);
  std::map<std::string, int> col;
  for (int j = 0; j < static_cast<int>(header.size()); ++j) col[header[j]] = j;
  for (const char* req : {"t", "loss", "m", "V", "align", "seed", "kind"})
    if (!col.count(req)) throw InvalidArgument(kModule, std::string("CSV missing column '") + req + "'");
  int k = 0;
  while (col.count("B" + std::to_string(k + 1))) ++k;

  LearningCurve c;
  int lineno = 1;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split(line);
    if (f.size() != header.size())
      throw InvalidArgument(kModule, "line " + std::to_string(lineno) + ": expected " +
                                         std::to_string(header.size()) + " fields");
    auto num = [&](const std::string& name) { return parse_double(f[col.at(name)], lineno); };
    CurveRow r;
    r.t = num("t");
    r.loss = num("loss");
    r.m = num("m");
    r.V = num("V");
    r.align = num("align");
    for (int i = 0; i < k; ++i) r.B.push_back(num("B" + std::to_string(i + 1)));
    for (char p : {'m', 'v'}) {
      std::array<double, 4> blk{};
      bool present = true;
      for (int j = 0; j < 4; ++j) {
        const std::string nm = std::string(1, p) + std::to_string(j / 2) + std::to_string(j % 2);
        auto it = col.find(nm);
        if (it == col.end() || f[it->second].empty()) {
          present = false;
          break;
        }
        blk[j] = parse_double(f[it->second], lineno);
      }
      if (present) (p == 'm' ? r.m_block : r.v_block) = blk;
    }
    if (first) {
      const std::string& s = f[col.at("seed")];
      if (!s.empty()) c.meta.seed = std::stoull(s);
      c.meta.kind = f[col.at("kind")];
      first = false;
    }
    c.rows.push_back(std::move(r));
  }
  return c;
}

LearningCurve read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument(kModule, "cannot read " + path.string());
  return read_csv(in);
}

Metric metric_from_string(const std::string& s) {
  if (s == "sup") return Metric::Sup;
  if (s == "L2" || s == "l2") return Metric::L2;
  throw InvalidArgument(kModule, "unknown metric '" + s + "' (expected sup or L2)");
}

double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (xs.empty()) throw InvalidArgument(kModule, "interpolation on empty grid");
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t j = static_cast<std::size_t>(it - xs.begin());
  const double x0 = xs[j - 1], x1 = xs[j];
  const double w = (x - x0) / (x1 - x0);
  return (1 - w) * ys[j - 1] + w * ys[j];
}

std::map<std::string, double> compare(const LearningCurve& a, const LearningCurve& b,
                                      Metric metric) {
  if (a.rows.empty() || b.rows.empty()) throw InvalidArgument(kModule, "cannot compare empty curves");
  const auto ta = a.times(), tb = b.times();
  const double lo = std::max(ta.front(), tb.front());
  const double hi = std::min(ta.back(), tb.back());
  if (lo > hi) throw InvalidArgument(kModule, "curves have disjoint time ranges");

  // pick the coarser grid restricted to the overlap
  auto count_in = [&](const std::vector<double>& t) {
    return std::count_if(t.begin(), t.end(), [&](double x) { return x >= lo && x <= hi; });
  };
  const bool a_coarse = count_in(ta) <= count_in(tb);
  const LearningCurve& coarse = a_coarse ? a : b;
  const LearningCurve& fine = a_coarse ? b : a;
  const auto tc = coarse.times(), tf = fine.times();
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < tc.size(); ++j)
    if (tc[j] >= lo && tc[j] <= hi) idx.push_back(j);

  const auto ca = a.columns(), cb = b.columns();
  std::map<std::string, double> out;
  for (const auto& name : ca) {
    if (std::find(cb.begin(), cb.end(), name) == cb.end()) continue;
    const auto yc = coarse.column(name), yf = fine.column(name);
    std::vector<double> diff;
    std::vector<double> tt;
    for (std::size_t j : idx) {
      diff.push_back(yc[j] - interpolate(tf, yf, tc[j]));
      tt.push_back(tc[j]);
    }
    double value = 0;
    if (metric == Metric::Sup) {
      for (double x : diff) value = std::max(value, std::abs(x));
    } else if (tt.size() == 1 || tt.back() == tt.front()) {
      value = std::abs(diff.front());
    } else {
      double acc = 0;
      for (std::size_t j = 1; j < tt.size(); ++j)
        acc += 0.5 * (diff[j] * diff[j] + diff[j - 1] * diff[j - 1]) * (tt[j] - tt[j - 1]);
      value = std::sqrt(acc / (tt.back() - tt.front()));
    }
    out[name] = value;
  }
  return out;
}

std::vector<double> log_grid(double t_min, double t_max, int points_per_decade) {
  if (!(t_min > 0) || !(t_max > t_min) || points_per_decade < 1)
    throw InvalidArgument(kModule, "log grid needs 0 < t_min < t_max and points_per_decade >= 1");
  std::vector<double> g{0.0};
  const double l0 = std::log10(t_min), l1 = std::log10(t_max);
  const int n = static_cast<int>(std::ceil((l1 - l0) * points_per_decade - 1e-9));
  for (int j = 0; j <= n; ++j) {
    const double t = std::pow(10.0, l0 + (l1 - l0) * j / std::max(n, 1));
    g.push_back(j == 0 ? t_min : j == n ? t_max : t);
  }
  return g;
}

std::vector<double> linear_grid(double t_max, double spacing) {
  if (!(t_max > 0) || !(spacing > 0)) throw InvalidArgument(kModule, "linear grid needs t_max, spacing > 0");
  const long n = std::lround(std::ceil(t_max / spacing - 1e-9));
  std::vector<double> g;
  g.reserve(static_cast<std::size_t>(n) + 1);
  for (long j = 0; j <= n; ++j) g.push_back(std::min(t_max, j * spacing));
  g.back() = t_max;
  return g;
}

void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw InvalidArgument(kModule, "empty output grid");
  if (grid.front() < 0 || !std::isfinite(grid.back()))
    throw InvalidArgument(kModule, "grid times must be finite and nonnegative");
  for (std::size_t j = 1; j < grid.size(); ++j)
    if (!(grid[j] > grid[j - 1])) throw InvalidArgument(kModule, "grid must be strictly increasing");
}

}  // namespace gmmsgd

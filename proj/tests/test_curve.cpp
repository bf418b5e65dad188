#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "gmmsgd/curve.hpp"
#include "gmmsgd/errors.hpp"

using namespace gmmsgd;

namespace {

LearningCurve make_curve(const std::vector<double>& ts, double (*f)(double), bool blocks = false) {
  LearningCurve c;
  for (double t : ts) {
    CurveRow r;
    r.t = t;
    r.loss = f(t);
    r.m = 0.1 * t + 1.0 / 3;
    r.V = std::exp(-t);
    r.B = {r.V, 2 * r.V};
    r.align = r.m / std::sqrt(r.V);
    if (blocks) {
      r.m_block = std::array<double, 4>{1e-300, -0.0, 1.0 / 7, 123456789.123};
      r.v_block = std::array<double, 4>{0, 1, 2, 3};
    }
    c.rows.push_back(r);
  }
  return c;
}

double ident(double t) { return t; }
double zero(double) { return 0; }
double sq(double t) { return t * t; }

}  // namespace

TEST(CurveCsv, HeaderSchema) {
  std::ostringstream os;
  auto c = make_curve({0, 1}, ident);
  c.meta.kind = "ode";
  write_csv(c, os);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')),
            "t,loss,m,V,B1,B2,m00,m01,m10,m11,v00,v01,v10,v11,align,seed,kind");
  EXPECT_NE(os.str().find(",,,,,,,,"), std::string::npos);  // absent blocks and seed
}

TEST(CurveCsv, RoundTripIsExact) {
  auto c = make_curve(log_grid(0.01, 100, 7), sq, true);
  c.meta.kind = "sgd";
  c.meta.seed = 18446744073709551615ull;
  std::stringstream ss;
  write_csv(c, ss);
  const auto back = read_csv(ss);
  ASSERT_EQ(back.size(), c.size());
  EXPECT_EQ(back.meta.kind, "sgd");
  EXPECT_EQ(back.meta.seed, c.meta.seed);
  for (std::size_t j = 0; j < c.size(); ++j) {
    EXPECT_EQ(back.rows[j].t, c.rows[j].t);
    EXPECT_EQ(back.rows[j].loss, c.rows[j].loss);
    EXPECT_EQ(back.rows[j].m, c.rows[j].m);
    EXPECT_EQ(back.rows[j].V, c.rows[j].V);
    EXPECT_EQ(back.rows[j].B, c.rows[j].B);
    EXPECT_EQ(back.rows[j].align, c.rows[j].align);
    EXPECT_EQ(back.rows[j].m_block, c.rows[j].m_block);
    EXPECT_EQ(back.rows[j].v_block, c.rows[j].v_block);
  }
}

TEST(CurveCsv, RejectsMalformed) {
  std::istringstream missing("t,loss,m\n0,1,2\n");
  EXPECT_THROW(read_csv(missing), InvalidArgument);
  std::istringstream ragged("t,loss,m,V,align,seed,kind\n0,1,2,3\n");
  EXPECT_THROW(read_csv(ragged), InvalidArgument);
  std::istringstream bad("t,loss,m,V,align,seed,kind\n0,x,2,3,4,,ode\n");
  EXPECT_THROW(read_csv(bad), InvalidArgument);
}

TEST(CurveColumns, Lookup) {
  const auto c = make_curve({0, 1, 2}, ident, true);
  EXPECT_EQ(c.column("loss"), (std::vector<double>{0, 1, 2}));
  EXPECT_EQ(c.column("B2")[0], 2.0);
  EXPECT_EQ(c.column("v11")[2], 3.0);
  EXPECT_THROW(c.column("B3"), InvalidArgument);
  const auto cols = c.columns();
  EXPECT_NE(std::find(cols.begin(), cols.end(), "m00"), cols.end());
  const auto plain = make_curve({0}, ident).columns();
  EXPECT_EQ(std::find(plain.begin(), plain.end(), "m00"), plain.end());
}

TEST(Compare, SelfIsZero) {
  const auto c = make_curve(log_grid(0.01, 10), sq);
  for (auto metric : {Metric::Sup, Metric::L2})
    for (const auto& [col, v] : compare(c, c, metric)) EXPECT_EQ(v, 0) << col;
}

TEST(Compare, SupAndRmsOfKnownDifference) {
  const auto a = make_curve(linear_grid(1, 0.001), ident);
  const auto b = make_curve(linear_grid(1, 0.001), zero);
  EXPECT_NEAR(compare(a, b, Metric::Sup).at("loss"), 1.0, 1e-12);
  EXPECT_NEAR(compare(a, b, Metric::L2).at("loss"), std::sqrt(1.0 / 3), 1e-6);
  EXPECT_EQ(compare(a, b, Metric::Sup).at("m"), 0);
}

TEST(Compare, InterpolatesOntoCoarserGridOverOverlap) {
  // fine curve is linear so interpolation is exact; coarse curve lives on [0.5, 2]
  const auto fine = make_curve(linear_grid(3, 0.01), ident);
  const auto coarse = make_curve({0.5, 1.0, 2.0}, ident);
  EXPECT_NEAR(compare(fine, coarse).at("loss"), 0, 1e-12);
  EXPECT_NEAR(compare(coarse, fine).at("loss"), 0, 1e-12);
}

TEST(Compare, DisjointRangesThrow) {
  EXPECT_THROW(compare(make_curve({0, 1}, ident), make_curve({2, 3}, ident)), InvalidArgument);
  EXPECT_EQ(metric_from_string("L2"), Metric::L2);
  EXPECT_THROW(metric_from_string("max"), InvalidArgument);
}

TEST(Grids, LogGridShape) {
  const auto g = log_grid(0.01, 1e4, 32);
  EXPECT_EQ(g.front(), 0);
  EXPECT_EQ(g[1], 0.01);
  EXPECT_EQ(g.back(), 1e4);
  EXPECT_EQ(g.size(), 1u + 6 * 32 + 1);
  EXPECT_NO_THROW(check_grid(g));
  EXPECT_THROW(check_grid({0, 1, 1}), InvalidArgument);
  EXPECT_THROW(check_grid({-1, 1}), InvalidArgument);
  EXPECT_THROW(log_grid(0, 1), InvalidArgument);
}

TEST(Grids, LinearGrid) {
  const auto g = linear_grid(1, 0.25);
  EXPECT_EQ(g, (std::vector<double>{0, 0.25, 0.5, 0.75, 1}));
  EXPECT_NEAR(interpolate({0, 1, 3}, {0, 2, 0}, 2), 1, 1e-15);
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(std::stod(format_double(1.0 / 3)), 1.0 / 3);
}

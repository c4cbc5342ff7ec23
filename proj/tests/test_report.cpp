#include <cmath>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "knnrm/report.hpp"

using namespace knnrm;

namespace {

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST(Format, RoundTripsDoubles) {
  for (double v : {0.1, 1.0 / 3.0, 2.95, 1e-300, -7.25e12}) {
    EXPECT_EQ(std::stod(report::fmt(v)), v);
  }
  EXPECT_EQ(report::fmt(NAN), "nan");
  EXPECT_EQ(report::fmt(-INFINITY), "-inf");
  EXPECT_EQ(report::fmt_sig(0.089125, 2), "0.089");
}

TEST(Csv, LedgerHasNameValueRows) {
  ParamConfig c;
  c.query = {0.5};
  const auto L = theory::constants_ledger(codes::square1d(), c, c.query);
  std::ostringstream os;
  report::write_ledger_csv(os, L);
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("name,value\n", 0), 0u);
  EXPECT_NE(s.find("\nsqrtC1,2.9500000000000002\n"), std::string::npos);
  EXPECT_NE(s.find("\nN0,11\n"), std::string::npos);
  EXPECT_EQ(count(s, "\n"), L.entries().size() + 1);
}

TEST(Csv, SweepHeaderAndRows) {
  ExperimentResult r;
  r.seed = 9;
  r.cells.push_back({0.5, 0.25, 100, 10, 0.01, 0.002, 0.7, 0.3, 0.0});
  std::ostringstream os;
  report::write_sweep_csv(os, r);
  EXPECT_EQ(os.str(), "beta,gamma,n,reps,mse,std_error,update_fraction,seed\n0.5,0.25,100,10,0.01,0.002,"
                      "0.29999999999999999,9\n");
}

TEST(Csv, BoundColumns) {
  ParamConfig c;
  c.query = {0.5};
  const auto L = theory::constants_ledger(codes::square1d(), c, c.query);
  const auto curve = theory::bound_curve(L, c, {12, 20});
  std::ostringstream os;
  report::write_bound_csv(os, curve);
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("n,bound,T0,T1,T2\n12,", 0), 0u);
  EXPECT_EQ(count(s, "\n"), 3u);
}

TEST(Svg, SelfContainedHeatmap) {
  ExperimentResult r;
  for (double b : {0.1, 0.5, 0.9}) {
    for (double g : {0.1, 0.5, 0.9}) r.cells.push_back({b, g, 10, 1, b * g, 0, 0, 0});
  }
  std::ostringstream os;
  report::write_heatmap_svg(os, r, "a < b & c");
  const std::string s = os.str();
  EXPECT_NE(s.find("width=\"800\" height=\"600\""), std::string::npos);
  EXPECT_NE(s.find("a &lt; b &amp; c"), std::string::npos);
  EXPECT_NE(s.find(">beta</text>"), std::string::npos);
  EXPECT_NE(s.find(">gamma</text>"), std::string::npos);
  EXPECT_EQ(count(s, "<title>"), 9u);
  EXPECT_EQ(s.find("href"), std::string::npos);
  EXPECT_NE(s.find("#ffffff"), std::string::npos);  // smallest mse
  EXPECT_NE(s.find("#ff0000"), std::string::npos);  // largest mse
}

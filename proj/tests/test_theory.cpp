#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <gtest/gtest.h>

#include "knnrm/code_models.hpp"
#include "knnrm/rng.hpp"
#include "knnrm/theory.hpp"

using namespace knnrm;
using namespace knnrm::theory;

namespace {

ParamConfig square_optimal() {
  const auto p = optimal_params(1, 0.05, 0.3);
  ParamConfig c;
  c.alpha = 0.95;
  c.beta = p.beta;
  c.gamma = p.gamma;
  c.epsilon = p.epsilon;
  c.theta0 = 0.3;
  c.query = {0.5};
  return c;
}

ConstantsLedger square_ledger() {
  return constants_ledger(codes::square1d(), square_optimal(), std::vector<double>{0.5});
}

}  // namespace

TEST(Constants, VolumeOfUnitBall) {
  EXPECT_NEAR(volume_constant(1), 2.0, 1e-14);
  EXPECT_NEAR(volume_constant(2), std::numbers::pi, 1e-14);
  EXPECT_NEAR(volume_constant(3), 4.0 * std::numbers::pi / 3.0, 1e-14);
}

TEST(Constants, SquareCodeLedger) {
  const ConstantsLedger L = square_ledger();
  EXPECT_NEAR(L.sqrtC1, 2.95, 1e-14);
  EXPECT_NEAR(L.C1, 2.95 * 2.95, 1e-12);
  EXPECT_NEAR(L.C4, 2.0, 1e-14);
  EXPECT_NEAR(L.C2, 0.05 / 2.95, 1e-15);
  EXPECT_NEAR(L.C2, 0.016949, 1e-6);
  EXPECT_NEAR(L.C3, 22.0 / 3.0, 1e-12);
  EXPECT_NEAR(L.C3_summary, 25.0 / 3.0, 1e-12);
  EXPECT_EQ(L.N0, 11);  // ceil(2^(1/0.3))
  EXPECT_EQ(L.N3, 2 * (L.N0 + 1));
  EXPECT_EQ(L.C9, std::min(L.C7, L.C8));
  ASSERT_TRUE(L.N2.has_value());
  ASSERT_TRUE(L.N4.has_value());
  EXPECT_EQ(*L.N4, std::max({L.N0 + 2, L.N1, *L.N2, L.N3}));
  EXPECT_EQ(L.regime, Regime::variance_dominated);
}

TEST(Constants, InvariantsAcrossCodes) {
  for (const auto& name : kCodeNames) {
    const CodeModel code = code_by_name(name);
    const auto p = optimal_params(code.d, 0.05, 0.2);
    ParamConfig c;
    c.alpha = 0.9;
    c.beta = p.beta;
    c.gamma = p.gamma;
    c.epsilon = p.epsilon;
    c.query.assign(code.d, 0.5);
    const ConstantsLedger L = constants_ledger(code, c, c.query);
    EXPECT_NEAR(L.sqrtC1, code.U_Y - code.L_Y + c.alpha, 1e-14);
    EXPECT_NEAR(L.C1, L.sqrtC1 * L.sqrtC1, 1e-12);
    EXPECT_GT(L.C2, 0.0);
    EXPECT_NEAR(L.C2, std::min(code.C_g, (1 - c.alpha) / (code.U_Y + c.alpha - code.L_Y)), 1e-15);
    EXPECT_EQ(L.N0, static_cast<std::int64_t>(std::ceil(std::exp2(1.0 / (c.epsilon - (1 - c.beta))))));
    EXPECT_GE(L.C5, 0.0);
    EXPECT_GE(L.C6, 0.0);
    if (L.N4) {
      EXPECT_EQ(*L.N4, std::max({L.N0 + 2, L.N1, *L.N2, L.N3}));
    }
  }
}

TEST(Constants, RejectsBadModelAndQuery) {
  ModelConstants m = model_constants(codes::square1d());
  m.C_input = 0.0;
  EXPECT_THROW(constants_ledger(m, square_optimal()), ConfigError);
  m = model_constants(codes::square1d());
  m.C_g = -1.0;
  EXPECT_THROW(constants_ledger(m, square_optimal()), ConfigError);
  EXPECT_THROW(constants_ledger(codes::square1d(), square_optimal(), std::vector<double>{2.0}), DomainError);
}

TEST(Constants, C2Override) {
  ModelConstants m = model_constants(codes::square1d());
  m.C2_override = 0.02;
  EXPECT_EQ(constants_ledger(m, square_optimal()).C2, 0.02);
}

TEST(Constants, PeakMatchesIntegerScan) {
  // Cases whose peak lies well inside the scanned range.
  for (double eps : {0.6, 0.75}) {
    for (double power : {0.0, 0.5, 1.3, 2.0}) {
      const double n_min = 5.0;
      double brute = 0.0;
      for (double n = n_min; n < 1e6; n += 1.0) {
        brute = std::max(brute, 3.0 * std::exp(-0.375 * std::pow(n, 1 - eps)) * std::pow(n, power));
      }
      EXPECT_NEAR(peak_exp_power(3.0, eps, power, n_min) / brute, 1.0, 1e-9) << eps << " " << power;
    }
  }
}

TEST(Kappa, MatchesHighPrecisionSummation) {
  using Big = boost::multiprecision::cpp_dec_float_50;
  for (double expo : {0.55, 1.0, 1.25}) {
    for (auto [m, n] : {std::pair<std::size_t, std::size_t>{0, 1000}, {11, 20000}, {5000, 5001}, {100, 30000}}) {
      Big exact = 0;
      for (std::size_t i = m + 1; i <= n; ++i) exact += boost::multiprecision::pow(Big(i), Big(-expo));
      const double ref = exact.convert_to<double>();
      EXPECT_NEAR(kappa_difference(m, n, expo) / ref, 1.0, 1e-12);
      // prefix differences cancel, so only absolute accuracy is meaningful
      const auto prefix = kappa_prefix(n, expo);
      EXPECT_NEAR(prefix[n] - prefix[m], ref, 1e-13 * prefix[n]);
    }
  }
}

TEST(Bound, RejectsEarlyN) {
  const ConstantsLedger L = square_ledger();
  EXPECT_THROW(mse_bound(L, square_optimal(), static_cast<std::size_t>(L.N0)), ConfigError);
  EXPECT_NO_THROW(mse_bound(L, square_optimal(), static_cast<std::size_t>(L.N0 + 1)));
}

TEST(Bound, CurveMatchesDirectSummation) {
  for (double c2 : {0.0169, 0.02, 1.0}) {
    ModelConstants m = model_constants(codes::square1d());
    m.C2_override = c2;
    const ParamConfig c = square_optimal();
    const ConstantsLedger L = constants_ledger(m, c);
    const std::vector<std::size_t> ns{12, 13, 50, 100, 333, 1000, 2000};
    const BoundCurve curve = bound_curve(L, c, ns);
    ASSERT_EQ(curve.n_values, ns);
    for (std::size_t i = 0; i < ns.size(); ++i) {
      const BoundTerms direct = mse_bound_terms(L, c, ns[i]);
      EXPECT_NEAR(curve.bound_values[i] / direct.total(), 1.0, 1e-10);
      EXPECT_NEAR(curve.terms[i].t1 / direct.t1, 1.0, 1e-10);
      EXPECT_NEAR(curve.terms[i].t2 / direct.t2, 1.0, 1e-10);
      EXPECT_TRUE(std::isfinite(curve.bound_values[i]));
      EXPECT_GT(curve.bound_values[i], 0.0);
    }
  }
}

TEST(Bound, DecaysWhenKappaDiverges) {
  // epsilon + gamma <= 1
  ParamConfig c = square_optimal();
  c.beta = 0.6;
  c.gamma = 0.3;
  c.epsilon = 0.6;
  ModelConstants m = model_constants(codes::square1d());
  m.C2_override = 1.0;
  const ConstantsLedger fast = constants_ledger(m, c);
  EXPECT_LT(mse_bound(fast, c, 2000), mse_bound(fast, c, 1000));
  const ConstantsLedger slow = constants_ledger(model_constants(codes::square1d()), c);
  EXPECT_LT(mse_bound(slow, c, 100000), mse_bound(slow, c, 2000));
}

TEST(Bound, CannotDecayWhenKappaConverges) {
  // At gamma = 1/2, epsilon = 3/4 the contraction factor stays above
  // exp(-2 C2 sum_i i^(-5/4)), so the remainders pile up.
  const ParamConfig c = square_optimal();
  for (double c2 : {0.02, 1.0}) {
    ModelConstants m = model_constants(codes::square1d());
    m.C2_override = c2;
    const ConstantsLedger L = constants_ledger(m, c);
    EXPECT_GT(mse_bound(L, c, 2000), mse_bound(L, c, 1000)) << "C2=" << c2;
  }
}

TEST(Rate, Examples) {
  const auto v = rate_exponent(0.55, 0.5, 0.75, 1);
  EXPECT_EQ(v.regime, Regime::variance_dominated);
  EXPECT_NEAR(v.exponent, 0.15, 1e-14);
  const auto b = rate_exponent(0.4, 0.2, 0.7, 2);
  EXPECT_EQ(b.regime, Regime::bias_dominated);
  EXPECT_NEAR(b.exponent, 0.1, 1e-14);
  // epsilon -> 1 - beta limit
  const double eps = 0.45 + 1e-9;
  EXPECT_NEAR(rate_exponent(0.55, 0.5, eps, 1).exponent, 0.45, 1e-8);
  EXPECT_EQ(rate_exponent(0.55, 0.5, 0.95, 1).regime, Regime::no_guarantee);
  EXPECT_THROW(rate_exponent(0.4, 0.5, 0.75, 1), ConfigError);
}

TEST(Optimal, Examples) {
  EXPECT_DOUBLE_EQ(optimal_params(1, 0.05, 0.3).gamma, 0.5);
  EXPECT_DOUBLE_EQ(optimal_params(2, 0.05, 0.3).gamma, 1.0 / 3.0);
  const auto p3 = optimal_params(3, 0.05, 0.0);
  EXPECT_NEAR(p3.exponent, 0.2, 1e-15);
  EXPECT_NEAR(p3.beta, 0.3, 1e-15);
  EXPECT_NEAR(p3.epsilon, 0.7, 1e-15);
  EXPECT_THROW(optimal_params(0, 0.05, 0.3), ConfigError);
  EXPECT_THROW(optimal_params(1, 0.0, 0.3), ConfigError);
  EXPECT_THROW(optimal_params(1, 0.6, 0.3), ConfigError);
}

TEST(Precision, Formula) {
  EXPECT_NEAR(*expected_precision(1, 0.3, 1000), std::pow(1000.0, -0.35), 1e-15);
  EXPECT_NEAR(*expected_precision(2, 0.3, 1000), 0.28, 0.005);
  EXPECT_NEAR(*expected_precision(1, 0.0, 1000), 0.031, 0.001);
  EXPECT_NEAR(*expected_precision(2, 0.0, 1000), 0.1, 1e-12);
  EXPECT_FALSE(expected_precision(1, 1.0, 1000).has_value());
}

TEST(Tails, Examples) {
  const auto t = binomial_tail_bounds(16, 0.5);
  EXPECT_NEAR(t.lower, std::exp(-0.75), 1e-15);
  EXPECT_NEAR(t.lower, 0.4724, 1e-4);
  EXPECT_NEAR(t.upper, 0.0498, 1e-4);
  EXPECT_THROW(binomial_tail_bounds(0, 0.5), ConfigError);
  EXPECT_THROW(binomial_tail_bounds(5, 0.0), ConfigError);
}

TEST(Tails, DominateEmpiricalFrequencies) {
  std::size_t violations = 0;
  Rng rng = make_stream(31, 0);
  for (std::size_t n : {20u, 200u, 1000u}) {
    for (double p : {0.02, 0.1, 0.3, 0.7}) {
      std::binomial_distribution<int> binom(static_cast<int>(n), p);
      const int draws = 100000;
      int low = 0, high = 0;
      for (int i = 0; i < draws; ++i) {
        const double f = static_cast<double>(binom(rng)) / static_cast<double>(n);
        low += f < p / 2 ? 1 : 0;
        high += f > 2 * p ? 1 : 0;
      }
      const auto b = binomial_tail_bounds(n, p);
      violations += static_cast<double>(low) / draws > b.lower ? 1 : 0;
      violations += static_cast<double>(high) / draws > b.upper ? 1 : 0;
    }
  }
  EXPECT_EQ(violations, 0u);
}

TEST(Deviation, ExamplesAndMonotone) {
  ParamConfig c = square_optimal();
  EXPECT_NEAR(deviation_rank_check(c, 255), std::exp(-1.5), 1e-15);
  EXPECT_NEAR(deviation_rank_check(c, 255), 0.2231, 1e-4);
  double prev = 1.0;
  for (std::size_t n = 1; n < 5000; ++n) {
    const double v = deviation_rank_check(c, n);
    ASSERT_LT(v, prev);
    prev = v;
  }
  c.epsilon = 0.4;
  EXPECT_THROW(deviation_rank_check(c, 10), ConfigError);
}

TEST(Deviation, DominatesSimulatedOrderStatistic) {
  // square1d at x = 0.5: |X - x| ~ U[0, 1/2], so F(r) = 2r.
  const ParamConfig c = square_optimal();
  const std::size_t n = 500, reps = 10000;
  const std::size_t k = k_schedule(n + 1, c.beta);
  const double threshold = std::pow(static_cast<double>(n + 1), -c.epsilon);
  Rng rng = make_stream(37, 0);
  std::vector<double> dist(n);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    for (auto& v : dist) v = std::abs(uniform(rng, 0.0, 1.0) - 0.5);
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
    hits += 2.0 * dist[k - 1] <= threshold ? 1 : 0;
  }
  EXPECT_LE(static_cast<double>(hits) / reps, deviation_rank_check(c, n));
}

TEST(Pn, MomentsOfTheBetaLaw) {
  const std::size_t n = 200;
  const std::size_t k = k_schedule(n + 1, 0.55);
  Rng rng = make_stream(41, 0);
  std::vector<double> u(n);
  const int reps = 10000;
  double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
  for (int r = 0; r < reps; ++r) {
    for (auto& v : u) v = std::abs(uniform(rng, 0.0, 1.0) - 0.5) * 2.0;
    std::nth_element(u.begin(), u.begin() + static_cast<std::ptrdiff_t>(k - 1), u.end());
    const double p = u[k - 1];
    s1 += p;
    s2 += p * p;
    s3 += p * p * p;
    s4 += p * p * p * p;
  }
  const double mean = s1 / reps;
  const double m2 = s2 / reps;
  const double se1 = std::sqrt((m2 - mean * mean) / reps);
  const double se2 = std::sqrt((s4 / reps - m2 * m2) / reps);
  EXPECT_NEAR(mean, pn_mean(n, k), 3 * se1);
  EXPECT_NEAR(m2, pn_second_moment(n, k), 3 * se2);
}

TEST(Pn, QuotedSecondMomentFormula) {
  EXPECT_NEAR(pn_second_moment_quoted(1, 1), 5.0 / 12.0, 1e-15);
  EXPECT_NEAR(pn_second_moment(1, 1), 1.0 / 3.0, 1e-15);
}

TEST(Recursion, UnrolledBoundDominatesAdmissibleSequences) {
  Rng rng = make_stream(43, 0);
  std::size_t violations = 0;
  for (int seq = 0; seq < 1000; ++seq) {
    const std::size_t len = 1 + rng() % 200;
    std::vector<double> c(len), d(len);
    for (std::size_t i = 0; i < len; ++i) {
      c[i] = seq % 5 == 0 ? 1.0 : uniform(rng, 0.0, 1.0) * (seq % 2 == 0 ? 1.0 : 0.05);
      d[i] = uniform(rng, 1e-6, 1.0) * std::pow(static_cast<double>(i + 1), -uniform(rng, 0.0, 2.0));
    }
    double b = uniform(rng, 0.0, 10.0);
    const auto bound = unrolled_recursion_bound(b, c, d);
    for (std::size_t i = 0; i < len; ++i) {
      const double slack = seq % 3 == 0 ? 0.0 : uniform(rng, 0.0, 1.0) * d[i];
      b = b * (1.0 - c[i]) + d[i] - slack;
      if (b > bound[i] * (1 + 1e-12)) ++violations;
    }
  }
  EXPECT_EQ(violations, 0u);
}

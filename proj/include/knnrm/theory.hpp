#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "knnrm/code_models.hpp"
#include "knnrm/error.hpp"
#include "knnrm/estimator.hpp"
#include "knnrm/schedules.hpp"

namespace knnrm::theory {

/// Model constants entering the error bounds.
struct ModelConstants {
  std::size_t d = 1;
  double M = 0.0;
  double C_input = 0.0;
  double C_g = 0.0;
  double L_Y = 0.0;
  double U_Y = 0.0;
  std::optional<double> C2_override;  // replaces the derived contraction constant
};

inline ModelConstants model_constants(const CodeModel& code) {
  return {code.d, code.M_bound, code.C_input, code.C_g, code.L_Y, code.U_Y, std::nullopt};
}

// ---------------------------------------------------------------------------
// Summation helpers

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      carry_ += (sum_ - t) + v;
    } else {
      carry_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  [[nodiscard]] double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

/// kappa_j = sum_{i=1}^{j} i^(-exponent) for j = 0..n.
inline std::vector<double> kappa_prefix(std::size_t n, double exponent) {
  std::vector<double> kappa(n + 1, 0.0);
  CompensatedSum acc;
  for (std::size_t i = 1; i <= n; ++i) {
    acc.add(std::pow(static_cast<double>(i), -exponent));
    kappa[i] = acc.value();
  }
  return kappa;
}

/// kappa_n - kappa_m summed directly over i = m+1..n (smallest terms first).
inline double kappa_difference(std::size_t m, std::size_t n, double exponent) {
  detail::require(m <= n, "kappa_difference: m <= n violated");
  CompensatedSum acc;
  for (std::size_t i = n; i > m; --i) acc.add(std::pow(static_cast<double>(i), -exponent));
  return acc.value();
}

// ---------------------------------------------------------------------------
// Closed-form constants

/// Volume of the unit ball in R^d.
inline double volume_constant(std::size_t d) {
  const double h = static_cast<double>(d) / 2.0;
  return std::pow(std::numbers::pi, h) / std::tgamma(h + 1.0);
}

/// Localization constant as derived in the order-statistic moment bound:
/// (4 / (C_input C4))^(1/d) (1 + 8/(3d)).
inline double c3_derived(std::size_t d, double c_input) {
  const double dd = static_cast<double>(d);
  return std::pow(4.0 / (c_input * volume_constant(d)), 1.0 / dd) * (1.0 + 8.0 / (3.0 * dd));
}

/// The same constant in the form listed in the constants summary:
/// 2^(1/d) (1 + 8/(3d) + 1/(C_input^(1/d) C4)). Kept for comparison only.
inline double c3_summary_form(std::size_t d, double c_input) {
  const double dd = static_cast<double>(d);
  return std::pow(2.0, 1.0 / dd) *
         (1.0 + 8.0 / (3.0 * dd) + 1.0 / (std::pow(c_input, 1.0 / dd) * volume_constant(d)));
}

/// Radius scale ((2 (k_{n+1} + 1)) / ((n+1) C_input C4))^(1/d).
inline double c10(std::size_t d, std::size_t n, double beta, double c_input) {
  const double k = static_cast<double>(k_schedule(n + 1, beta));
  const double ratio = 2.0 * (k + 1.0) / ((static_cast<double>(n) + 1.0) * c_input * volume_constant(d));
  return std::pow(ratio, 1.0 / static_cast<double>(d));
}

/// Rank after which the deviation inequality on P_n holds:
/// ceil(2^(1 / (epsilon - (1 - beta)))).
inline std::int64_t rank_n0(double beta, double epsilon) {
  detail::require(epsilon > 1.0 - beta, "epsilon > 1 - beta violated");
  const double expo = 1.0 / (epsilon - (1.0 - beta));
  detail::require(expo < 52.0, "N0 = 2^(1/(epsilon - (1 - beta))) exceeds 2^52; widen epsilon - (1 - beta)");
  return static_cast<std::int64_t>(std::ceil(std::exp2(expo)));
}

/// max over integers n >= n_min of scale * exp(-3/8 n^(1-epsilon)) * n^power.
/// The maximand is unimodal in n with its stationary point at
/// (8 power / (3 (1 - epsilon)))^(1/(1-epsilon)), so the integer maximum sits
/// at n_min or at a neighbour of that point.
inline double peak_exp_power(double scale, double epsilon, double power, double n_min) {
  const double a = 1.0 - epsilon;
  auto log_f = [&](double n) { return std::log(scale) - 0.375 * std::pow(n, a) + power * std::log(n); };
  double best = log_f(n_min);
  if (power > 0.0) {
    const double stationary = std::pow(8.0 * power / (3.0 * a), 1.0 / a);
    for (double n : {std::floor(stationary), std::ceil(stationary)}) {
      if (n > n_min) best = std::max(best, log_f(n));
    }
  }
  return std::exp(best);
}

enum class Regime { variance_dominated, bias_dominated, no_guarantee };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::variance_dominated: return "variance-dominated";
    case Regime::bias_dominated: return "bias-dominated";
    case Regime::no_guarantee: return "no-guarantee";
  }
  return "?";
}

struct RateExponent {
  Regime regime;
  double exponent;  // power of 1/n in the mean square error bound
};

/// Polynomial decay rate of the mean square error bound.
inline RateExponent rate_exponent(double beta, double gamma, double epsilon, std::size_t d) {
  detail::require(d >= 1, "d >= 1 violated");
  detail::require(beta > 0.0 && beta < 1.0, "0 < beta < 1 violated");
  detail::require(gamma > 0.0 && gamma <= beta, "0 < gamma <= beta violated");
  detail::require(epsilon > 1.0 - beta && epsilon < 1.0, "1 - beta < epsilon < 1 violated");
  const double dd = static_cast<double>(d);
  RateExponent r{};
  if (beta > 1.0 - dd * gamma) {
    r = {Regime::variance_dominated, -epsilon + (1.0 + 1.0 / dd) * (1.0 - beta)};
  } else {
    r = {Regime::bias_dominated, gamma - beta + 1.0 - epsilon};
  }
  if (!(r.exponent > 0.0)) r.regime = Regime::no_guarantee;
  return r;
}

// ---------------------------------------------------------------------------
// Constants ledger

struct ConstantsLedger {
  std::size_t d = 1;
  double alpha = 0.0;
  double M = 0.0;
  double C_input = 0.0;
  double C_g = 0.0;
  double L_Y = 0.0;
  double U_Y = 0.0;

  double sqrtC1 = 0.0;
  double C1 = 0.0;
  double C2 = 0.0;
  double C3 = 0.0;
  double C3_summary = 0.0;
  double C4 = 0.0;
  double C5 = 0.0;
  double C6 = 0.0;
  double C7 = 0.0;
  double C8 = 0.0;
  double C9 = 0.0;
  double C10 = 0.0;  // evaluated at n = N0 + 1

  std::int64_t N0 = 0;
  std::int64_t N1 = 0;
  std::optional<std::int64_t> N2;  // empty when no rank below the scan cap works
  std::int64_t N3 = 0;
  std::optional<std::int64_t> N4;
  Regime regime = Regime::no_guarantee;

  /// (name, value) rows; absent ranks are reported as NaN.
  [[nodiscard]] std::vector<std::pair<std::string, double>> entries() const {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto rank = [&](const std::optional<std::int64_t>& r) { return r ? static_cast<double>(*r) : nan; };
    return {{"alpha", alpha},
            {"M", M},
            {"C_input", C_input},
            {"C_g", C_g},
            {"L_Y", L_Y},
            {"U_Y", U_Y},
            {"sqrtC1", sqrtC1},
            {"C1", C1},
            {"C2", C2},
            {"C3", C3},
            {"C3_summary_form", C3_summary},
            {"C4", C4},
            {"C5", C5},
            {"C6", C6},
            {"C7", C7},
            {"C8", C8},
            {"C9", C9},
            {"C10", C10},
            {"N0", static_cast<double>(N0)},
            {"N1", static_cast<double>(N1)},
            {"N2", rank(N2)},
            {"N3", static_cast<double>(N3)},
            {"N4", rank(N4)}};
  }
};

inline constexpr std::int64_t kRankScanCap = 1'000'000;

namespace detail_ledger {

// Smallest n >= start such that the remainder terms S3 + S1 + T1 + T0 stay
// below half the leading term for every m in [n, cap].
inline std::optional<std::int64_t> scan_n2(const ConstantsLedger& L, double beta, double gamma, double epsilon,
                                           std::int64_t cap) {
  const double dd = static_cast<double>(L.d);
  const bool variance = beta > 1.0 - dd * gamma;
  const double lead_const = variance ? L.C7 : L.C8;
  const double lead_power = variance ? (1.0 + 1.0 / dd) * (1.0 - beta) - epsilon : gamma - beta + 1.0 - epsilon;
  const double s_const = variance ? L.C6 : L.C5;
  const double s3_power = variance ? gamma + (1.0 + 1.0 / dd) * (1.0 - beta) : 2.0 * gamma - beta + 1.0;
  const double s1_power = gamma + (1.0 - beta) * (1.0 + 1.0 / dd);

  const std::int64_t start = L.N0 + 1;
  if (start > cap) return std::nullopt;
  CompensatedSum kappa_tail;  // kappa_n - kappa_N0
  CompensatedSum s1_sum;      // sum_{k=1}^{floor(n/2)} k^(-s1_power)
  std::int64_t half = 0;
  std::int64_t last_failure = start - 1;
  for (std::int64_t n = start; n <= cap; ++n) {
    const double nd = static_cast<double>(n);
    kappa_tail.add(std::pow(nd, -epsilon - gamma));
    while (half < n / 2) {
      ++half;
      s1_sum.add(std::pow(static_cast<double>(half), -s1_power));
    }
    const double t0 = L.C1 * std::exp(-0.375 * std::pow(nd, 1.0 - epsilon));
    const double t1 = std::exp(-2.0 * L.C2 * kappa_tail.value());
    const double s3 = s_const * std::pow(nd, -s3_power);
    const double s1 = s_const * std::exp(-2.0 * L.C2 * std::pow(nd, 1.0 - epsilon - gamma)) * s1_sum.value();
    const double rhs = lead_const / (2.0 * std::pow(nd, lead_power));
    if (!(s3 + s1 + t1 + t0 <= rhs)) last_failure = n;
  }
  if (last_failure == cap) return std::nullopt;
  return last_failure + 1;
}

}  // namespace detail_ledger

/// All constants and ranks of the error analysis for one model and one
/// parameter configuration.
inline ConstantsLedger constants_ledger(const ModelConstants& model, const ParamConfig& config,
                                        std::int64_t rank_scan_cap = kRankScanCap) {
  config.validate();
  detail::require(model.d >= 1, "d >= 1 violated");
  detail::require(model.C_input > 0.0, "C_input > 0 violated");
  detail::require(model.C_g > 0.0, "C_g > 0 violated");
  detail::require(model.L_Y < model.U_Y, "L_Y < U_Y violated");

  const double alpha = config.alpha;
  const double beta = config.beta;
  const double gamma = config.gamma;
  const double eps = config.epsilon;
  const double dd = static_cast<double>(model.d);

  ConstantsLedger L;
  L.d = model.d;
  L.alpha = alpha;
  L.M = model.M;
  L.C_input = model.C_input;
  L.C_g = model.C_g;
  L.L_Y = model.L_Y;
  L.U_Y = model.U_Y;

  L.sqrtC1 = model.U_Y - model.L_Y + alpha;
  L.C1 = L.sqrtC1 * L.sqrtC1;
  L.C2 = std::min(model.C_g, (1.0 - alpha) / (model.U_Y + alpha - model.L_Y));
  if (model.C2_override) {
    detail::require(*model.C2_override > 0.0, "C2 > 0 violated");
    L.C2 = *model.C2_override;
  }
  L.C4 = volume_constant(model.d);
  L.C3 = c3_derived(model.d, model.C_input);
  L.C3_summary = c3_summary_form(model.d, model.C_input);

  L.N0 = rank_n0(beta, eps);
  const double first = static_cast<double>(L.N0 + 1);
  const double bias_coeff = 2.0 * L.sqrtC1 * model.M * L.C3;
  L.C5 = peak_exp_power(L.C1, eps, 2.0 * gamma - beta + 1.0, first) +
         bias_coeff * std::pow(first, gamma - (1.0 - beta) / dd) + 1.0;
  L.C6 = peak_exp_power(L.C1, eps, gamma + (1.0 + 1.0 / dd) * (1.0 - beta), first) + bias_coeff +
         std::pow(first, -gamma + (1.0 - beta) / dd);
  L.C7 = std::exp2((1.0 + 1.0 / dd) * (1.0 - beta) + gamma) * L.C6 / L.C2;
  L.C8 = std::exp2(2.0 * gamma - beta + 1.0) * L.C5 / L.C2;
  L.C9 = std::min(L.C7, L.C8);
  L.C10 = c10(model.d, static_cast<std::size_t>(L.N0 + 1), beta, model.C_input);

  const double t = 2.0 * L.C2 / (eps + gamma);
  L.N1 = t <= 1.0 ? 1 : 2 * (static_cast<std::int64_t>(std::ceil(t)) - 1);
  L.N3 = 2 * (L.N0 + 1);

  L.regime = gamma <= beta ? rate_exponent(beta, gamma, eps, model.d).regime : Regime::no_guarantee;
  L.N2 = detail_ledger::scan_n2(L, beta, gamma, eps, rank_scan_cap);
  if (L.N2) L.N4 = std::max({L.N0 + 2, L.N1, *L.N2, L.N3});
  return L;
}

inline ConstantsLedger constants_ledger(const CodeModel& code, const ParamConfig& config,
                                        std::span<const double> x,
                                        std::int64_t rank_scan_cap = kRankScanCap) {
  code.validate();
  if (!code.in_support(x)) throw DomainError("x outside the input support of " + code.name);
  return constants_ledger(model_constants(code), config, rank_scan_cap);
}

// ---------------------------------------------------------------------------
// Non-asymptotic mean square error bound

/// Remainder d_k of the one-step recursion.
inline double remainder_term(const ConstantsLedger& L, const ParamConfig& config, std::size_t k) {
  const double kd = static_cast<double>(k);
  const double step = std::pow(kd, -config.gamma);
  const double frac = static_cast<double>(k_schedule(k, config.beta)) / kd;
  const double dd = static_cast<double>(L.d);
  return L.C1 * std::exp(-0.375 * std::pow(kd, 1.0 - config.epsilon)) +
         2.0 * L.sqrtC1 * L.M * L.C3 * step * std::pow(frac, 1.0 / dd + 1.0) + step * step * frac;
}

struct BoundTerms {
  double t0 = 0.0;  // exponential tail C1 exp(-3 n^(1-eps) / 8)
  double t1 = 0.0;  // contraction of the initial error
  double t2 = 0.0;  // accumulated remainders
  [[nodiscard]] double total() const { return t0 + t1 + t2; }
};

/// Terms of the bound on E[(theta_n - theta*)^2], by direct summation.
inline BoundTerms mse_bound_terms(const ConstantsLedger& L, const ParamConfig& config, std::size_t n) {
  if (static_cast<std::int64_t>(n) <= L.N0) {
    throw ConfigError("n >= N0 + 1 violated (n = " + std::to_string(n) + ", N0 = " + std::to_string(L.N0) + ")");
  }
  const auto n0 = static_cast<std::size_t>(L.N0);
  const std::vector<double> kappa = kappa_prefix(n, config.epsilon + config.gamma);
  BoundTerms b;
  b.t1 = std::exp(-2.0 * L.C2 * (kappa[n] - kappa[n0])) * L.C1;
  CompensatedSum acc;
  for (std::size_t k = n0 + 1; k <= n; ++k) {
    acc.add(std::exp(-2.0 * L.C2 * (kappa[n] - kappa[k])) * remainder_term(L, config, k));
  }
  b.t2 = acc.value();
  b.t0 = L.C1 * std::exp(-0.375 * std::pow(static_cast<double>(n), 1.0 - config.epsilon));
  return b;
}

inline double mse_bound(const ConstantsLedger& L, const ParamConfig& config, std::size_t n) {
  return mse_bound_terms(L, config, n).total();
}

struct BoundCurve {
  std::vector<std::size_t> n_values;
  std::vector<double> bound_values;
  std::vector<BoundTerms> terms;
};

/// Bound at every n in `ns` (each > N0). One pass: the accumulated remainder
/// obeys T2(n) = exp(-2 C2 n^(-eps-gamma)) T2(n-1) + d_n.
inline BoundCurve bound_curve(const ConstantsLedger& L, const ParamConfig& config, std::vector<std::size_t> ns) {
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  BoundCurve curve;
  if (ns.empty()) return curve;
  if (static_cast<std::int64_t>(ns.front()) <= L.N0) {
    throw ConfigError("n >= N0 + 1 violated (n = " + std::to_string(ns.front()) +
                      ", N0 = " + std::to_string(L.N0) + ")");
  }
  const auto n0 = static_cast<std::size_t>(L.N0);
  const double expo = config.epsilon + config.gamma;
  CompensatedSum kappa_tail;  // kappa_n - kappa_N0
  double t2 = 0.0;
  std::size_t next = 0;
  for (std::size_t n = n0 + 1; next < ns.size(); ++n) {
    const double inc = std::pow(static_cast<double>(n), -expo);
    kappa_tail.add(inc);
    t2 = std::exp(-2.0 * L.C2 * inc) * t2 + remainder_term(L, config, n);
    if (n == ns[next]) {
      BoundTerms b;
      b.t0 = L.C1 * std::exp(-0.375 * std::pow(static_cast<double>(n), 1.0 - config.epsilon));
      b.t1 = std::exp(-2.0 * L.C2 * kappa_tail.value()) * L.C1;
      b.t2 = t2;
      curve.n_values.push_back(n);
      curve.bound_values.push_back(b.total());
      curve.terms.push_back(b);
      ++next;
    }
  }
  return curve;
}

/// Rate-form bound C n^(-(1/(1+d) - eta)) holding beyond N4 at optimal
/// parameters.
inline double rate_form_bound(double constant, std::size_t d, double eta, std::size_t n) {
  return constant * std::pow(static_cast<double>(n), -(1.0 / (1.0 + static_cast<double>(d)) - eta));
}

// ---------------------------------------------------------------------------
// Parameter choice

struct OptimalParams {
  double gamma;
  double beta;
  double epsilon;
  double exponent;
};

inline OptimalParams optimal_params(std::size_t d, double eta_beta, double eta_eps) {
  detail::require(d >= 1, "d >= 1 violated");
  detail::require(eta_beta > 0.0, "eta_beta > 0 violated");
  detail::require(eta_eps >= 0.0, "eta_eps >= 0 violated");
  OptimalParams p{};
  p.gamma = 1.0 / (1.0 + static_cast<double>(d));
  p.beta = p.gamma + eta_beta;
  detail::require(p.beta < 1.0, "beta = 1/(1+d) + eta_beta < 1 violated");
  p.epsilon = 1.0 - p.beta + eta_eps;
  detail::require(p.epsilon < 1.0, "epsilon = 1 - beta + eta_eps < 1 violated");
  p.exponent = p.gamma - (eta_eps / 2.0 + eta_beta);
  return p;
}

/// Forecast n^(-(1/(1+d) - eta_eps/2)) of the mean square error; empty when
/// the exponent is not positive.
inline std::optional<double> expected_precision(std::size_t d, double eta_eps, std::size_t n) {
  detail::require(d >= 1, "d >= 1 violated");
  detail::require(n >= 1, "n >= 1 violated");
  const double expo = 1.0 / (1.0 + static_cast<double>(d)) - eta_eps / 2.0;
  if (!(expo > 0.0)) return std::nullopt;
  return std::pow(static_cast<double>(n), -expo);
}

// ---------------------------------------------------------------------------
// Concentration and order-statistic facts

struct TailBounds {
  double lower;  // bound on P(Z/n < p/2)
  double upper;  // bound on P(Z/n > 2p)
};

/// Bernstein bounds for Z ~ Binomial(n, p).
inline TailBounds binomial_tail_bounds(std::size_t n, double p) {
  detail::require(n >= 1, "n >= 1 violated");
  detail::require(p > 0.0 && p <= 1.0, "0 < p <= 1 violated");
  const double np = static_cast<double>(n) * p;
  return {std::exp(-3.0 * np / 32.0), std::exp(-3.0 * np / 8.0)};
}

/// Bound on P(P_n <= (n+1)^(-epsilon)); meaningful for n >= N0.
inline double deviation_rank_check(const ParamConfig& config, std::size_t n) {
  detail::require(config.epsilon > 1.0 - config.beta, "epsilon > 1 - beta violated");
  return std::exp(-0.375 * std::pow(static_cast<double>(n) + 1.0, 1.0 - config.epsilon));
}

/// P_n ~ Beta(k, n - k + 1) with k = k_{n+1}.
inline double pn_mean(std::size_t n, std::size_t k) {
  return static_cast<double>(k) / (static_cast<double>(n) + 1.0);
}

inline double pn_second_moment(std::size_t n, std::size_t k) {
  const double kd = static_cast<double>(k);
  const double nd = static_cast<double>(n);
  return kd * (kd + 1.0) / ((nd + 1.0) * (nd + 2.0));
}

/// (2kn - k^2 + 3k + kn^2) / ((n+1)^2 (n+2)): the closed form quoted for
/// E[P_n^2] alongside the Beta law. It does not equal the Beta second moment
/// (k = n = 1 gives 5/12 against 1/3); kept so the discrepancy can be shown.
inline double pn_second_moment_quoted(std::size_t n, std::size_t k) {
  const double kd = static_cast<double>(k);
  const double nd = static_cast<double>(n);
  return (2.0 * kd * nd - kd * kd + 3.0 * kd + kd * nd * nd) / ((nd + 1.0) * (nd + 1.0) * (nd + 2.0));
}

/// Closed-form bound for any b with b_{m+1} <= b_m (1 - c_{m+1}) + d_{m+1}
/// started from b_start:
///   exp(-sum_{j<=m} c_j) b_start + sum_{k<=m} exp(-(sum_{j<=m} c_j - sum_{j<=k} c_j)) d_k.
/// c[i], d[i] are the coefficients of step i+1; returns the bound after
/// each step.
inline std::vector<double> unrolled_recursion_bound(double b_start, std::span<const double> c,
                                                    std::span<const double> d) {
  detail::require(c.size() == d.size(), "c and d must have equal length");
  std::vector<double> prefix(c.size() + 1, 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) prefix[i + 1] = prefix[i] + c[i];
  std::vector<double> out(c.size());
  for (std::size_t m = 1; m <= c.size(); ++m) {
    double b = std::exp(-prefix[m]) * b_start;
    for (std::size_t k = 1; k <= m; ++k) b += std::exp(-(prefix[m] - prefix[k])) * d[k - 1];
    out[m - 1] = b;
  }
  return out;
}

}  // namespace knnrm::theory

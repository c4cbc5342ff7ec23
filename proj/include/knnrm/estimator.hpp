#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "knnrm/error.hpp"
#include "knnrm/order_statistics.hpp"
#include "knnrm/schedules.hpp"

namespace knnrm {

/// One draw (x, y) from a stochastic code.
struct Observation {
  std::vector<double> x;
  double y = 0.0;
};

/// What to do with an observation that arrives while fewer than k_{n+1}
/// distances have been recorded, i.e. when the k-th order statistic does not
/// exist yet. With power-law schedules this is only the very first draw.
enum class Warmup {
  skip,    // record the distance, leave theta untouched
  accept,  // treat the draw as a neighbour
};

inline const char* to_string(Warmup w) { return w == Warmup::skip ? "skip" : "accept"; }

inline Warmup parse_warmup(const std::string& s) {
  if (s == "skip") return Warmup::skip;
  if (s == "accept") return Warmup::accept;
  throw ConfigError("warmup must be one of {skip, accept}, got '" + s + "'");
}

/// Tuning of one estimator run at one query point.
struct ParamConfig {
  double alpha = 0.95;
  double beta = 0.55;
  double gamma = 0.5;
  double epsilon = 0.75;  // truncation exponent; only the error bounds use it
  double theta0 = 0.0;
  std::vector<double> query;
  Warmup warmup = Warmup::skip;

  void validate() const {
    detail::require(alpha >= 0.5 && alpha < 1.0, "1/2 <= alpha < 1 violated");
    detail::require(beta > 0.0 && beta < 1.0, "0 < beta < 1 violated");
    detail::require(gamma > 0.0 && gamma <= 1.0, "0 < gamma <= 1 violated");
    detail::require(epsilon > 1.0 - beta && epsilon < 1.0, "1 - beta < epsilon < 1 violated");
    detail::require(std::isfinite(theta0), "theta0 must be finite");
    detail::require(!query.empty(), "query point must have dimension >= 1");
  }

  /// Regime in which almost sure convergence is guaranteed.
  [[nodiscard]] bool theory_valid() const { return 0.5 < gamma && gamma <= beta && beta < 1.0; }
};

/// Truncation exponent used when none is given: 1 - beta + 0.3, pulled back
/// to the middle of (1 - beta, 1) when that would leave the interval.
inline double default_epsilon(double beta) {
  const double eps = 1.0 - beta + 0.3;
  return eps < 1.0 ? eps : 1.0 - beta / 2.0;
}

/// Streaming state of the localized recursion.
struct EstimatorState {
  double theta = 0.0;
  std::size_t n = 0;
  std::size_t updates = 0;
  DistanceLedger distances;

  EstimatorState() = default;
  explicit EstimatorState(double theta0) : theta(theta0) {}
};

/// Classical Robbins-Monro quantile step.
inline double rm_quantile_step(double theta, double z, double step, double alpha) {
  return theta - step * ((z <= theta ? 1.0 : 0.0) - alpha);
}

/// True when a draw at `new_distance` is among the k nearest neighbours of
/// the query, given the distances recorded so far.
inline bool knn_membership(const DistanceLedger& distances, double new_distance, std::size_t k,
                           Warmup warmup = Warmup::accept) {
  if (distances.size() < k) return warmup == Warmup::accept;
  return new_distance <= distances.select(k);
}

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return std::sqrt(s);
}

/// Advances `state` by one observation. Returns whether the draw was a
/// neighbour (and theta moved).
inline bool knn_rm_step(EstimatorState& state, const Observation& obs, const ParamConfig& config) {
  if (obs.x.size() != config.query.size()) {
    throw ConfigError("observation dimension " + std::to_string(obs.x.size()) +
                      " != query dimension " + std::to_string(config.query.size()));
  }
  const std::size_t next = state.n + 1;
  const std::size_t k = k_schedule(next, config.beta);
  const double dist = euclidean_distance(obs.x, config.query);
  const bool member = knn_membership(state.distances, dist, k, config.warmup);
  if (member) {
    state.theta = rm_quantile_step(state.theta, obs.y, gamma_schedule(next, config.gamma), config.alpha);
    ++state.updates;
  }
  state.distances.insert(dist);
  state.n = next;
  return member;
}

/// A source that fills the next observation, or returns false when exhausted.
template <typename F>
concept ObservationSource = requires(F f, Observation& o) {
  { f(o) } -> std::convertible_to<bool>;
};

/// Runs the recursion over `horizon` draws and returns theta_0..theta_horizon.
template <ObservationSource Source>
std::vector<double> run_estimator(Source&& next, const ParamConfig& config, std::size_t horizon) {
  EstimatorState state(config.theta0);
  state.distances.reserve(horizon);
  std::vector<double> trajectory;
  trajectory.reserve(horizon + 1);
  trajectory.push_back(state.theta);
  Observation obs;
  for (std::size_t j = 0; j < horizon; ++j) {
    if (!next(obs)) {
      throw InsufficientData("stream exhausted after " + std::to_string(j) + " of " +
                             std::to_string(horizon) + " observations");
    }
    knn_rm_step(state, obs, config);
    trajectory.push_back(state.theta);
  }
  return trajectory;
}

inline std::vector<double> run_estimator(std::span<const Observation> stream, const ParamConfig& config,
                                         std::size_t horizon) {
  std::size_t i = 0;
  return run_estimator(
      [&](Observation& o) {
        if (i == stream.size()) return false;
        o = stream[i++];
        return true;
      },
      config, horizon);
}

}  // namespace knnrm

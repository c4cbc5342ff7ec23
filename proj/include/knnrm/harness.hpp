#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "knnrm/code_models.hpp"
#include "knnrm/error.hpp"
#include "knnrm/estimator.hpp"
#include "knnrm/rng.hpp"

namespace knnrm {

struct GridPoint {
  double beta = 0.0;
  double gamma = 0.0;
};

/// One Monte Carlo study: `reps` independent runs of `n` draws per grid cell.
struct ExperimentSpec {
  std::string code = "square1d";
  std::vector<double> x{0.5};
  double alpha = 0.95;
  std::size_t n = 1000;
  std::size_t reps = 100;
  std::uint64_t seed = 20170815;
  std::vector<GridPoint> grid;
  double theta0 = 0.3;
  Warmup warmup = Warmup::skip;
  std::size_t threads = 0;  // 0: one per hardware thread

  void validate() const {
    const CodeModel model = code_by_name(code);
    detail::require(x.size() == model.d, "x must have dimension " + std::to_string(model.d) + " for " + code);
    detail::require(alpha >= 0.5 && alpha < 1.0, "1/2 <= alpha < 1 violated");
    detail::require(n >= 1, "n >= 1 violated");
    detail::require(reps >= 1, "reps >= 1 violated");
    detail::require(std::isfinite(theta0), "theta0 must be finite");
    for (const auto& g : grid) {
      detail::require(g.beta > 0.0 && g.beta < 1.0, "grid: 0 < beta < 1 violated");
      detail::require(g.gamma > 0.0 && g.gamma < 1.0, "grid: 0 < gamma < 1 violated");
    }
    if (!model.in_support(x)) throw DomainError("x outside the input support of " + code);
  }

  [[nodiscard]] ParamConfig config(double beta, double gamma) const {
    ParamConfig c;
    c.alpha = alpha;
    c.beta = beta;
    c.gamma = gamma;
    c.epsilon = default_epsilon(beta);
    c.theta0 = theta0;
    c.query = x;
    c.warmup = warmup;
    return c;
  }
};

/// Summary of one grid cell at one horizon.
struct CellResult {
  double beta = 0.0;
  double gamma = 0.0;
  std::size_t n = 0;
  std::size_t reps = 0;
  double mse = 0.0;
  double std_error = 0.0;
  double mean_final_theta = 0.0;
  double update_fraction = 0.0;
  double wall_time = 0.0;  // seconds of compute summed over replications
};

struct ExperimentResult {
  std::uint64_t seed = 0;
  std::vector<CellResult> cells;
};

/// Evenly spaced size x size grid over [lo, hi]^2, beta-major.
inline std::vector<GridPoint> square_grid(std::size_t size, double lo = 0.05, double hi = 0.95) {
  detail::require(size >= 1, "grid size >= 1 violated");
  std::vector<GridPoint> grid;
  grid.reserve(size * size);
  const double h = size == 1 ? 0.0 : (hi - lo) / static_cast<double>(size - 1);
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = 0; j < size; ++j) {
      grid.push_back({lo + h * static_cast<double>(i), lo + h * static_cast<double>(j)});
    }
  }
  return grid;
}

inline std::uint64_t substream_id(std::size_t cell, std::size_t rep) {
  return (static_cast<std::uint64_t>(cell) << 32) | static_cast<std::uint64_t>(rep);
}

namespace detail {

inline std::size_t thread_count(std::size_t requested, std::size_t jobs) {
  std::size_t t = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(t, jobs));
}

/// Calls fn(i) for i in [0, count) on up to `threads` workers. fn must only
/// write to slot i of its outputs.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  const std::size_t workers = thread_count(threads, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
}

struct Replication {
  std::vector<double> theta_at;  // theta at each checkpoint
  std::vector<std::size_t> updates_at;
  double seconds = 0.0;
};

inline Replication run_replication(const CodeModel& code, const ParamConfig& config,
                                   std::span<const std::size_t> checkpoints, Rng rng) {
  const auto start = std::chrono::steady_clock::now();
  Replication out;
  out.theta_at.reserve(checkpoints.size());
  out.updates_at.reserve(checkpoints.size());
  EstimatorState state(config.theta0);
  state.distances.reserve(checkpoints.back());
  Observation obs;
  std::size_t next = 0;
  while (next < checkpoints.size() && checkpoints[next] == 0) {
    out.theta_at.push_back(state.theta);
    out.updates_at.push_back(0);
    ++next;
  }
  while (next < checkpoints.size()) {
    sample(code, rng, obs);
    knn_rm_step(state, obs, config);
    while (next < checkpoints.size() && checkpoints[next] == state.n) {
      out.theta_at.push_back(state.theta);
      out.updates_at.push_back(state.updates);
      ++next;
    }
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

inline CellResult summarize(double beta, double gamma, std::size_t n, double target,
                            std::span<const Replication> reps, std::size_t checkpoint) {
  CellResult r;
  r.beta = beta;
  r.gamma = gamma;
  r.n = n;
  r.reps = reps.size();
  double sum_sq = 0.0, sum_theta = 0.0, sum_upd = 0.0, secs = 0.0;
  for (const auto& rep : reps) {
    const double err = rep.theta_at[checkpoint] - target;
    sum_sq += err * err;
    sum_theta += rep.theta_at[checkpoint];
    sum_upd += n == 0 ? 0.0 : static_cast<double>(rep.updates_at[checkpoint]) / static_cast<double>(n);
    secs += rep.seconds;
  }
  const double count = static_cast<double>(reps.size());
  r.mse = sum_sq / count;
  r.mean_final_theta = sum_theta / count;
  r.update_fraction = sum_upd / count;
  r.wall_time = secs;
  if (reps.size() > 1) {
    double var = 0.0;
    for (const auto& rep : reps) {
      const double err = rep.theta_at[checkpoint] - target;
      const double dev = err * err - r.mse;
      var += dev * dev;
    }
    var /= count - 1.0;
    r.std_error = std::sqrt(var / count);
  }
  return r;
}

}  // namespace detail

/// Monte Carlo mean square error at every horizon in `checkpoints`, all taken
/// from the same `spec.reps` trajectories of length max(checkpoints).
/// Replication r uses substream (cell_index, r) of spec.seed.
inline std::vector<CellResult> monte_carlo_mse_curve(const ExperimentSpec& spec, double beta, double gamma,
                                                     std::vector<std::size_t> checkpoints,
                                                     std::size_t cell_index = 0) {
  spec.validate();
  detail::require(!checkpoints.empty(), "checkpoints must be nonempty");
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
  const ParamConfig config = spec.config(beta, gamma);
  config.validate();
  const CodeModel code = code_by_name(spec.code);
  const double target = true_conditional_quantile(code, spec.x, spec.alpha);

  std::vector<detail::Replication> reps(spec.reps);
  detail::parallel_for(spec.reps, spec.threads, [&](std::size_t r) {
    reps[r] = detail::run_replication(code, config, checkpoints, make_stream(spec.seed, substream_id(cell_index, r)));
  });
  std::vector<CellResult> out;
  out.reserve(checkpoints.size());
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    out.push_back(detail::summarize(beta, gamma, checkpoints[c], target, reps, c));
  }
  return out;
}

/// Monte Carlo estimate of E[(theta_n - theta*)^2] for one (beta, gamma).
inline CellResult monte_carlo_mse(const ExperimentSpec& spec, double beta, double gamma,
                                  std::size_t cell_index = 0) {
  return monte_carlo_mse_curve(spec, beta, gamma, {spec.n}, cell_index).front();
}

/// One cell per grid point; cell i is reproducible from (seed, i) alone.
/// Work is spread over (cell, replication) pairs and reduced in a fixed order.
inline ExperimentResult sweep(const ExperimentSpec& spec) {
  spec.validate();
  detail::require(!spec.grid.empty(), "sweep grid must be nonempty");
  const CodeModel code = code_by_name(spec.code);
  const double target = true_conditional_quantile(code, spec.x, spec.alpha);
  std::vector<ParamConfig> configs;
  configs.reserve(spec.grid.size());
  for (const auto& g : spec.grid) {
    configs.push_back(spec.config(g.beta, g.gamma));
    configs.back().validate();
  }
  const std::vector<std::size_t> checkpoints{spec.n};
  const std::size_t jobs = spec.grid.size() * spec.reps;
  std::vector<detail::Replication> reps(jobs);
  detail::parallel_for(jobs, spec.threads, [&](std::size_t job) {
    const std::size_t cell = job / spec.reps;
    const std::size_t r = job % spec.reps;
    reps[job] = detail::run_replication(code, configs[cell], checkpoints, make_stream(spec.seed, substream_id(cell, r)));
  });
  ExperimentResult result;
  result.seed = spec.seed;
  result.cells.reserve(spec.grid.size());
  for (std::size_t cell = 0; cell < spec.grid.size(); ++cell) {
    const std::span<const detail::Replication> slice(reps.data() + cell * spec.reps, spec.reps);
    result.cells.push_back(
        detail::summarize(spec.grid[cell].beta, spec.grid[cell].gamma, spec.n, target, slice, 0));
  }
  return result;
}

/// Index of the cell with the smallest mse.
inline std::size_t argmin_cell(const ExperimentResult& r) {
  detail::require(!r.cells.empty(), "empty result");
  return static_cast<std::size_t>(
      std::min_element(r.cells.begin(), r.cells.end(),
                       [](const CellResult& a, const CellResult& b) { return a.mse < b.mse; }) -
      r.cells.begin());
}

inline constexpr std::uint64_t kOracleDrawBudget = 1'000'000'000;

/// Empirical alpha-quantile of Y over the first m draws with |X - x| <= radius.
///
/// For a uniform input law, X conditioned on the ball is uniform on
/// ball ∩ support, so proposals are drawn from the support clipped to the
/// ball's bounding box and rejected outside the ball; only the acceptance rate
/// differs from drawing X from its full law. Every proposal counts against
/// `draw_budget`.
inline double empirical_quantile_oracle(const CodeModel& code, std::span<const double> x, double alpha,
                                        double radius, std::size_t m, Rng& rng,
                                        std::uint64_t draw_budget = kOracleDrawBudget) {
  detail::require(radius > 0.0, "radius > 0 violated");
  detail::require(m >= 1, "m >= 1 violated");
  detail::require(alpha > 0.0 && alpha < 1.0, "0 < alpha < 1 violated");
  detail::require(x.size() == code.d, "x must have dimension " + std::to_string(code.d));
  std::vector<double> lo(code.d), hi(code.d);
  for (std::size_t i = 0; i < code.d; ++i) {
    lo[i] = std::max(code.input_lo, x[i] - radius);
    hi[i] = std::min(code.input_hi, x[i] + radius);
    if (lo[i] > hi[i]) {
      throw BudgetExceeded("oracle: the ball around x does not meet the input support");
    }
  }
  std::vector<double> ys;
  ys.reserve(m);
  std::vector<double> point(code.d);
  std::uint64_t draws = 0;
  while (ys.size() < m) {
    if (draws++ >= draw_budget) {
      throw BudgetExceeded("oracle: draw budget of " + std::to_string(draw_budget) + " exhausted after " +
                           std::to_string(ys.size()) + " of " + std::to_string(m) + " accepted draws");
    }
    for (std::size_t i = 0; i < code.d; ++i) point[i] = uniform(rng, lo[i], hi[i]);
    const double noise = uniform(rng, -CodeModel::kNoiseHalfWidth, CodeModel::kNoiseHalfWidth);
    if (euclidean_distance(point, x) > radius) continue;
    ys.push_back(code.output(point, noise));
  }
  const auto rank = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(m)));
  const auto idx = std::clamp<std::size_t>(rank, 1, m) - 1;
  std::nth_element(ys.begin(), ys.begin() + static_cast<std::ptrdiff_t>(idx), ys.end());
  return ys[idx];
}

}  // namespace knnrm

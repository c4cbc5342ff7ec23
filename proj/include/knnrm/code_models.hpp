#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "knnrm/error.hpp"
#include "knnrm/estimator.hpp"
#include "knnrm/rng.hpp"

namespace knnrm {

/// A benchmark stochastic code y = m(x) + noise with X uniform on the box
/// [input_lo, input_hi]^d and noise uniform on [-1/2, 1/2], together with the
/// model constants the error bounds need.
struct CodeModel {
  std::string name;
  std::size_t d = 1;
  double input_lo = 0.0;
  double input_hi = 1.0;
  std::function<double(std::span<const double>)> mean_fn;
  std::string mean_description;
  double L_Y = 0.0;
  double U_Y = 0.0;
  double M_bound = 0.0;  // CDF shift per unit of localization radius
  double C_input = 0.0;  // lower bound of the input density
  double C_g = 0.0;      // lower bound of the conditional output density

  static constexpr double kNoiseHalfWidth = 0.5;

  [[nodiscard]] double output(std::span<const double> x, double noise) const { return mean_fn(x) + noise; }

  [[nodiscard]] bool in_support(std::span<const double> x) const {
    if (x.size() != d) return false;
    for (double v : x) {
      if (!(v >= input_lo && v <= input_hi)) return false;
    }
    return true;
  }

  void validate() const {
    detail::require(L_Y < U_Y, name + ": L_Y < U_Y violated");
    detail::require(C_input > 0.0, name + ": C_input > 0 violated");
    detail::require(C_g > 0.0, name + ": C_g > 0 violated");
    detail::require(M_bound >= 0.0, name + ": M_bound >= 0 violated");
  }
};

/// Draws one observation into `obs`. Inputs first, then the noise, from the
/// same engine.
inline void sample(const CodeModel& code, Rng& rng, Observation& obs) {
  obs.x.resize(code.d);
  for (auto& v : obs.x) v = uniform(rng, code.input_lo, code.input_hi);
  const double noise = uniform(rng, -CodeModel::kNoiseHalfWidth, CodeModel::kNoiseHalfWidth);
  obs.y = code.output(obs.x, noise);
}

inline Observation sample(const CodeModel& code, Rng& rng) {
  Observation obs;
  sample(code, rng, obs);
  return obs;
}

/// alpha-quantile of m(x) + U[-1/2, 1/2].
inline double true_conditional_quantile(const CodeModel& code, std::span<const double> x, double alpha) {
  detail::require(alpha >= 0.5 && alpha < 1.0, "1/2 <= alpha < 1 violated");
  if (!code.in_support(x)) {
    throw DomainError("query point outside the input support of " + code.name);
  }
  return code.mean_fn(x) + alpha - 0.5;
}

namespace codes {

inline double sq(double v) { return v * v; }

inline CodeModel square1d() {
  return {"square1d", 1, 0.0, 1.0, [](std::span<const double> x) { return sq(x[0]); }, "x^2",
          -0.5, 1.5, 2.0 / 3.0, 1.0, 1.0};
}

inline CodeModel abs1d() {
  return {"abs1d", 1, -1.0, 1.0, [](std::span<const double> x) { return std::abs(x[0]); }, "|x|",
          -0.5, 1.5, 1.0, 0.5, 1.0};
}

// For the d >= 2 codes M_bound is the Lipschitz constant of m on the box:
// a mean shift of delta moves a unit-density uniform CDF by at most delta.
inline CodeModel norm2d() {
  return {"norm2d", 2, -1.0, 1.0, [](std::span<const double> x) { return sq(x[0]) + sq(x[1]); },
          "|x|^2", -0.5, 2.5, 2.0 * std::sqrt(2.0), 0.25, 1.0};
}

inline CodeModel mixed2d() {
  return {"mixed2d", 2, -1.0, 1.0, [](std::span<const double> x) { return sq(x[0]) + x[1]; },
          "x1^2 + x2", -1.5, 2.5, std::sqrt(5.0), 0.25, 1.0};
}

inline CodeModel norm3d() {
  return {"norm3d", 3, -1.0, 1.0,
          [](std::span<const double> x) { return sq(x[0]) + sq(x[1]) + sq(x[2]); }, "|x|^2",
          -0.5, 3.5, 2.0 * std::sqrt(3.0), 0.125, 1.0};
}

inline CodeModel mixed3d() {
  return {"mixed3d", 3, -1.0, 1.0,
          [](std::span<const double> x) { return sq(x[0]) + x[1] + x[2] * x[2] * x[2] / 2.0; },
          "x1^2 + x2 + x3^3/2", -2.0, 3.0, std::sqrt(7.25), 0.125, 1.0};
}

}  // namespace codes

inline constexpr std::array<std::string_view, 6> kCodeNames = {"square1d", "abs1d",  "norm2d",
                                                               "mixed2d",  "norm3d", "mixed3d"};

inline CodeModel code_by_name(std::string_view name) {
  if (name == "square1d") return codes::square1d();
  if (name == "abs1d") return codes::abs1d();
  if (name == "norm2d") return codes::norm2d();
  if (name == "mixed2d") return codes::mixed2d();
  if (name == "norm3d") return codes::norm3d();
  if (name == "mixed3d") return codes::mixed3d();
  throw ConfigError("unknown code '" + std::string(name) +
                    "' (expected square1d, abs1d, norm2d, mixed2d, norm3d or mixed3d)");
}

}  // namespace knnrm

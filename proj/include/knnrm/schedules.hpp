#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "knnrm/error.hpp"

namespace knnrm {

// Neighbour count k_n = max(1, floor(n^beta)).
inline std::size_t k_schedule(std::size_t n, double beta) {
  detail::require(n >= 1, "k_schedule: n >= 1 violated");
  detail::require(beta > 0.0 && beta < 1.0, "k_schedule: 0 < beta < 1 violated");
  const auto k = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(n), beta)));
  return std::clamp<std::size_t>(k, 1, n);
}

// Step size gamma_n = n^(-gamma).
inline double gamma_schedule(std::size_t n, double gamma) {
  detail::require(n >= 1, "gamma_schedule: n >= 1 violated");
  detail::require(gamma > 0.0 && gamma <= 1.0, "gamma_schedule: 0 < gamma <= 1 violated");
  return std::pow(static_cast<double>(n), -gamma);
}

}  // namespace knnrm

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace dualrl::detail {

// Bit-level draws so streams are identical across standard libraries.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double standard_exponential(std::mt19937_64& rng) { return -std::log1p(-uniform01(rng)); }

inline Eigen::VectorXd dirichlet_flat(std::mt19937_64& rng, int n) {
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = standard_exponential(rng);
  return x / x.sum();
}

// Index drawn from the categorical distribution with the given weights.
inline int sample_index(std::mt19937_64& rng, const Eigen::VectorXd& cumulative) {
  const double u = uniform01(rng) * cumulative[cumulative.size() - 1];
  int lo = 0;
  int hi = static_cast<int>(cumulative.size()) - 1;
  while (lo < hi) {
    const int mid = (lo + hi) / 2;
    if (cumulative[mid] > u) hi = mid; else lo = mid + 1;
  }
  return lo;
}

}  // namespace dualrl::detail

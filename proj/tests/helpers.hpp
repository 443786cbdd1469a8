#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "xdiff/field.hpp"
#include "xdiff/influence.hpp"

namespace xdiff::testing {

inline ScalarField random_field(const Grid& g, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  ScalarField f(g);
  for (std::size_t j = 0; j < f.size(); ++j) f[j] = dist(rng);
  return f;
}

inline VectorField random_state(const Grid& g, std::mt19937_64& rng, double scale = 1.0) {
  return VectorField(random_field(g, rng, -scale, scale), random_field(g, rng, -scale, scale));
}

inline InfluenceSet random_set(const RbfBasis& basis, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  InfluenceSet set(basis);
  for (auto& d : set.deltas)
    for (auto& x : d) x = dist(rng);
  return set;
}

// d2 + d3 kept small against d1, d4 so every c_{l,i} is positive.
inline InfluenceSet random_feasible_set(const RbfBasis& basis, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(0.2, 0.6);
  std::uniform_real_distribution<double> cross(-0.2, 0.2);
  InfluenceSet set(basis);
  for (int i = 0; i < basis.p(); ++i) {
    set.deltas[0][i] = pos(rng);
    set.deltas[3][i] = pos(rng);
    set.deltas[1][i] = cross(rng);
    set.deltas[2][i] = cross(rng);
  }
  return set;
}

inline double rel_err(double a, double b, double floor) {
  const double diff = std::abs(a - b);
  if (diff <= floor) return 0.0;
  return diff / std::max(std::abs(a), std::abs(b));
}

}  // namespace xdiff::testing

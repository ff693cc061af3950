#pragma once

#include <random>

#include "fgplab/simplex.hpp"

namespace fgplab {

using Rng = std::mt19937_64;

// Dirichlet(concentration, ..., concentration) draw; concentration 1 is
// uniform on the simplex.  Coordinates are floored at 1e-300 so the result is
// always an open point.
inline Vector sample_dirichlet(Rng& rng, Index n, double concentration = 1.0) {
  std::gamma_distribution<double> gamma(concentration, 1.0);
  Vector x(n);
  for (Index i = 0; i < n; ++i) x[i] = std::max(gamma(rng), 1e-300);
  return x / x.sum();
}

// Gaussian direction projected onto the tangent space, unit Euclidean norm.
inline Vector sample_tangent_direction(Rng& rng, Index n) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (;;) {
    for (Index i = 0; i < n; ++i) v[i] = normal(rng);
    v = centered(v);
    const double norm = v.norm();
    if (norm > 1e-8) return v / norm;
  }
}

}  // namespace fgplab

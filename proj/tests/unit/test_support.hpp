#pragma once

#include <doctest.h>

#include <vector>

#include "fgplab/generating.hpp"
#include "fgplab/sampling.hpp"

namespace fgplab::testing {

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline SimplexPoint pt(std::initializer_list<double> xs) { return SimplexPoint(vec(xs)); }
inline TangentVector tv(std::initializer_list<double> xs) { return TangentVector(vec(xs)); }

// Dirichlet(2) keeps points away from the boundary.
inline SimplexPoint random_point(Rng& rng, Index n, double concentration = 2.0) {
  return SimplexPoint(sample_dirichlet(rng, n, concentration));
}

inline std::vector<GeneratingFunction> builtin_generators3() {
  return {
      GeneratingFunction::geometric_mean(vec({0.2, 0.3, 0.5})),
      GeneratingFunction::diversity(0.5),
      GeneratingFunction::affine(vec({1.0, 2.0, 3.0})),
      GeneratingFunction::min_of_affines({vec({1.0, 2.0, 1.5}), vec({2.0, 1.0, 1.5})}),
  };
}

inline double max_abs(const Vector& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace fgplab::testing

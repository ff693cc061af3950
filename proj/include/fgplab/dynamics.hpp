#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fgplab/generating.hpp"
#include "fgplab/portfolio_map.hpp"
#include "fgplab/sampling.hpp"

namespace fgplab {

// Market weights over time; row t is mu(t).
class MarketPath {
 public:
  explicit MarketPath(Matrix points);
  explicit MarketPath(const std::vector<SimplexPoint>& points);
  static MarketPath from_rows(const std::vector<Vector>& rows);

  // CSV with header w1,...,wn and one row per time step.
  static MarketPath read_csv(std::istream& in);
  static MarketPath load_csv(const std::string& path);
  void write_csv(std::ostream& out) const;

  const Matrix& points() const { return points_; }
  Vector row(Index t) const { return points_.row(t).transpose(); }
  SimplexPoint point(Index t) const { return SimplexPoint(row(t)); }
  Index length() const { return points_.rows(); }
  Index dimension() const { return points_.cols(); }
  bool closed() const;

 private:
  Matrix points_;
};

struct ValueDecomposition {
  std::vector<double> logV;
  std::vector<double> phi_term;  // log Phi(mu(t)) - log Phi(mu(0))
  std::vector<double> drift;     // cumulative L-divergence A(t)
};

// Per-step multiplier sum_i pi_i mu_i' / mu_i.
double step_multiplier(const Vector& pi, const Vector& from, const Vector& to);

// log V(t), V(0) = 1.  A nonpositive multiplier raises NumericDegeneracyError.
std::vector<double> log_relative_value(const PortfolioMap& pi, const MarketPath& path);
std::vector<double> relative_value(const PortfolioMap& pi, const MarketPath& path);

// log V = phi_term + drift.  Affine generators have zero drift; other
// L-divergence increments in [-1e-12, 0) are treated as rounding.
ValueDecomposition fernholz_decompose(const GeneratingFunction& phi, const MarketPath& path);

// Log of the relative value around a closed path (first row = last row).
// A nonpositive multiplier gives -inf.
double cycle_log_value(const PortfolioMap& pi, const MarketPath& cycle);
// Same for the ring x_0 -> x_1 -> ... -> x_{m-1} -> x_0 given without repetition.
double cycle_log_value(const PortfolioMap& pi, const std::vector<Vector>& ring);

inline constexpr double kViolationThreshold = -1e-9;

// Axis-aligned box in weight space, intersected with the open simplex.
struct Box {
  Vector lo;
  Vector hi;

  static Box whole(Index n);
  static Box around(const Vector& center, double radius);
  // JSON array of [lo, hi] pairs, one per coordinate.
  static Box from_json(const nlohmann::json& spec);
  Index dimension() const { return lo.size(); }
  bool contains(const Vector& x) const;
};

// Uniform draw from the box slice of the simplex by rejection.
Vector sample_in_box(Rng& rng, const Box& box);

struct FuzzReport {
  double min_log_value = std::numeric_limits<double>::infinity();
  std::optional<std::vector<Vector>> witness;  // ring, first vertex not repeated
  long trials = 0;
};

struct FuzzOptions {
  long trials = 10000;
  int max_m = 6;
  std::optional<double> delta;  // max jump size
  unsigned long seed = 1;
};

// Random cycles with 2..max_m vertices in the region.  With delta, all
// vertices lie within delta/2 of a random center, so every jump is at most
// delta.  Half of the cycles with three or more vertices are reordered by
// angle in a random tangent plane, so simple polygons of both orientations
// are well represented.  The witness is the first trial below the violation
// threshold.
FuzzReport mcm_fuzz(const PortfolioMap& pi, const Box& region, const FuzzOptions& options = {});

// Random cycles over a finite set of points.
FuzzReport mcm_fuzz_finite(const PortfolioMap& pi, const std::vector<Vector>& points, const FuzzOptions& options = {});

struct CycleSearchResult {
  std::vector<Vector> ring;
  double log_value;
  long evaluations;
};

// Seeded search for an MCM violation: polygon restarts with m in 2..6 and
// coordinate moves along e(i) - e(n) on the vertices.  Once a violation is
// found the search keeps deepening it while budget remains.
std::optional<CycleSearchResult> find_violating_cycle(const PortfolioMap& pi, const Box& region, long budget,
                                                      unsigned long seed = 1);

// Closed path repeating the ring k times.
MarketPath repeat_cycle(const std::vector<Vector>& ring, int k);

// log V(t) in exponential coordinates for the shift portfolio theta -> theta - phi(theta).
std::vector<double> relative_value_exp(const std::function<Vector(const Vector&)>& phi_map,
                                       const std::vector<Vector>& theta_path);

}  // namespace fgplab

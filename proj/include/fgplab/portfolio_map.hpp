#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fgplab/generating.hpp"
#include "fgplab/simplex.hpp"

namespace fgplab {

// Map from market weights to closed-simplex portfolio weights.
class PortfolioMap {
 public:
  using Evaluator = std::function<Vector(const Vector&)>;
  // Parameters t in (0, 1) where the map may jump along a + t (b - a).
  using KinkLocator = std::function<std::vector<double>(const Vector& a, const Vector& b)>;

  PortfolioMap(Evaluator evaluator, bool smooth, std::string name = "custom");

  static PortfolioMap market();
  static PortfolioMap constant(const SimplexPoint& weights);
  static PortfolioMap generated_by(GeneratingFunction phi);

  // Validated evaluation; the result is a closed simplex point.
  SimplexPoint operator()(const SimplexPoint& mu) const;
  // Raw weights for an interior vector, no validation.
  Vector weights(const Vector& mu) const { return evaluator_(mu); }
  // w = pi / mu.
  Vector weight_ratio(const Vector& mu) const { return (evaluator_(mu).array() / mu.array()).matrix(); }

  std::vector<double> kinks(const Vector& a, const Vector& b) const { return kinks_ ? kinks_(a, b) : std::vector<double>{}; }
  void set_kink_locator(KinkLocator locator) { kinks_ = std::move(locator); }

  bool smooth() const { return smooth_; }
  const std::string& name() const { return name_; }

 private:
  Evaluator evaluator_;
  bool smooth_;
  std::string name_;
  KinkLocator kinks_;
};

}  // namespace fgplab

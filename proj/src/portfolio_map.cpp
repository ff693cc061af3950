#include "fgplab/portfolio_map.hpp"

#include <algorithm>

namespace fgplab {

PortfolioMap::PortfolioMap(Evaluator evaluator, bool smooth, std::string name)
    : evaluator_(std::move(evaluator)), smooth_(smooth), name_(std::move(name)) {
  if (!evaluator_) throw ArgumentError("portfolio map needs an evaluator");
}

PortfolioMap PortfolioMap::market() {
  return PortfolioMap([](const Vector& mu) { return mu; }, true, "market");
}

PortfolioMap PortfolioMap::constant(const SimplexPoint& weights) {
  return PortfolioMap(
      [w = weights.coords()](const Vector& mu) {
        if (mu.size() != w.size()) throw ArgumentError("constant portfolio dimension mismatch");
        return w;
      },
      true, "constant");
}

PortfolioMap PortfolioMap::generated_by(GeneratingFunction phi) {
  const bool smooth = phi.differentiable();
  std::string name = "generated:" + phi.name();
  std::vector<Vector> pieces;
  if (const auto* m = std::get_if<MinOfAffines>(&phi.kind())) pieces = m->pieces;
  PortfolioMap map(
      [phi = std::move(phi)](const Vector& mu) { return portfolio_from_generating(phi, SimplexPoint(mu)).coords(); },
      smooth, std::move(name));
  if (pieces.size() > 1) {
    map.set_kink_locator([pieces = std::move(pieces)](const Vector& a, const Vector& b) {
      std::vector<double> out;
      for (size_t k = 0; k < pieces.size(); ++k)
        for (size_t l = k + 1; l < pieces.size(); ++l) {
          const Vector g = pieces[k] - pieces[l];
          const double ga = g.dot(a), gb = g.dot(b);
          if ((ga < 0.0) == (gb < 0.0) || ga == gb) continue;
          const double t = ga / (ga - gb);
          if (t > 0.0 && t < 1.0) out.push_back(t);
        }
      std::sort(out.begin(), out.end());
      return out;
    });
  }
  return map;
}

SimplexPoint PortfolioMap::operator()(const SimplexPoint& mu) const {
  Vector pi = evaluator_(mu.coords());
  if (pi.size() != mu.size()) throw ArgumentError("portfolio map changed the dimension");
  return SimplexPoint(std::move(pi), Openness::Closed);
}

}  // namespace fgplab

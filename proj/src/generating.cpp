#include "fgplab/generating.hpp"

#include <algorithm>
#include <sstream>

#include "fgplab/sampling.hpp"

namespace fgplab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kActiveTolerance = 1e-12;
constexpr double kNegativeWeightTolerance = 1e-9;

void check_dimension(const GeneratingFunction& phi, Index n) {
  if (auto d = phi.dimension(); d && *d != n) {
    std::ostringstream msg;
    msg << phi.name() << " generator has dimension " << *d << " but the point has " << n;
    throw ArgumentError(msg.str());
  }
}

bool active(double value, double minimum) {
  return std::abs(value - minimum) <= kActiveTolerance * std::max(1.0, std::abs(minimum));
}

Index first_active_piece(const MinOfAffines& m, const Vector& p) {
  Vector values(static_cast<Index>(m.pieces.size()));
  for (size_t k = 0; k < m.pieces.size(); ++k) values[static_cast<Index>(k)] = m.pieces[k].dot(p);
  const double lowest = values.minCoeff();
  for (Index k = 0; k < values.size(); ++k)
    if (active(values[k], lowest)) return k;
  return 0;
}

// Clamp floating noise below zero and renormalize.
SimplexPoint finish_weights(Vector pi, const char* what) {
  for (Index i = 0; i < pi.size(); ++i) {
    if (!std::isfinite(pi[i])) throw InvalidGeneratorError(std::string(what) + ": non-finite weight");
    if (pi[i] < -kNegativeWeightTolerance) {
      std::ostringstream msg;
      msg.precision(17);
      msg << what << ": weight " << i << " is " << pi[i];
      throw InvalidGeneratorError(msg.str());
    }
    if (pi[i] < 0.0) pi[i] = 0.0;
  }
  const double sum = pi.sum();
  if (!(sum > 0.0)) throw InvalidGeneratorError(std::string(what) + ": weights sum to zero");
  return SimplexPoint(pi / sum, Openness::Closed);
}

}  // namespace

GeneratingFunction GeneratingFunction::geometric_mean(Vector weights) {
  SimplexPoint w(std::move(weights), Openness::Closed);
  return GeneratingFunction(GeometricMean{w.coords()});
}

GeneratingFunction GeneratingFunction::diversity(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("diversity exponent must lie in (0, 1)");
  return GeneratingFunction(DiversityPower{alpha});
}

GeneratingFunction GeneratingFunction::affine(Vector coeffs) {
  if (coeffs.size() < 2) throw ArgumentError("affine generator needs at least two coefficients");
  if (!coeffs.allFinite()) throw ArgumentError("affine coefficients must be finite");
  // An affine function attains its minimum over the simplex at a vertex.
  if (!(coeffs.minCoeff() > 0.0)) throw InvalidGeneratorError("affine generator is not positive on the simplex");
  return GeneratingFunction(Affine{std::move(coeffs)});
}

GeneratingFunction GeneratingFunction::min_of_affines(std::vector<Vector> pieces) {
  if (pieces.empty()) throw ArgumentError("min of affines needs at least one piece");
  const Index n = pieces.front().size();
  if (n < 2) throw ArgumentError("affine pieces need at least two coefficients");
  for (const auto& a : pieces) {
    if (a.size() != n) throw ArgumentError("affine pieces differ in dimension");
    if (!a.allFinite()) throw ArgumentError("affine coefficients must be finite");
    if (!(a.minCoeff() > 0.0)) throw InvalidGeneratorError("affine piece is not positive on the simplex");
  }
  return GeneratingFunction(MinOfAffines{std::move(pieces)});
}

GeneratingFunction GeneratingFunction::custom(Index dim, std::function<double(const Vector&)> evaluator,
                                              std::function<double(const Vector&, const Vector&)> derivative) {
  if (dim < 2) throw ArgumentError("custom generator needs dimension at least two");
  if (!evaluator) throw ArgumentError("custom generator needs an evaluator");
  GeneratingFunction phi(Custom{dim, std::move(evaluator), std::move(derivative)});
  const ConcavityScreen screen = screen_concavity(phi, dim);
  if (!screen.passed) {
    std::ostringstream msg;
    msg.precision(6);
    msg << "custom generator failed the concavity screen (worst midpoint gap " << screen.worst_midpoint_gap
        << ", min value " << screen.min_value << ")";
    throw InvalidGeneratorError(msg.str());
  }
  return phi;
}

GeneratingFunction GeneratingFunction::from_json(const nlohmann::json& spec) {
  auto vec = [](const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size())));
  };
  try {
    const std::string kind = spec.at("kind").get<std::string>();
    if (kind == "geometric_mean") return geometric_mean(vec(spec.at("weights")));
    if (kind == "diversity") return diversity(spec.at("alpha").get<double>());
    if (kind == "affine") return affine(vec(spec.at("coeffs")));
    if (kind == "min_affine") {
      std::vector<Vector> pieces;
      for (const auto& piece : spec.at("pieces")) pieces.push_back(vec(piece));
      return min_of_affines(std::move(pieces));
    }
    throw ParseError("unknown generator kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("generator spec: ") + e.what());
  }
}

nlohmann::json GeneratingFunction::to_json() const {
  auto arr = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return std::visit(overloaded{
                        [&](const GeometricMean& g) {
                          return nlohmann::json{{"kind", "geometric_mean"}, {"weights", arr(g.weights)}};
                        },
                        [&](const DiversityPower& d) { return nlohmann::json{{"kind", "diversity"}, {"alpha", d.alpha}}; },
                        [&](const Affine& a) { return nlohmann::json{{"kind", "affine"}, {"coeffs", arr(a.coeffs)}}; },
                        [&](const MinOfAffines& m) {
                          nlohmann::json pieces = nlohmann::json::array();
                          for (const auto& a : m.pieces) pieces.push_back(arr(a));
                          return nlohmann::json{{"kind", "min_affine"}, {"pieces", pieces}};
                        },
                        [&](const Custom&) -> nlohmann::json {
                          throw ArgumentError("custom generators have no JSON form");
                        },
                    },
                    kind_);
}

std::optional<Index> GeneratingFunction::dimension() const {
  return std::visit(overloaded{
                        [](const GeometricMean& g) -> std::optional<Index> { return g.weights.size(); },
                        [](const DiversityPower&) -> std::optional<Index> { return std::nullopt; },
                        [](const Affine& a) -> std::optional<Index> { return a.coeffs.size(); },
                        [](const MinOfAffines& m) -> std::optional<Index> { return m.pieces.front().size(); },
                        [](const Custom& c) -> std::optional<Index> { return c.dim; },
                    },
                    kind_);
}

std::string GeneratingFunction::name() const {
  return std::visit(overloaded{
                        [](const GeometricMean&) { return std::string("geometric_mean"); },
                        [](const DiversityPower&) { return std::string("diversity"); },
                        [](const Affine&) { return std::string("affine"); },
                        [](const MinOfAffines&) { return std::string("min_affine"); },
                        [](const Custom&) { return std::string("custom"); },
                    },
                    kind_);
}

bool GeneratingFunction::differentiable() const {
  return !std::holds_alternative<MinOfAffines>(kind_) && !std::holds_alternative<Custom>(kind_);
}

double GeneratingFunction::operator()(const Vector& p) const {
  return std::visit(overloaded{
                        [&](const GeometricMean& g) {
                          double s = 0.0;
                          for (Index i = 0; i < p.size(); ++i)
                            if (g.weights[i] != 0.0) s += g.weights[i] * std::log(p[i]);
                          return std::exp(s);
                        },
                        [&](const DiversityPower& d) {
                          return std::pow(p.array().pow(d.alpha).sum(), 1.0 / d.alpha);
                        },
                        [&](const Affine& a) { return a.coeffs.dot(p); },
                        [&](const MinOfAffines& m) {
                          double lowest = std::numeric_limits<double>::infinity();
                          for (const auto& a : m.pieces) lowest = std::min(lowest, a.dot(p));
                          return lowest;
                        },
                        [&](const Custom& c) { return c.eval(p); },
                    },
                    kind_);
}

double eval(const GeneratingFunction& phi, const SimplexPoint& p) {
  check_dimension(phi, p.size());
  if (const auto* gm = std::get_if<GeometricMean>(&phi.kind())) {
    for (Index i = 0; i < p.size(); ++i)
      if (gm->weights[i] > 0.0 && p[i] <= 0.0) throw DomainError("geometric mean vanishes on this boundary point");
  }
  const double value = phi(p.coords());
  if (!(value > 0.0) || !std::isfinite(value)) throw InvalidGeneratorError("generating function is not positive here");
  return value;
}

double log_eval(const GeneratingFunction& phi, const SimplexPoint& p) {
  if (const auto* gm = std::get_if<GeometricMean>(&phi.kind())) {
    check_dimension(phi, p.size());
    double s = 0.0;
    for (Index i = 0; i < p.size(); ++i) {
      if (gm->weights[i] == 0.0) continue;
      if (p[i] <= 0.0) throw DomainError("geometric mean vanishes on this boundary point");
      s += gm->weights[i] * std::log(p[i]);
    }
    return s;
  }
  return std::log(eval(phi, p));
}

double dir_derivative(const GeneratingFunction& phi, const SimplexPoint& p, const TangentVector& v) {
  check_dimension(phi, p.size());
  if (v.size() != p.size()) throw ArgumentError("dimension mismatch");
  if (!p.interior()) throw DomainError("directional derivatives need an interior point");
  const Vector& x = p.coords();
  const Vector& d = v.coords();
  return std::visit(
      overloaded{
          [&](const GeometricMean& g) { return phi(x) * (g.weights.array() * d.array() / x.array()).sum(); },
          [&](const DiversityPower& dp) {
            const double s = x.array().pow(dp.alpha).sum();
            return std::pow(s, 1.0 / dp.alpha - 1.0) * (x.array().pow(dp.alpha - 1.0) * d.array()).sum();
          },
          [&](const Affine& a) { return a.coeffs.dot(d); },
          [&](const MinOfAffines& m) {
            double lowest = std::numeric_limits<double>::infinity();
            for (const auto& a : m.pieces) lowest = std::min(lowest, a.dot(x));
            double slope = std::numeric_limits<double>::infinity();
            for (const auto& a : m.pieces)
              if (active(a.dot(x), lowest)) slope = std::min(slope, a.dot(d));
            return slope;
          },
          [&](const Custom& c) {
            if (c.dir_derivative) return c.dir_derivative(x, d);
            const double norm = d.norm();
            if (norm == 0.0) return 0.0;
            double h = 1e-6 / std::max(1.0, norm);
            h = std::min(h, 0.5 * interior_radius(x, d));
            if (!(h > 0.0)) throw DomainError("no admissible step for the forward difference");
            return (c.eval(x + h * d) - c.eval(x)) / h;
          },
      },
      phi.kind());
}

SimplexPoint portfolio_from_generating(const GeneratingFunction& phi, const SimplexPoint& p) {
  check_dimension(phi, p.size());
  if (!p.interior()) throw DomainError("generated portfolios are defined on the open simplex");
  const Vector& x = p.coords();
  const Index n = p.size();
  if (const auto* m = std::get_if<MinOfAffines>(&phi.kind())) {
    const Vector& a = m->pieces[static_cast<size_t>(first_active_piece(*m, x))];
    return finish_weights((x.array() * a.array()).matrix() / a.dot(x), "min_affine portfolio");
  }
  const double value = eval(phi, p);
  Vector pi(n);
  for (Index i = 0; i < n; ++i) {
    const double slope = dir_derivative(phi, p, TangentVector::toward_vertex(p, i)) / value;
    pi[i] = x[i] * (1.0 + slope);
  }
  return finish_weights(std::move(pi), "generated portfolio");
}

SimplexPoint supergradient_to_portfolio(const SimplexPoint& p, const TangentVector& v) {
  if (p.size() != v.size()) throw ArgumentError("dimension mismatch");
  const Vector& x = p.coords();
  const Vector ratio = (v.coords().array() + 1.0 - x.dot(v.coords())).matrix();
  return finish_weights((x.array() * ratio.array()).matrix(), "supergradient portfolio");
}

TangentVector portfolio_to_supergradient(const SimplexPoint& p, const SimplexPoint& pi) {
  if (p.size() != pi.size()) throw ArgumentError("dimension mismatch");
  if (!p.interior()) throw DomainError("supergradient needs a strictly positive base point");
  const Vector ratio = (pi.coords().array() / p.coords().array()).matrix();
  return TangentVector(centered(ratio));
}

LDivergenceValue l_divergence(const GeneratingFunction& phi, const SimplexPoint& q, const SimplexPoint& p) {
  return l_divergence(phi, portfolio_from_generating(phi, p), q, p);
}

LDivergenceValue l_divergence(const GeneratingFunction& phi, const SimplexPoint& pi_at_p, const SimplexPoint& q,
                              const SimplexPoint& p) {
  if (q.size() != p.size() || pi_at_p.size() != p.size()) throw ArgumentError("dimension mismatch");
  const double x = (pi_at_p.coords().array() / p.coords().array() * (q.coords() - p.coords()).array()).sum();
  if (!(1.0 + x > 0.0)) throw InvalidGeneratorError("nonpositive argument in the L-divergence logarithm");
  return {std::log1p(x) - (log_eval(phi, q) - log_eval(phi, p))};
}

double excess_growth_rate(const SimplexPoint& pi, const SimplexPoint& q, const SimplexPoint& p) {
  if (pi.size() != p.size() || q.size() != p.size()) throw ArgumentError("dimension mismatch");
  if (!p.interior()) throw DomainError("excess growth needs a strictly positive base point");
  double arithmetic = 0.0;
  double geometric = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    if (pi[i] == 0.0) continue;
    if (q[i] == 0.0) return std::numeric_limits<double>::infinity();
    const double ratio = q[i] / p[i];
    arithmetic += pi[i] * ratio;
    geometric += pi[i] * std::log(ratio);
  }
  return std::log(arithmetic) - geometric;
}

ConcavityScreen screen_concavity(const GeneratingFunction& phi, Index n, int samples, double tolerance,
                                 unsigned seed) {
  ConcavityScreen out{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), true};
  auto value = [&](const Vector& x) {
    const double v = phi(x);
    out.min_value = std::min(out.min_value, std::isfinite(v) ? v : -std::numeric_limits<double>::infinity());
    return v;
  };

  // Lattice with denominator 10, every coordinate at least 1/10.
  if (n <= 6) {
    constexpr int kDen = 10;
    std::vector<int> parts(static_cast<size_t>(n), 1);
    std::function<void(Index, int)> walk = [&](Index i, int left) {
      if (i == n - 1) {
        parts[static_cast<size_t>(i)] = left;
        Vector x(n);
        for (Index k = 0; k < n; ++k) x[k] = parts[static_cast<size_t>(k)] / static_cast<double>(kDen);
        value(x);
        return;
      }
      for (int c = 1; c <= left - (n - 1 - i); ++c) {
        parts[static_cast<size_t>(i)] = c;
        walk(i + 1, left - c);
      }
    };
    if (kDen >= n) walk(0, kDen);
  }

  Rng rng(seed);
  for (int s = 0; s < samples; ++s) {
    const Vector p = sample_dirichlet(rng, n);
    const Vector q = sample_dirichlet(rng, n);
    const double gap = value(0.5 * (p + q)) - 0.5 * (value(p) + value(q));
    out.worst_midpoint_gap = std::min(out.worst_midpoint_gap, gap);
  }
  out.passed = out.min_value > 0.0 && out.worst_midpoint_gap >= -tolerance;
  return out;
}

}  // namespace fgplab

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "fgplab/simplex.hpp"

namespace fgplab {

// Phi(p) = prod p_i^{w_i}; generates the constant-weighted portfolio w.
struct GeometricMean {
  Vector weights;
};

// Phi(p) = (sum p_i^alpha)^{1/alpha}; generates pi_i proportional to p_i^alpha.
struct DiversityPower {
  double alpha;
};

// Phi(p) = <a, p>.
struct Affine {
  Vector coeffs;
};

// Phi(p) = min_k <a_k, p>.
struct MinOfAffines {
  std::vector<Vector> pieces;
};

// Black-box evaluator. The optional derivative evaluator receives (p, v) and
// returns the one-sided derivative D_v Phi(p).
struct Custom {
  Index dim;
  std::function<double(const Vector&)> eval;
  std::function<double(const Vector&, const Vector&)> dir_derivative;
};

// Positive concave function on the simplex.
//
// Built-in kinds are validated analytically (nonnegative weights, alpha in
// (0,1), affine pieces positive at every vertex).  Custom evaluators are
// checked for positivity on a lattice and for midpoint concavity on 1000
// seeded random pairs; concavity of a black box cannot be proven, so this is
// a screen, not a certificate.
class GeneratingFunction {
 public:
  using Kind = std::variant<GeometricMean, DiversityPower, Affine, MinOfAffines, Custom>;

  static GeneratingFunction geometric_mean(Vector weights);
  static GeneratingFunction diversity(double alpha);
  static GeneratingFunction affine(Vector coeffs);
  static GeneratingFunction min_of_affines(std::vector<Vector> pieces);
  static GeneratingFunction custom(Index dim, std::function<double(const Vector&)> eval,
                                   std::function<double(const Vector&, const Vector&)> dir_derivative = {});

  // {"kind":"geometric_mean","weights":[...]} | {"kind":"diversity","alpha":a}
  // | {"kind":"affine","coeffs":[...]} | {"kind":"min_affine","pieces":[[...],...]}
  static GeneratingFunction from_json(const nlohmann::json& spec);
  nlohmann::json to_json() const;

  const Kind& kind() const { return kind_; }
  // Fixed dimension, or nullopt for kinds defined in every dimension.
  std::optional<Index> dimension() const;
  std::string name() const;
  bool differentiable() const;

  // Raw evaluation at an arbitrary positive vector; no simplex validation.
  double operator()(const Vector& p) const;

 private:
  explicit GeneratingFunction(Kind kind) : kind_(std::move(kind)) {}
  Kind kind_;
};

double eval(const GeneratingFunction& phi, const SimplexPoint& p);
// log Phi(p), computed in log form for geometric means.
double log_eval(const GeneratingFunction& phi, const SimplexPoint& p);

// One-sided derivative D_v Phi(p).  Exact for the built-in kinds; forward
// difference with step 1e-6 / max(1, |v|) for Custom without a derivative.
double dir_derivative(const GeneratingFunction& phi, const SimplexPoint& p, const TangentVector& v);

// pi_i = p_i (1 + D_{e(i)-p} log Phi(p)).  For MinOfAffines the supergradient
// is taken from the lowest-index active piece, which keeps the weights summing
// to one at kinks.  Coordinates in [-1e-9, 0) are clamped to zero and the
// vector renormalized; anything more negative is an InvalidGeneratorError.
SimplexPoint portfolio_from_generating(const GeneratingFunction& phi, const SimplexPoint& p);

// pi_i / p_i = v_i + 1 - <p, v>.
SimplexPoint supergradient_to_portfolio(const SimplexPoint& p, const TangentVector& v);
// v_i = pi_i / p_i - mean_j(pi_j / p_j).
TangentVector portfolio_to_supergradient(const SimplexPoint& p, const SimplexPoint& pi);

struct LDivergenceValue {
  double value;
};

// T(q | p) = log(1 + <pi(p)/p, q - p>) - log Phi(q) + log Phi(p).
LDivergenceValue l_divergence(const GeneratingFunction& phi, const SimplexPoint& q, const SimplexPoint& p);
// Same with the portfolio at p already computed.
LDivergenceValue l_divergence(const GeneratingFunction& phi, const SimplexPoint& pi_at_p, const SimplexPoint& q,
                              const SimplexPoint& p);

// log(sum pi_i q_i/p_i) - sum pi_i log(q_i/p_i); +inf when pi_i > 0 = q_i.
double excess_growth_rate(const SimplexPoint& pi, const SimplexPoint& q, const SimplexPoint& p);

struct ConcavityScreen {
  double worst_midpoint_gap;  // min over pairs of Phi(mid) - (Phi(p)+Phi(q))/2
  double min_value;           // smallest Phi seen
  bool passed;
};

// Midpoint concavity and positivity screen in dimension n.
ConcavityScreen screen_concavity(const GeneratingFunction& phi, Index n, int samples = 1000,
                                 double tolerance = 1e-10, unsigned seed = 20160101);

}  // namespace fgplab

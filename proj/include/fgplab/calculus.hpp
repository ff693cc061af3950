#pragma once

#include <functional>
#include <vector>

#include "fgplab/generating.hpp"
#include "fgplab/portfolio_map.hpp"

namespace fgplab {

inline constexpr double kFirstOrderStep = 1e-5;
inline constexpr double kSecondOrderStep = 1e-4;
inline constexpr double kQuadratureTolerance = 1e-10;
inline constexpr int kQuadratureMaxDepth = 20;

// Gamma_pi(p)(v, v) = 1/2 sum_ij pi_i (delta_ij - pi_j) v_i v_j / (p_i p_j).
template <typename DPi, typename DP, typename DV>
typename DP::Scalar excess_growth_form(const Eigen::MatrixBase<DPi>& pi, const Eigen::MatrixBase<DP>& p,
                                       const Eigen::MatrixBase<DV>& v) {
  const auto x = (v.array() / p.array()).eval();
  const auto mean = (pi.array() * x).sum();
  return 0.5 * ((pi.array() * x.square()).sum() - mean * mean);
}

double excess_growth_form(const SimplexPoint& pi, const SimplexPoint& p, const TangentVector& v);

// -Hess Phi(p)(v, v) / (2 Phi(p)) by a second central difference along v.
// The step is 1e-4 / max(1, |v|_inf), shrunk to stay inside the simplex.
// Affine generators, and min-of-affines stencils inside one piece, give 0.
double drift_form(const GeneratingFunction& phi, const SimplexPoint& p, const TangentVector& v);

// Central difference D_v pi(p) with step 1e-5 / max(1, |v|_inf).
Vector portfolio_derivative(const PortfolioMap& pi, const SimplexPoint& p, const TangentVector& v);

// Gamma_pi(p)(v, v) - <<D_v pi(p), v>>_p.  Nonnegative for generated portfolios.
double curvature_gap(const PortfolioMap& pi, const SimplexPoint& p, const TangentVector& v);

// <v, D_v w(p)> + <w(p), v>^2 with w = pi / p.  Nonpositive for generated portfolios.
double weight_ratio_curvature(const PortfolioMap& pi, const SimplexPoint& p, const TangentVector& v);

// Piecewise linear curve through open-simplex points.
class Polyline {
 public:
  explicit Polyline(std::vector<SimplexPoint> vertices);
  static Polyline segment(const SimplexPoint& a, const SimplexPoint& b);
  // a -> b -> c -> a.
  static Polyline triangle(const SimplexPoint& a, const SimplexPoint& b, const SimplexPoint& c);

  const std::vector<SimplexPoint>& vertices() const { return vertices_; }
  bool closed() const;
  Polyline reversed() const;

 private:
  std::vector<SimplexPoint> vertices_;
};

// Adaptive 7-point Gauss-Legendre quadrature of f on [a, b], started from 16
// equal panels, each refined to at most max_depth levels.
double integrate(const std::function<double(double)>& f, double a, double b, double tolerance = kQuadratureTolerance,
                 int max_depth = kQuadratureMaxDepth);

// Sum over segments of the integral of <pi(mu)/mu, dmu>.
double line_integral(const PortfolioMap& pi, const Polyline& gamma);

// Line integral around a closed polyline.
double loop_defect(const PortfolioMap& pi, const Polyline& loop);

// log Phi(p) - log Phi(p0) recovered by integrating the weight ratio along
// [p0, p].  A few triangles through p0 and p are checked first; a defect
// above 1e-6 raises NotAGradientError.
double reconstruct_log_phi(const PortfolioMap& pi, const SimplexPoint& p0, const SimplexPoint& p);

// pi(mu) = mu * (lambda A mu) + alpha(mu) mu with A upper triangular of -1.
// Positive weights, satisfies the weight-ratio curvature inequality, and is
// not functionally generated.
PortfolioMap counterexample_portfolio(double lambda);

struct DriftConditionReport {
  double worst;  // max over the grid of q'(y) - q(y)(1 - q(y))
  double at;     // grid point achieving it
};

// Two-stock portfolio pi = (q(Y), 1 - q(Y)), Y = log(mu_1 / mu_2), on the
// grid y in [-5, 5] with 1001 points.
DriftConditionReport two_stock_drift_condition(const std::function<double(double)>& q);

// Interior grid of the 3-simplex: (u, (1-u) v, (1-u)(1-v)) with u, v at
// cell midpoints of an N x N grid.
std::vector<SimplexPoint> simplex_grid3(int n);
// Eight unit tangent directions in the plane of the 3-simplex at angles k pi / 4.
std::vector<TangentVector> planar_directions();

}  // namespace fgplab

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>

#include "fgplab/errors.hpp"

namespace fgplab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Tolerance on |sum - 1| accepted when constructing simplex points.
inline constexpr double kSimplexTolerance = 1e-12;

enum class Openness { Open, Closed };

// A point of the unit simplex: market weights, portfolio weights.
//
// Construction validates the coordinates and divides by their sum, so a
// SimplexPoint always sums to one up to a single rounding.  Open points have
// every coordinate strictly positive; closed points allow zeros.
class SimplexPoint {
 public:
  explicit SimplexPoint(Vector coords, Openness openness = Openness::Open);

  static SimplexPoint open(Vector coords) { return SimplexPoint(std::move(coords), Openness::Open); }
  static SimplexPoint closed(Vector coords) { return SimplexPoint(std::move(coords), Openness::Closed); }
  static SimplexPoint barycenter(Index n);

  const Vector& coords() const { return coords_; }
  double operator[](Index i) const { return coords_[i]; }
  Index size() const { return coords_.size(); }
  Openness openness() const { return openness_; }
  // True when every coordinate is strictly positive, whatever the flag says.
  bool interior() const { return (coords_.array() > 0.0).all(); }

 private:
  Vector coords_;
  Openness openness_;
};

// Vector whose coordinates sum to zero; the tangent space of the simplex.
class TangentVector {
 public:
  explicit TangentVector(Vector coords);

  // e(i) - p, the direction toward vertex i.
  static TangentVector toward_vertex(const SimplexPoint& p, Index i);
  static TangentVector between(const SimplexPoint& from, const SimplexPoint& to);

  const Vector& coords() const { return coords_; }
  double operator[](Index i) const { return coords_[i]; }
  Index size() const { return coords_.size(); }

 private:
  Vector coords_;
};

// Exponential coordinates theta_i = log(mu_i / mu_n), i < n.
struct ExpCoord {
  Vector theta;
};

// log(sum exp(x)) with the maximum subtracted; -inf entries contribute zero.
template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Scalar m = x.maxCoeff();
  if (m == -std::numeric_limits<Scalar>::infinity()) return m;
  if (!std::isfinite(m)) return m;
  return m + std::log((x.array() - m).unaryExpr([](auto v) { return std::exp(v); }).sum());
}

// psi(theta) = log(1 + sum_i exp(theta_i)).
template <typename Derived>
typename Derived::Scalar psi(const Eigen::MatrixBase<Derived>& theta) {
  using Scalar = typename Derived::Scalar;
  const Scalar m = std::max(Scalar(0), theta.maxCoeff());
  return m + std::log(std::exp(-m) + (theta.array() - m).unaryExpr([](auto v) { return std::exp(v); }).sum());
}

double psi(const ExpCoord& theta);

// Fisher metric, 1/2 sum u_i v_i / p_i.  No validation; see the typed overload.
template <typename DP, typename DU, typename DV>
typename DP::Scalar fisher_inner(const Eigen::MatrixBase<DP>& p, const Eigen::MatrixBase<DU>& u,
                                 const Eigen::MatrixBase<DV>& v) {
  return 0.5 * (u.array() * v.array() / p.array()).sum();
}

double fisher_inner(const SimplexPoint& p, const TangentVector& u, const TangentVector& v);

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> centered(const Eigen::MatrixBase<Derived>& x) {
  return (x.array() - x.mean()).matrix();
}

TangentVector project_to_tangent(const Vector& x);

ExpCoord to_exponential(const SimplexPoint& mu);
SimplexPoint from_exponential(const ExpCoord& theta);

// Smallest positive t with p + t v on the boundary, or +inf when v points
// nowhere outward.
double interior_radius(const Vector& p, const Vector& v);
// Largest s with both p + s v and p - s v in the closed simplex.
double symmetric_radius(const Vector& p, const Vector& v);

}  // namespace fgplab

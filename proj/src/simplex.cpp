#include "fgplab/simplex.hpp"

#include <sstream>
#include <string>

namespace fgplab {

SimplexPoint::SimplexPoint(Vector coords, Openness openness)
    : coords_(std::move(coords)), openness_(openness) {
  if (coords_.size() < 2) throw ArgumentError("simplex point needs at least two coordinates");
  if (!coords_.allFinite()) throw DomainError("simplex point has a non-finite coordinate");
  const double sum = coords_.sum();
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "simplex point coordinates sum to " << sum;
    throw DomainError(msg.str());
  }
  if (openness_ == Openness::Open && !(coords_.array() > 0.0).all())
    throw DomainError("open simplex point has a nonpositive coordinate");
  if (openness_ == Openness::Closed && !(coords_.array() >= 0.0).all())
    throw DomainError("simplex point has a negative coordinate");
  coords_ /= sum;
}

SimplexPoint SimplexPoint::barycenter(Index n) {
  return SimplexPoint(Vector::Constant(n, 1.0 / static_cast<double>(n)));
}

TangentVector::TangentVector(Vector coords) : coords_(std::move(coords)) {
  if (!coords_.allFinite()) throw DomainError("tangent vector has a non-finite coordinate");
  const double scale = std::max(1.0, coords_.cwiseAbs().maxCoeff());
  if (std::abs(coords_.sum()) > kSimplexTolerance * scale)
    throw DomainError("tangent vector coordinates do not sum to zero");
}

TangentVector TangentVector::toward_vertex(const SimplexPoint& p, Index i) {
  Vector v = -p.coords();
  v[i] += 1.0;
  return TangentVector(std::move(v));
}

TangentVector TangentVector::between(const SimplexPoint& from, const SimplexPoint& to) {
  if (from.size() != to.size()) throw ArgumentError("dimension mismatch");
  return TangentVector(to.coords() - from.coords());
}

double psi(const ExpCoord& theta) { return psi(theta.theta); }

double fisher_inner(const SimplexPoint& p, const TangentVector& u, const TangentVector& v) {
  if (p.size() != u.size() || p.size() != v.size()) throw ArgumentError("dimension mismatch");
  if (!p.interior()) throw DomainError("Fisher metric needs a strictly positive base point");
  return fisher_inner(p.coords(), u.coords(), v.coords());
}

TangentVector project_to_tangent(const Vector& x) { return TangentVector(centered(x)); }

ExpCoord to_exponential(const SimplexPoint& mu) {
  if (!mu.interior()) throw DomainError("exponential coordinates need a strictly positive point");
  const Index n = mu.size();
  const Vector& c = mu.coords();
  return ExpCoord{(c.head(n - 1).array().log() - std::log(c[n - 1])).matrix()};
}

SimplexPoint from_exponential(const ExpCoord& theta) {
  if (!theta.theta.allFinite()) throw DomainError("exponential coordinates must be finite");
  const Index k = theta.theta.size();
  const double norm = psi(theta.theta);
  Vector mu(k + 1);
  mu.head(k) = (theta.theta.array() - norm).unaryExpr([](double v) { return std::exp(v); }).matrix();
  mu[k] = std::exp(-norm);
  // Extreme coordinates underflow to zero; report those as closed points.
  const bool positive = (mu.array() > 0.0).all();
  return SimplexPoint(std::move(mu), positive ? Openness::Open : Openness::Closed);
}

double interior_radius(const Vector& p, const Vector& v) {
  double t = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < p.size(); ++i)
    if (v[i] < 0.0) t = std::min(t, p[i] / -v[i]);
  return t;
}

double symmetric_radius(const Vector& p, const Vector& v) {
  return std::min(interior_radius(p, v), interior_radius(p, -v));
}

}  // namespace fgplab

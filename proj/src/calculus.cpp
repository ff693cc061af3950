#include "fgplab/calculus.hpp"

#include <array>
#include <cmath>

#include "fgplab/sampling.hpp"

namespace fgplab {

namespace {

double step_for(const Vector& p, const Vector& v, double base) {
  const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
  double h = base / scale;
  // Keep p +- h v strictly inside.
  h = std::min(h, 0.5 * symmetric_radius(p, v));
  if (!(h > 0.0)) throw DomainError("no admissible finite-difference step inside the simplex");
  return h;
}

// 7-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 7> kNodes = {0.0,
                                          0.4058451513773971669066064,
                                          -0.4058451513773971669066064,
                                          0.7415311855993944398638648,
                                          -0.7415311855993944398638648,
                                          0.9491079123427585245261897,
                                          -0.9491079123427585245261897};
constexpr std::array<double, 7> kWeights = {0.4179591836734693877551020, 0.3818300505051189449503698,
                                            0.3818300505051189449503698, 0.2797053914892766679014678,
                                            0.2797053914892766679014678, 0.1294849661688696932706114,
                                            0.1294849661688696932706114};

double gauss7(const std::function<double(double)>& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double s = 0.0;
  for (size_t k = 0; k < kNodes.size(); ++k) s += kWeights[k] * f(mid + half * kNodes[k]);
  return s * half;
}

double adapt(const std::function<double(double)>& f, double a, double b, double whole, double tolerance, int depth) {
  const double mid = 0.5 * (a + b);
  const double left = gauss7(f, a, mid);
  const double right = gauss7(f, mid, b);
  const double refined = left + right;
  if (depth <= 0 || std::abs(refined - whole) <= std::max(tolerance, 4e-16 * std::abs(refined))) return refined;
  const double sub = std::max(0.5 * tolerance, 1e-15);
  return adapt(f, a, mid, left, sub, depth - 1) + adapt(f, mid, b, right, sub, depth - 1);
}

double segment_integral(const PortfolioMap& pi, const Vector& a, const Vector& b) {
  const Vector d = b - a;
  if (d.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  auto f = [&](double t) { return pi.weight_ratio(a + t * d).dot(d); };
  double total = 0.0, lo = 0.0;
  for (double t : pi.kinks(a, b)) {
    total += integrate(f, lo, t);
    lo = t;
  }
  return total + integrate(f, lo, 1.0);
}

}  // namespace

double excess_growth_form(const SimplexPoint& pi, const SimplexPoint& p, const TangentVector& v) {
  if (pi.size() != p.size() || v.size() != p.size()) throw ArgumentError("dimension mismatch");
  if (!p.interior()) throw DomainError("excess growth form needs a strictly positive base point");
  return excess_growth_form(pi.coords(), p.coords(), v.coords());
}

double drift_form(const GeneratingFunction& phi, const SimplexPoint& p, const TangentVector& v) {
  if (v.size() != p.size()) throw ArgumentError("dimension mismatch");
  if (!p.interior()) throw DomainError("drift form needs an interior point");
  if (std::holds_alternative<Affine>(phi.kind())) return 0.0;
  const Vector& x = p.coords();
  const Vector& d = v.coords();
  if (d.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  const double h = step_for(x, d, kSecondOrderStep);
  if (const auto* m = std::get_if<MinOfAffines>(&phi.kind())) {
    // Zero curvature unless the stencil straddles a kink.
    auto piece = [&](const Vector& y) {
      size_t best = 0;
      for (size_t k = 1; k < m->pieces.size(); ++k)
        if (m->pieces[k].dot(y) < m->pieces[best].dot(y)) best = k;
      return best;
    };
    const size_t here = piece(x);
    if (piece(x + h * d) == here && piece(x - h * d) == here) return 0.0;
  }
  const double center = eval(phi, p);
  const double plus = phi(x + h * d);
  const double minus = phi(x - h * d);
  const double hess = (plus - 2.0 * center + minus) / (h * h);
  return -hess / (2.0 * center);
}

Vector portfolio_derivative(const PortfolioMap& pi, const SimplexPoint& p, const TangentVector& v) {
  if (v.size() != p.size()) throw ArgumentError("dimension mismatch");
  if (!p.interior()) throw DomainError("portfolio derivative needs an interior point");
  const Vector& x = p.coords();
  const Vector& d = v.coords();
  if (d.cwiseAbs().maxCoeff() == 0.0) return Vector::Zero(x.size());
  const double h = step_for(x, d, kFirstOrderStep);
  return (pi.weights(x + h * d) - pi.weights(x - h * d)) / (2.0 * h);
}

double curvature_gap(const PortfolioMap& pi, const SimplexPoint& p, const TangentVector& v) {
  const Vector weights = pi.weights(p.coords());
  const Vector dpi = portfolio_derivative(pi, p, v);
  return excess_growth_form(weights, p.coords(), v.coords()) - fisher_inner(p.coords(), dpi, v.coords());
}

double weight_ratio_curvature(const PortfolioMap& pi, const SimplexPoint& p, const TangentVector& v) {
  if (v.size() != p.size()) throw ArgumentError("dimension mismatch");
  if (!p.interior()) throw DomainError("weight ratio curvature needs an interior point");
  const Vector& x = p.coords();
  const Vector& d = v.coords();
  const Vector w = pi.weight_ratio(x);
  const double wv = w.dot(d);
  if (d.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  const double h = step_for(x, d, kFirstOrderStep);
  const Vector dw = (pi.weight_ratio(x + h * d) - pi.weight_ratio(x - h * d)) / (2.0 * h);
  return d.dot(dw) + wv * wv;
}

Polyline::Polyline(std::vector<SimplexPoint> vertices) : vertices_(std::move(vertices)) {
  if (vertices_.empty()) throw ArgumentError("polyline needs at least one vertex");
  const Index n = vertices_.front().size();
  for (size_t k = 0; k < vertices_.size(); ++k) {
    if (vertices_[k].size() != n) throw ArgumentError("polyline vertices differ in dimension");
    if (!vertices_[k].interior()) throw DomainError("polyline vertices must lie in the open simplex");
    if (k > 0 && vertices_[k].coords() == vertices_[k - 1].coords())
      throw ArgumentError("consecutive polyline vertices coincide");
  }
}

Polyline Polyline::segment(const SimplexPoint& a, const SimplexPoint& b) {
  if (a.coords() == b.coords()) return Polyline({a});
  return Polyline({a, b});
}

Polyline Polyline::triangle(const SimplexPoint& a, const SimplexPoint& b, const SimplexPoint& c) {
  return Polyline({a, b, c, a});
}

bool Polyline::closed() const {
  return (vertices_.front().coords() - vertices_.back().coords()).cwiseAbs().maxCoeff() <= kSimplexTolerance;
}

Polyline Polyline::reversed() const { return Polyline(std::vector<SimplexPoint>(vertices_.rbegin(), vertices_.rend())); }

double integrate(const std::function<double(double)>& f, double a, double b, double tolerance, int max_depth) {
  if (a == b) return 0.0;
  constexpr int kPanels = 16;
  double total = 0.0;
  for (int k = 0; k < kPanels; ++k) {
    const double lo = a + (b - a) * k / kPanels;
    const double hi = k + 1 == kPanels ? b : a + (b - a) * (k + 1) / kPanels;
    total += adapt(f, lo, hi, gauss7(f, lo, hi), tolerance / kPanels, max_depth);
  }
  return total;
}

double line_integral(const PortfolioMap& pi, const Polyline& gamma) {
  const auto& v = gamma.vertices();
  double total = 0.0;
  for (size_t k = 1; k < v.size(); ++k) total += segment_integral(pi, v[k - 1].coords(), v[k].coords());
  return total;
}

double loop_defect(const PortfolioMap& pi, const Polyline& loop) {
  if (!loop.closed()) throw ArgumentError("loop must end where it starts");
  return line_integral(pi, loop);
}

double reconstruct_log_phi(const PortfolioMap& pi, const SimplexPoint& p0, const SimplexPoint& p) {
  if (p0.size() != p.size()) throw ArgumentError("dimension mismatch");
  if (!p0.interior() || !p.interior()) throw DomainError("reconstruction needs interior points");
  if (p0.coords() == p.coords()) return 0.0;
  Rng rng(7);
  for (int k = 0; k < 4; ++k) {
    const SimplexPoint r(sample_dirichlet(rng, p.size(), 2.0));
    if (r.coords() == p.coords() || r.coords() == p0.coords()) continue;
    const double defect = loop_defect(pi, Polyline::triangle(p0, p, r));
    if (std::abs(defect) > 1e-6) throw NotAGradientError("weight ratio is not conservative: loop defect " + std::to_string(defect));
  }
  return line_integral(pi, Polyline::segment(p0, p));
}

PortfolioMap counterexample_portfolio(double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw ArgumentError("lambda must lie in (0, 1)");
  Eigen::Matrix3d a;
  a << -1, -1, -1, 0, -1, -1, 0, 0, -1;
  return PortfolioMap(
      [a, lambda](const Vector& mu) -> Vector {
        if (mu.size() != 3) throw ArgumentError("the counterexample portfolio lives in dimension 3");
        const Eigen::Vector3d m = mu;
        const double alpha = 1.0 + lambda * (m[0] + m[1] * (m[1] + m[2]) + m[2] * m[2]);
        const Eigen::Vector3d pi = (m.array() * (lambda * (a * m)).array() + alpha * m.array()).matrix();
        return pi;
      },
      true, "counterexample");
}

DriftConditionReport two_stock_drift_condition(const std::function<double(double)>& q) {
  DriftConditionReport out{-std::numeric_limits<double>::infinity(), 0.0};
  constexpr int kPoints = 1001;
  for (int k = 0; k < kPoints; ++k) {
    const double y = -5.0 + 10.0 * k / (kPoints - 1);
    const double slope = (q(y + kFirstOrderStep) - q(y - kFirstOrderStep)) / (2.0 * kFirstOrderStep);
    const double value = q(y);
    const double excess = slope - value * (1.0 - value);
    if (excess > out.worst) out = {excess, y};
  }
  return out;
}

std::vector<SimplexPoint> simplex_grid3(int n) {
  std::vector<SimplexPoint> out;
  out.reserve(static_cast<size_t>(n * n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double u = (i + 0.5) / n;
      const double v = (j + 0.5) / n;
      Vector p(3);
      p << u, (1.0 - u) * v, (1.0 - u) * (1.0 - v);
      out.emplace_back(p / p.sum());
    }
  return out;
}

std::vector<TangentVector> planar_directions() {
  Vector e1(3), e2(3);
  e1 << 1.0, -1.0, 0.0;
  e2 << 1.0, 1.0, -2.0;
  e1 /= std::sqrt(2.0);
  e2 /= std::sqrt(6.0);
  std::vector<TangentVector> out;
  for (int k = 0; k < 8; ++k) {
    const double angle = k * M_PI / 4.0;
    out.push_back(project_to_tangent(std::cos(angle) * e1 + std::sin(angle) * e2));
  }
  return out;
}

}  // namespace fgplab

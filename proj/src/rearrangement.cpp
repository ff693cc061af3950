#include "fgplab/rearrangement.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace fgplab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<double> read_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open samples file " + path);
  std::vector<double> out;
  std::string token;
  char ch;
  auto flush = [&]() {
    if (token.empty()) return;
    try {
      size_t used = 0;
      out.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw ParseError("samples file " + path + ": malformed number '" + token + "'");
    }
    token.clear();
  };
  while (in.get(ch)) {
    if (ch == ',' || std::isspace(static_cast<unsigned char>(ch))) flush();
    else token.push_back(ch);
  }
  flush();
  return out;
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw ArgumentError("quantile level must lie in (0, 1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double low = 0.02425;
  double x;
  if (u < low) {
    const double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (u <= 1.0 - low) {
    const double q = u - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement.
  const double e = normal_cdf(x) - u;
  const double step = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  return x - step / (1.0 + 0.5 * x * step);
}

Distribution1D Distribution1D::normal(double mean, double sd) {
  if (!std::isfinite(mean) || !(sd > 0.0) || !std::isfinite(sd)) throw ArgumentError("normal needs a finite mean and sd > 0");
  return Distribution1D(Normal{mean, sd});
}

Distribution1D Distribution1D::uniform(double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b) || !(a < b)) throw ArgumentError("uniform needs a < b");
  return Distribution1D(Uniform{a, b});
}

Distribution1D Distribution1D::laplace(double loc, double scale) {
  if (!std::isfinite(loc) || !(scale > 0.0) || !std::isfinite(scale))
    throw ArgumentError("laplace needs a finite location and scale > 0");
  return Distribution1D(Laplace{loc, scale});
}

Distribution1D Distribution1D::empirical(std::vector<double> samples) {
  if (samples.empty()) throw ArgumentError("empirical distribution needs samples");
  for (double s : samples)
    if (!std::isfinite(s)) throw ArgumentError("empirical samples must be finite");
  std::sort(samples.begin(), samples.end());
  return Distribution1D(Empirical{std::move(samples)});
}

Distribution1D Distribution1D::from_json(const nlohmann::json& spec, const std::string& base_dir) {
  try {
    const std::string kind = spec.at("kind").get<std::string>();
    if (kind == "normal") return normal(spec.at("mean").get<double>(), spec.at("sd").get<double>());
    if (kind == "uniform") return uniform(spec.at("a").get<double>(), spec.at("b").get<double>());
    if (kind == "laplace") return laplace(spec.at("loc").get<double>(), spec.at("scale").get<double>());
    if (kind == "empirical") {
      if (spec.contains("samples")) return empirical(spec.at("samples").get<std::vector<double>>());
      std::string path = spec.at("samples_file").get<std::string>();
      if (!path.empty() && path.front() != '/' && !base_dir.empty()) path = base_dir + "/" + path;
      return empirical(read_samples(path));
    }
    if (kind == "point_mass") return point_mass(spec.at("at").get<double>());
    throw ParseError("unknown distribution kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("distribution spec: ") + e.what());
  }
}

nlohmann::json Distribution1D::to_json() const {
  return std::visit(overloaded{
                        [](const Normal& d) { return nlohmann::json{{"kind", "normal"}, {"mean", d.mean}, {"sd", d.sd}}; },
                        [](const Uniform& d) { return nlohmann::json{{"kind", "uniform"}, {"a", d.a}, {"b", d.b}}; },
                        [](const Laplace& d) {
                          return nlohmann::json{{"kind", "laplace"}, {"loc", d.loc}, {"scale", d.scale}};
                        },
                        [](const Empirical& d) { return nlohmann::json{{"kind", "empirical"}, {"samples", d.samples}}; },
                    },
                    kind_);
}

double Distribution1D::cdf(double x) const {
  return std::visit(overloaded{
                        [&](const Normal& d) { return normal_cdf((x - d.mean) / d.sd); },
                        [&](const Uniform& d) { return std::clamp((x - d.a) / (d.b - d.a), 0.0, 1.0); },
                        [&](const Laplace& d) {
                          const double z = (x - d.loc) / d.scale;
                          return z < 0.0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
                        },
                        [&](const Empirical& d) {
                          const auto& s = d.samples;
                          if (x < s.front()) return 0.0;
                          if (x >= s.back()) return 1.0;
                          const double last = static_cast<double>(s.size() - 1);
                          // Right-continuous at repeated samples.
                          const auto hi = std::upper_bound(s.begin(), s.end(), x);
                          const size_t k = static_cast<size_t>(hi - s.begin());  // s[k-1] <= x < s[k]
                          const double x0 = s[k - 1];
                          const double x1 = s[k];
                          const double u0 = static_cast<double>(k - 1) / last;
                          return u0 + (x - x0) / (x1 - x0) / last;
                        },
                    },
                    kind_);
}

double Distribution1D::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw ArgumentError("quantile level must lie in (0, 1)");
  return std::visit(overloaded{
                        [&](const Normal& d) { return d.mean + d.sd * normal_quantile(u); },
                        [&](const Uniform& d) { return d.a + u * (d.b - d.a); },
                        [&](const Laplace& d) {
                          return u < 0.5 ? d.loc + d.scale * std::log(2.0 * u) : d.loc - d.scale * std::log(2.0 * (1.0 - u));
                        },
                        [&](const Empirical& d) {
                          const auto& s = d.samples;
                          if (s.size() == 1) return s.front();
                          const double pos = u * static_cast<double>(s.size() - 1);
                          const size_t k = std::min(static_cast<size_t>(pos), s.size() - 2);
                          const double frac = pos - static_cast<double>(k);
                          return s[k] + frac * (s[k + 1] - s[k]);
                        },
                    },
                    kind_);
}

std::string Distribution1D::describe() const {
  std::ostringstream out;
  out.precision(6);
  std::visit(overloaded{
                 [&](const Normal& d) { out << "N(" << d.mean << ", " << d.sd << ")"; },
                 [&](const Uniform& d) { out << "U(" << d.a << ", " << d.b << ")"; },
                 [&](const Laplace& d) { out << "Laplace(" << d.loc << ", " << d.scale << ")"; },
                 [&](const Empirical& d) { out << "Empirical(" << d.samples.size() << " samples)"; },
             },
             kind_);
  return out.str();
}

double monotone_map(const Distribution1D& p, const Distribution1D& q, double x, bool* clamped) {
  const double u = p.cdf(x);
  const double v = std::clamp(u, kCdfClamp, 1.0 - kCdfClamp);
  if (clamped) *clamped = v != u;
  return q.quantile(v);
}

AffineMap gaussian_transport(double m1, double s1, double m2, double s2) {
  if (!(s1 > 0.0) || !(s2 > 0.0)) throw ArgumentError("standard deviations must be positive");
  const double slope = s2 / s1;
  return AffineMap{slope, m2 - slope * m1};
}

double diversity_weighted_pi1(double alpha, double c, double mu1) {
  const double a = c * std::pow(mu1, alpha);
  const double b = std::pow(1.0 - mu1, alpha);
  return a / (a + b);
}

double TwoStockPortfolioCurve::pi1_at_theta(double theta) const { return logistic(theta - transport(theta)); }

double TwoStockPortfolioCurve::pi1(double mu1) const {
  if (!(mu1 > 0.0 && mu1 < 1.0)) throw DomainError("mu1 must lie in (0, 1)");
  return pi1_at_theta(std::log(mu1) - std::log1p(-mu1));
}

PortfolioMap TwoStockPortfolioCurve::as_portfolio_map() const {
  return PortfolioMap(
      [curve = *this](const Vector& mu) {
        if (mu.size() != 2) throw ArgumentError("two-stock portfolio needs two weights");
        const double w = curve.pi1_at_theta(std::log(mu[0]) - std::log(mu[1]));
        Vector pi(2);
        pi << w, 1.0 - w;
        return pi;
      },
      std::holds_alternative<Empirical>(q_.kind()) == false, "two_stock");
}

TwoStockPortfolioCurve two_stock_portfolio(const Distribution1D& p, const Distribution1D& q) {
  return TwoStockPortfolioCurve(p, q);
}

OptimalityReport verify_1d_optimality(const Distribution1D& p, const Distribution1D& q, int grid_size) {
  if (grid_size < 1 || grid_size > 8) throw ArgumentError("grid size must lie in 1..8");
  OptimalityReport report{};
  const size_t n = static_cast<size_t>(grid_size);
  for (size_t k = 0; k < n; ++k) {
    const double u = (static_cast<double>(k) + 0.5) / static_cast<double>(n);
    report.source_atoms.push_back(p.quantile(u));
    report.target_atoms.push_back(q.quantile(u));
  }
  auto has_repeats = [](const std::vector<double>& v) {
    return std::adjacent_find(v.begin(), v.end()) != v.end();
  };
  report.degenerate = has_repeats(report.source_atoms) || has_repeats(report.target_atoms);

  Matrix costs(grid_size, grid_size);
  for (Index i = 0; i < grid_size; ++i)
    for (Index j = 0; j < grid_size; ++j) {
      const Vector x = Vector::Constant(1, report.source_atoms[static_cast<size_t>(i)]);
      const Vector y = Vector::Constant(1, report.target_atoms[static_cast<size_t>(j)]);
      costs(i, j) = cost(CostKind::ExpShift, x, y);
    }
  const auto all = enumerate_assignments(costs);
  // Lexicographic enumeration starts with the identity, the sorted pairing.
  report.monotone_value = all.front().value;
  double best_other = std::numeric_limits<double>::infinity();
  for (size_t k = 1; k < all.size(); ++k) best_other = std::min(best_other, all[k].value);
  report.runner_up_gap = best_other - report.monotone_value;
  report.monotone_optimal = n == 1 || report.runner_up_gap >= 0.0;
  report.unique = n == 1 || report.runner_up_gap > 1e-12;
  return report;
}

}  // namespace fgplab

#pragma once

#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "fgplab/portfolio_map.hpp"
#include "fgplab/transport.hpp"

namespace fgplab {

inline constexpr double kCdfClamp = 1e-12;

// Inverse of the standard normal CDF.
double normal_quantile(double u);
double normal_cdf(double z);

struct Normal {
  double mean;
  double sd;
};
struct Uniform {
  double a;
  double b;
};
struct Laplace {
  double loc;
  double scale;
};
// Sorted samples.  The CDF is linear between the knots (x_(k), (k-1)/(N-1));
// a single sample is a point mass.
struct Empirical {
  std::vector<double> samples;
};

class Distribution1D {
 public:
  using Kind = std::variant<Normal, Uniform, Laplace, Empirical>;

  static Distribution1D normal(double mean, double sd);
  static Distribution1D uniform(double a, double b);
  static Distribution1D laplace(double loc, double scale);
  static Distribution1D empirical(std::vector<double> samples);
  static Distribution1D point_mass(double x) { return empirical({x}); }

  // {"kind":"normal","mean":m,"sd":s} | {"kind":"uniform","a":a,"b":b} |
  // {"kind":"laplace","loc":a,"scale":b} | {"kind":"empirical","samples":[...]} |
  // {"kind":"empirical","samples_file":path}.  Relative sample files resolve
  // against base_dir.
  static Distribution1D from_json(const nlohmann::json& spec, const std::string& base_dir = "");
  nlohmann::json to_json() const;

  const Kind& kind() const { return kind_; }
  double cdf(double x) const;
  // inf{y : cdf(y) >= u}, u in (0, 1).
  double quantile(double u) const;
  std::string describe() const;

 private:
  explicit Distribution1D(Kind kind) : kind_(std::move(kind)) {}
  Kind kind_;
};

// F(x) = quantile_Q(cdf_P(x)) with cdf_P clamped to [1e-12, 1 - 1e-12].
double monotone_map(const Distribution1D& p, const Distribution1D& q, double x, bool* clamped = nullptr);

struct AffineMap {
  double slope;
  double intercept;

  double operator()(double x) const { return slope * x + intercept; }
  // Exponent and constant of the diversity-weighted form.
  double alpha() const { return 1.0 - slope; }
  double c() const { return std::exp(-intercept); }
};

// Monotone map between N(m1, s1) and N(m2, s2), with sd parameters.
AffineMap gaussian_transport(double m1, double s1, double m2, double s2);

// c mu1^alpha / (c mu1^alpha + mu2^alpha).
double diversity_weighted_pi1(double alpha, double c, double mu1);

// Two-stock portfolio pi_1 = e^{theta - F(theta)} / (1 + e^{theta - F(theta)}).
class TwoStockPortfolioCurve {
 public:
  TwoStockPortfolioCurve(Distribution1D p, Distribution1D q) : p_(std::move(p)), q_(std::move(q)) {}

  double transport(double theta) const { return monotone_map(p_, q_, theta); }
  double pi1_at_theta(double theta) const;
  double pi1(double mu1) const;
  PortfolioMap as_portfolio_map() const;

  const Distribution1D& source() const { return p_; }
  const Distribution1D& target() const { return q_; }

 private:
  Distribution1D p_;
  Distribution1D q_;
};

TwoStockPortfolioCurve two_stock_portfolio(const Distribution1D& p, const Distribution1D& q);

struct OptimalityReport {
  bool monotone_optimal;        // sorted pairing attains the minimum
  bool unique;                  // and beats every other permutation by > 1e-12
  bool degenerate;              // repeated atoms on either side
  double monotone_value;
  double runner_up_gap;         // second best value minus the sorted value
  std::vector<double> source_atoms;
  std::vector<double> target_atoms;
};

// Quantile discretization at (k + 1/2) / N, psi-cost brute force.
OptimalityReport verify_1d_optimality(const Distribution1D& p, const Distribution1D& q, int grid_size);

}  // namespace fgplab

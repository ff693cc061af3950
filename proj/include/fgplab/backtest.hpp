#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fgplab/dynamics.hpp"
#include "fgplab/rearrangement.hpp"
#include "fgplab/transport.hpp"

namespace fgplab {

struct PriceSeries {
  std::vector<std::string> dates;
  Matrix prices;  // rows = dates, columns = assets

  Index length() const { return prices.rows(); }
  Index assets() const { return prices.cols(); }
};

// CSV with header date,p1,...,pn.  Errors name the offending line.
PriceSeries parse_prices(std::istream& in, const std::string& source = "prices");
PriceSeries load_prices(const std::string& path);
void write_prices(std::ostream& out, const PriceSeries& series);

// X_i(t) = cap_i p_i(t) / p_i(0), mu(t) = X(t) / sum X(t).  Empty caps mean all ones.
MarketPath market_weights(const PriceSeries& series, const Vector& initial_caps = Vector());

// theta(t) = log(mu_1 / mu_2) for two assets.
std::vector<double> two_stock_theta(const MarketPath& path);

enum class SdDenominator { N, NMinusOne };

// Normal matching the sample mean and standard deviation.
Distribution1D fit_P(const std::vector<double>& theta, SdDenominator denominator = SdDenominator::NMinusOne);

// Half-open row range [begin, end).
struct IndexRange {
  Index begin;
  Index end;
  Index size() const { return end - begin; }
};

// Target law for the backtest: a 1-D distribution for two assets, or a
// discrete measure of exponential-coordinate shifts for more.
struct TargetSpec {
  std::string label;
  std::optional<Distribution1D> law;
  std::optional<DiscreteMeasure> shifts;
};

struct BacktestConfig {
  IndexRange train;
  IndexRange test;
  std::vector<TargetSpec> targets;
  Vector initial_caps;  // empty: all ones
  SdDenominator sd_denominator = SdDenominator::NMinusOne;

  // Keys: train, test ([begin, end)), q_spec (object or array), initial_caps,
  // sd_denominator ("n" or "n-1").
  static BacktestConfig from_json(const nlohmann::json& spec, const std::string& base_dir = "");
};

struct BacktestReport {
  std::string label;
  std::vector<std::string> dates;  // test window
  std::vector<double> logV;        // logV.front() == 0
  std::vector<std::string> theta_dates;
  std::vector<Vector> theta;       // whole series
  std::optional<Distribution1D> p_fit;
  std::vector<std::pair<double, double>> curve;  // (mu1, pi1)
};

std::vector<BacktestReport> run_backtest(const PriceSeries& series, const BacktestConfig& config);

// logV.tsv, curve.tsv and theta.tsv; with several reports, one subdirectory
// q1, q2, ... per report.
void emit_plot_data(const std::vector<BacktestReport>& reports, const std::string& out_dir);
void emit_plot_data(const BacktestReport& report, const std::string& out_dir);

// Two-stock monthly series, 1995-01 to 2015-07, seed 42.  theta(0) = 0 and
// the first 120 rows have sample mean -0.626 and sample sd 0.305.
PriceSeries synthetic_two_stock_series();

}  // namespace fgplab

#include "fgplab/backtest.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

namespace fgplab {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

IndexRange parse_range(const nlohmann::json& j, const char* key) {
  const auto v = j.at(key).get<std::vector<long long>>();
  if (v.size() != 2 || v[0] < 0 || v[1] < v[0])
    throw ParseError(std::string(key) + " must be [begin, end) with 0 <= begin <= end");
  return IndexRange{static_cast<Index>(v[0]), static_cast<Index>(v[1])};
}

TargetSpec parse_target(const nlohmann::json& j, const std::string& base_dir) {
  TargetSpec t;
  if (j.value("kind", std::string()) == "discrete") {
    t.shifts = DiscreteMeasure::from_json(j);
    t.label = j.value("label", std::string("discrete"));
  } else {
    t.law = Distribution1D::from_json(j, base_dir);
    t.label = j.value("label", t.law->describe());
  }
  return t;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << body;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string shift_month(int year, int month, int offset) {
  const int total = year * 12 + (month - 1) + offset;
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d", total / 12, total % 12 + 1);
  return buf;
}

}  // namespace

PriceSeries parse_prices(std::istream& in, const std::string& source) {
  static const std::regex kDate(R"(\d{4}-\d{2}(-\d{2})?)");
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source + ": empty file");
  const auto header = split_csv(trim(line));
  if (header.empty() || trim(header[0]) != "date") throw ParseError(source + ": line 1: header must start with 'date'");
  if (header.size() < 3) throw ParseError(source + ": line 1: need at least two price columns");
  const size_t n = header.size() - 1;

  PriceSeries series;
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string row = trim(line);
    if (row.empty()) continue;
    const std::string where = source + ": line " + std::to_string(lineno);
    const auto cells = split_csv(row);
    if (cells.size() != header.size())
      throw ParseError(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                       std::to_string(cells.size()));
    const std::string date = trim(cells[0]);
    if (!std::regex_match(date, kDate)) throw ParseError(where + ": malformed date '" + date + "'");
    if (!series.dates.empty() && !(series.dates.back() < date))
      throw ParseError(where + ": dates must be strictly increasing");
    std::vector<double> prices(n);
    for (size_t i = 0; i < n; ++i) {
      const std::string cell = trim(cells[i + 1]);
      double value;
      try {
        size_t used = 0;
        value = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ParseError(where + ": malformed price '" + cell + "'");
      }
      if (!(value > 0.0) || !std::isfinite(value)) throw ParseError(where + ": price must be positive");
      prices[i] = value;
    }
    series.dates.push_back(date);
    rows.push_back(std::move(prices));
  }
  if (rows.empty()) throw ParseError(source + ": no data rows");
  series.prices.resize(static_cast<Index>(rows.size()), static_cast<Index>(n));
  for (size_t t = 0; t < rows.size(); ++t)
    for (size_t i = 0; i < n; ++i) series.prices(static_cast<Index>(t), static_cast<Index>(i)) = rows[t][i];
  return series;
}

PriceSeries load_prices(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return parse_prices(in, path);
}

void write_prices(std::ostream& out, const PriceSeries& series) {
  out << "date";
  for (Index i = 0; i < series.assets(); ++i) out << ",p" << i + 1;
  out << "\n";
  for (Index t = 0; t < series.length(); ++t) {
    out << series.dates[static_cast<size_t>(t)];
    for (Index i = 0; i < series.assets(); ++i) out << "," << fmt(series.prices(t, i));
    out << "\n";
  }
}

MarketPath market_weights(const PriceSeries& series, const Vector& initial_caps) {
  const Index n = series.assets();
  const Vector caps = initial_caps.size() == 0 ? Vector::Ones(n) : initial_caps;
  if (caps.size() != n) throw ArgumentError("initial caps must match the number of assets");
  if (!(caps.array() > 0.0).all() || !caps.allFinite()) throw ArgumentError("initial caps must be positive");
  if (series.length() < 2) throw ArgumentError("price series needs at least two rows");
  Matrix weights(series.length(), n);
  for (Index t = 0; t < series.length(); ++t) {
    const Vector cap = (caps.array() * series.prices.row(t).transpose().array() / series.prices.row(0).transpose().array()).matrix();
    weights.row(t) = (cap / cap.sum()).transpose();
  }
  return MarketPath(std::move(weights));
}

std::vector<double> two_stock_theta(const MarketPath& path) {
  if (path.dimension() != 2) throw ArgumentError("theta series needs two assets");
  std::vector<double> out(static_cast<size_t>(path.length()));
  for (Index t = 0; t < path.length(); ++t) out[static_cast<size_t>(t)] = std::log(path.points()(t, 0)) - std::log(path.points()(t, 1));
  return out;
}

Distribution1D fit_P(const std::vector<double>& theta, SdDenominator denominator) {
  if (theta.size() < 2) throw ArgumentError("fitting needs at least two points");
  const double n = static_cast<double>(theta.size());
  double mean = 0.0;
  for (double x : theta) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : theta) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (denominator == SdDenominator::N ? n : n - 1.0));
  if (!(sd > 0.0)) throw NumericDegeneracyError("training data has zero variance");
  return Distribution1D::normal(mean, sd);
}

BacktestConfig BacktestConfig::from_json(const nlohmann::json& spec, const std::string& base_dir) {
  try {
    BacktestConfig config;
    config.train = parse_range(spec, "train");
    config.test = parse_range(spec, "test");
    if (config.train.end > config.test.begin) throw ParseError("train window must end before the test window begins");
    const auto& q = spec.at("q_spec");
    if (q.is_array()) {
      for (const auto& item : q) config.targets.push_back(parse_target(item, base_dir));
    } else {
      config.targets.push_back(parse_target(q, base_dir));
    }
    if (config.targets.empty()) throw ParseError("q_spec is empty");
    if (spec.contains("initial_caps")) {
      const auto caps = spec.at("initial_caps").get<std::vector<double>>();
      config.initial_caps = Eigen::Map<const Vector>(caps.data(), static_cast<Index>(caps.size()));
    }
    const std::string denom = spec.value("sd_denominator", std::string("n-1"));
    if (denom == "n") config.sd_denominator = SdDenominator::N;
    else if (denom == "n-1") config.sd_denominator = SdDenominator::NMinusOne;
    else throw ParseError("sd_denominator must be \"n\" or \"n-1\"");
    return config;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("backtest config: ") + e.what());
  }
}

std::vector<BacktestReport> run_backtest(const PriceSeries& series, const BacktestConfig& config) {
  const Index len = series.length();
  if (config.train.end > len || config.test.end > len) throw ArgumentError("window extends past the series");
  if (config.train.end > config.test.begin) throw ArgumentError("train window must precede the test window");
  if (config.train.size() < 2) throw ArgumentError("train window needs at least two rows");

  const MarketPath path = market_weights(series, config.initial_caps);
  const Index n = path.dimension();
  std::vector<Vector> theta;
  for (Index t = 0; t < len; ++t) theta.push_back(to_exponential(path.point(t)).theta);

  std::optional<Distribution1D> p_fit;
  std::vector<double> train_theta;
  if (n == 2) {
    for (Index t = config.train.begin; t < config.train.end; ++t) train_theta.push_back(theta[static_cast<size_t>(t)][0]);
    p_fit = fit_P(train_theta, config.sd_denominator);
  }

  std::vector<std::string> test_dates(series.dates.begin() + config.test.begin, series.dates.begin() + config.test.end);
  std::vector<BacktestReport> reports;
  for (const auto& target : config.targets) {
    BacktestReport report;
    report.label = target.label;
    report.dates = test_dates;
    report.theta_dates = series.dates;
    report.theta = theta;
    report.p_fit = p_fit;

    std::optional<PortfolioMap> pi;
    if (target.law) {
      if (n != 2) throw ArgumentError("one-dimensional targets need exactly two assets; use a discrete q_spec");
      const TwoStockPortfolioCurve curve = two_stock_portfolio(*p_fit, *target.law);
      pi = curve.as_portfolio_map();
      for (int k = 0; k <= 100; ++k) {
        const double th = p_fit->quantile(0.0005 + 0.999 * k / 100.0);
        const double mu1 = 1.0 / (1.0 + std::exp(-th));
        report.curve.emplace_back(mu1, curve.pi1_at_theta(th));
      }
    } else {
      // Training theta values as a uniform empirical measure, merged on repeats.
      std::map<std::vector<double>, double> counts;
      for (Index t = config.train.begin; t < config.train.end; ++t) {
        const Vector& th = theta[static_cast<size_t>(t)];
        counts[std::vector<double>(th.data(), th.data() + th.size())] += 1.0;
      }
      std::vector<Vector> atoms;
      Vector weights(static_cast<Index>(counts.size()));
      Index k = 0;
      for (const auto& [atom, count] : counts) {
        atoms.emplace_back(Eigen::Map<const Vector>(atom.data(), static_cast<Index>(atom.size())));
        weights[k++] = count / static_cast<double>(config.train.size());
      }
      weights /= weights.sum();
      const DiscreteMeasure source(std::move(atoms), std::move(weights));
      if (target.shifts->dimension() != n - 1) throw ArgumentError("shift atoms must have n - 1 coordinates");
      const Coupling coupling = solve_discrete(source, *target.shifts, CostKind::ExpShift);
      pi = portfolio_from_support(coupling, source, *target.shifts, CostKind::ExpShift);
    }

    if (config.test.size() >= 2) {
      const MarketPath window(path.points().middleRows(config.test.begin, config.test.size()));
      report.logV = log_relative_value(*pi, window);
    } else if (config.test.size() == 1) {
      report.logV = {0.0};
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

void emit_plot_data(const BacktestReport& report, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
  const std::filesystem::path dir(out_dir);

  std::string body = "date\tlogV\n";
  for (size_t t = 0; t < report.logV.size(); ++t) body += report.dates[t] + "\t" + fmt(report.logV[t]) + "\n";
  write_file(dir / "logV.tsv", body);

  body = "mu1\tpi1\n";
  for (const auto& [mu1, pi1] : report.curve) body += fmt(mu1) + "\t" + fmt(pi1) + "\n";
  write_file(dir / "curve.tsv", body);

  body = "date";
  const Index k = report.theta.empty() ? 1 : report.theta.front().size();
  if (k == 1) body += "\ttheta";
  else
    for (Index i = 0; i < k; ++i) body += "\ttheta" + std::to_string(i + 1);
  body += "\n";
  for (size_t t = 0; t < report.theta.size(); ++t) {
    body += report.theta_dates[t];
    for (Index i = 0; i < k; ++i) body += "\t" + fmt(report.theta[t][i]);
    body += "\n";
  }
  write_file(dir / "theta.tsv", body);
}

void emit_plot_data(const std::vector<BacktestReport>& reports, const std::string& out_dir) {
  if (reports.size() == 1) return emit_plot_data(reports.front(), out_dir);
  for (size_t k = 0; k < reports.size(); ++k)
    emit_plot_data(reports[k], (std::filesystem::path(out_dir) / ("q" + std::to_string(k + 1))).string());
}

PriceSeries synthetic_two_stock_series() {
  constexpr int kMonths = 247;
  constexpr int kTrain = 120;
  constexpr double kMean = -0.626;
  constexpr double kSd = 0.305;
  Rng rng(42);
  std::normal_distribution<double> normal;

  // Mean-reverting log weight ratio.
  std::vector<double> x(kMonths, 0.0);
  for (int t = 1; t < kMonths; ++t) x[static_cast<size_t>(t)] = 0.85 * x[static_cast<size_t>(t - 1)] + normal(rng);

  // Affine map on t >= 1 fixing the training mean and sd; theta(0) stays 0.
  const double big_n = kTrain;
  const double k = kTrain - 1;
  double xbar = 0.0;
  for (int t = 1; t < kTrain; ++t) xbar += x[static_cast<size_t>(t)];
  xbar /= k;
  double sxx = 0.0;
  for (int t = 1; t < kTrain; ++t) sxx += (x[static_cast<size_t>(t)] - xbar) * (x[static_cast<size_t>(t)] - xbar);
  const double mean_rest = big_n * kMean / k;
  const double sum_sq = (big_n - 1.0) * kSd * kSd + big_n * kMean * kMean;
  const double a = std::sqrt((sum_sq - k * mean_rest * mean_rest) / sxx);
  const double b = mean_rest - a * xbar;
  std::vector<double> theta(kMonths, 0.0);
  for (int t = 1; t < kMonths; ++t) theta[static_cast<size_t>(t)] = a * x[static_cast<size_t>(t)] + b;

  PriceSeries series;
  series.prices.resize(kMonths, 2);
  double log_p2 = 0.0;
  for (int t = 0; t < kMonths; ++t) {
    if (t > 0) log_p2 += 0.005 + 0.04 * normal(rng);
    series.dates.push_back(shift_month(1995, 1, t));
    series.prices(t, 1) = std::exp(log_p2);
    series.prices(t, 0) = std::exp(log_p2 + theta[static_cast<size_t>(t)]);
  }
  return series;
}

}  // namespace fgplab

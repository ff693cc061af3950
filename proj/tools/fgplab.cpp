#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "fgplab/backtest.hpp"
#include "fgplab/calculus.hpp"
#include "fgplab/dynamics.hpp"
#include "fgplab/rearrangement.hpp"
#include "fgplab/specs.hpp"
#include "fgplab/transport.hpp"

using namespace fgplab;

namespace {

enum Exit { kOk = 0, kViolation = 1, kInputError = 2, kDegenerate = 3 };

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void print_ring(const std::vector<Vector>& ring) {
  for (const auto& x : ring) {
    for (Index i = 0; i < x.size(); ++i) std::cout << (i ? "\t" : "") << fmt(x[i]);
    std::cout << "\n";
  }
}

Box region_for(const std::string& region_arg, const PortfolioSpec& spec) {
  if (!region_arg.empty()) {
    Box box = Box::from_json(read_json_arg(region_arg));
    if (spec.dimension && *spec.dimension != box.dimension())
      throw ArgumentError("region dimension does not match the portfolio");
    return box;
  }
  return Box::whole(spec.dimension.value_or(3));
}

std::ofstream open_out(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

int cmd_backtest(const std::string& prices, const std::string& config_path, const std::string& out_dir,
                 const std::string& sd_denominator) {
  const PriceSeries series = load_prices(prices);
  const auto base = std::filesystem::path(config_path).parent_path().string();
  BacktestConfig config = BacktestConfig::from_json(read_json_file(config_path), base);
  if (sd_denominator == "n") config.sd_denominator = SdDenominator::N;
  else if (sd_denominator == "n-1") config.sd_denominator = SdDenominator::NMinusOne;
  const auto reports = run_backtest(series, config);
  emit_plot_data(reports, out_dir);
  if (reports.front().p_fit) std::cout << "P_fit\t" << reports.front().p_fit->describe() << "\n";
  for (const auto& r : reports)
    std::cout << r.label << "\tfinal_logV\t" << (r.logV.empty() ? std::string("nan") : fmt(r.logV.back())) << "\n";
  return kOk;
}

int cmd_solve_1d(const std::string& p_arg, const std::string& q_arg, int grid, const std::string& out_path) {
  if (grid < 1) throw ArgumentError("grid must be positive");
  const Distribution1D p = Distribution1D::from_json(read_json_arg(p_arg));
  const Distribution1D q = Distribution1D::from_json(read_json_arg(q_arg));
  const TwoStockPortfolioCurve curve = two_stock_portfolio(p, q);
  auto out = open_out(out_path);
  out << "theta\tF\tmu1\tpi1\n";
  for (int k = 0; k < grid; ++k) {
    const double theta = p.quantile((k + 0.5) / grid);
    const double mu1 = 1.0 / (1.0 + std::exp(-theta));
    out << fmt(theta) << "\t" << fmt(curve.transport(theta)) << "\t" << fmt(mu1) << "\t" << fmt(curve.pi1_at_theta(theta))
        << "\n";
  }
  const auto* np = std::get_if<Normal>(&p.kind());
  const auto* nq = std::get_if<Normal>(&q.kind());
  if (np && nq) {
    const AffineMap f = gaussian_transport(np->mean, np->sd, nq->mean, nq->sd);
    std::cout << "slope\t" << fmt(f.slope) << "\nintercept\t" << fmt(f.intercept) << "\nalpha\t" << fmt(f.alpha())
              << "\nc\t" << fmt(f.c()) << "\n";
  }
  if (grid <= 8) {
    const OptimalityReport r = verify_1d_optimality(p, q, grid);
    std::cout << "monotone_optimal\t" << (r.monotone_optimal ? "yes" : "no") << "\nrunner_up_gap\t"
              << fmt(r.runner_up_gap) << "\n";
  }
  return kOk;
}

int cmd_solve_discrete(const std::string& problem_path, const std::string& out_path) {
  const auto problem = read_json_file(problem_path);
  DiscreteMeasure p = DiscreteMeasure::from_json(problem.at("P"));
  DiscreteMeasure q = DiscreteMeasure::from_json(problem.at("Q"));
  const CostKind kind = parse_cost_kind(problem.at("cost").get<std::string>());
  const Coupling coupling = solve_discrete(p, q, kind);
  auto out = open_out(out_path);
  for (const auto& e : coupling.entries) out << e.source << "\t" << e.target << "\t" << fmt(e.mass) << "\n";
  std::cout << "value\t" << fmt(coupling.value) << "\n";
  return kOk;
}

int cmd_mcm_check(const std::string& portfolio, long trials, std::optional<double> delta, const std::string& region_arg,
                  int max_m, unsigned long seed) {
  const PortfolioSpec spec = portfolio_from_json(read_json_arg(portfolio));
  const Box region = region_for(region_arg, spec);
  FuzzOptions options;
  options.trials = trials;
  options.max_m = max_m;
  options.delta = delta;
  options.seed = seed;
  const FuzzReport report = mcm_fuzz(spec.map, region, options);
  std::cout << "trials\t" << report.trials << "\nmin_log_value\t" << fmt(report.min_log_value) << "\n";
  if (!report.witness) {
    std::cout << "witness\tnone\n";
    return kOk;
  }
  std::cout << "witness\n";
  print_ring(*report.witness);
  return kViolation;
}

int cmd_find_cycle(const std::string& portfolio, long budget, const std::string& region_arg, unsigned long seed) {
  const PortfolioSpec spec = portfolio_from_json(read_json_arg(portfolio));
  const Box region = region_for(region_arg, spec);
  const auto found = find_violating_cycle(spec.map, region, budget, seed);
  if (!found) {
    std::cout << "cycle\tnone\n";
    return kOk;
  }
  std::cout << "log_value\t" << fmt(found->log_value) << "\nevaluations\t" << found->evaluations << "\ncycle\n";
  print_ring(found->ring);
  return kViolation;
}

int cmd_decompose(const std::string& generator, const std::string& path_file) {
  const GeneratingFunction phi = GeneratingFunction::from_json(read_json_arg(generator));
  const MarketPath path = MarketPath::load_csv(path_file);
  const ValueDecomposition d = fernholz_decompose(phi, path);
  std::cout << "t\tlogV\tphi_term\tdrift\n";
  for (size_t t = 0; t < d.logV.size(); ++t)
    std::cout << t << "\t" << fmt(d.logV[t]) << "\t" << fmt(d.phi_term[t]) << "\t" << fmt(d.drift[t]) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Functionally generated portfolios, cyclical monotonicity and optimal transport"};
  app.require_subcommand(1);
  int code = kOk;

  std::string prices, config, out_dir, sd_denominator;
  auto* backtest = app.add_subcommand("backtest", "Fit, transport and backtest on a price series");
  backtest->add_option("--prices", prices, "CSV with header date,p1,...,pn")->required();
  backtest->add_option("--config", config, "JSON backtest config")->required();
  backtest->add_option("--out", out_dir, "Output directory")->required();
  backtest->add_option("--sd-denominator", sd_denominator, "Override the config: n or n-1")
      ->check(CLI::IsMember({"n", "n-1"}));

  std::string p_arg, q_arg, out_file;
  int grid = 101;
  auto* solve1d = app.add_subcommand("solve-1d", "Monotone rearrangement between two 1-D laws");
  solve1d->add_option("--p", p_arg, "Source distribution (JSON or file)")->required();
  solve1d->add_option("--q", q_arg, "Target distribution (JSON or file)")->required();
  solve1d->add_option("--grid", grid, "Number of quantile points")->required();
  solve1d->add_option("--out", out_file, "Output TSV")->required();

  std::string problem;
  auto* discrete = app.add_subcommand("solve-discrete", "Exact discrete optimal transport");
  discrete->add_option("--problem", problem, "Problem JSON")->required();
  discrete->add_option("--out", out_file, "Coupling TSV")->required();

  std::string portfolio, region;
  long trials = 10000, budget = 100000;
  double delta = 0.0;
  int max_m = 6;
  unsigned long seed = 1;
  auto* mcm = app.add_subcommand("mcm-check", "Random search for cycles with negative log value");
  mcm->add_option("--portfolio", portfolio, "Portfolio spec (JSON or file)")->required();
  mcm->add_option("--trials", trials, "Number of random cycles")->required();
  auto* delta_opt = mcm->add_option("--delta", delta, "Largest jump size");
  mcm->add_option("--region", region, "Box as [[lo,hi],...] (JSON or file)");
  mcm->add_option("--max-m", max_m, "Largest cycle length")->check(CLI::Range(2, 12));
  mcm->add_option("--seed", seed, "Random seed");

  auto* cycle = app.add_subcommand("find-cycle", "Local search for an MCM violation");
  cycle->add_option("--portfolio", portfolio, "Portfolio spec (JSON or file)")->required();
  cycle->add_option("--budget", budget, "Cycle evaluations allowed")->required();
  cycle->add_option("--region", region, "Box as [[lo,hi],...] (JSON or file)");
  cycle->add_option("--seed", seed, "Random seed");

  std::string generator, path_file;
  auto* decompose = app.add_subcommand("decompose", "Split log relative value into generator and drift terms");
  decompose->add_option("--generator", generator, "Generator spec (JSON or file)")->required();
  decompose->add_option("--path", path_file, "Market weight CSV with header w1,...,wn")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInputError;
  }

  try {
    if (*backtest) code = cmd_backtest(prices, config, out_dir, sd_denominator);
    else if (*solve1d) code = cmd_solve_1d(p_arg, q_arg, grid, out_file);
    else if (*discrete) code = cmd_solve_discrete(problem, out_file);
    else if (*mcm)
      code = cmd_mcm_check(portfolio, trials, *delta_opt ? std::optional<double>(delta) : std::nullopt, region, max_m, seed);
    else if (*cycle) code = cmd_find_cycle(portfolio, budget, region, seed);
    else if (*decompose) code = cmd_decompose(generator, path_file);
  } catch (const NumericDegeneracyError& e) {
    std::cerr << "fgplab: numeric degeneracy: " << e.what() << "\n";
    return kDegenerate;
  } catch (const Error& e) {
    std::cerr << "fgplab: " << e.what() << "\n";
    return kInputError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "fgplab: " << e.what() << "\n";
    return kInputError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "fgplab: " << e.what() << "\n";
    return kInputError;
  }
  return code;
}

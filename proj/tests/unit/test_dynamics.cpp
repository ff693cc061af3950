#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fgplab/calculus.hpp"
#include "fgplab/dynamics.hpp"
#include "test_support.hpp"

using namespace fgplab;
using namespace fgplab::testing;

namespace {

MarketPath random_path(Rng& rng, Index n, int steps) {
  std::vector<Vector> rows;
  rows.push_back(sample_dirichlet(rng, n, 4.0));
  std::normal_distribution<double> normal(0.0, 0.05);
  for (int t = 0; t < steps; ++t) {
    Vector next = rows.back();
    for (Index i = 0; i < n; ++i) next[i] *= std::exp(normal(rng));
    rows.push_back(next / next.sum());
  }
  return MarketPath::from_rows(rows);
}

MarketPath two_point_cycle() { return MarketPath::from_rows({vec({0.4, 0.6}), vec({0.6, 0.4}), vec({0.4, 0.6})}); }

}  // namespace

TEST_CASE("relative value examples") {
  Rng rng(1);
  const MarketPath path = random_path(rng, 4, 30);
  for (double v : relative_value(PortfolioMap::market(), path)) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));

  const auto half = PortfolioMap::constant(pt({0.5, 0.5}));
  const auto v = relative_value(half, MarketPath::from_rows({vec({0.4, 0.6}), vec({0.6, 0.4})}));
  REQUIRE(v.size() == 2);
  CHECK(v[0] == 1.0);
  CHECK(v[1] == doctest::Approx(1.0833333333333335).epsilon(1e-15));

  const auto first = PortfolioMap::constant(SimplexPoint(vec({1.0, 0.0}), Openness::Closed));
  const auto doubled = relative_value(first, MarketPath::from_rows({vec({0.3, 0.7}), vec({0.6, 0.4})}));
  CHECK(doubled[1] == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("nonpositive multiplier is degenerate") {
  const auto leveraged = PortfolioMap([](const Vector&) { return vec({-3.0, 4.0}); }, true);
  const MarketPath path = MarketPath::from_rows({vec({0.5, 0.5}), vec({0.9, 0.1})});
  CHECK_THROWS_AS(log_relative_value(leveraged, path), NumericDegeneracyError);
  CHECK(std::isinf(cycle_log_value(leveraged, std::vector<Vector>{vec({0.5, 0.5}), vec({0.9, 0.1})})));
}

TEST_CASE("market path validation") {
  CHECK_THROWS(MarketPath::from_rows({vec({0.5, 0.5})}));
  CHECK_THROWS(MarketPath::from_rows({vec({0.5, 0.5}), vec({1.0, 0.0})}));
  CHECK_THROWS(MarketPath::from_rows({vec({0.5, 0.5}), vec({0.2, 0.3, 0.5})}));
}

TEST_CASE("fernholz decomposition") {
  Rng rng(5);
  const auto gens = builtin_generators3();
  for (const auto& phi : gens) {
    double worst = 0.0;
    bool monotone = true;
    for (int k = 0; k < 1000; ++k) {
      const MarketPath path = random_path(rng, 3, 50);
      const auto d = fernholz_decompose(phi, path);
      REQUIRE(d.logV.size() == 51);
      CHECK(d.drift[0] == 0.0);
      for (size_t t = 0; t < d.logV.size(); ++t) {
        worst = std::max(worst, std::abs(d.logV[t] - d.phi_term[t] - d.drift[t]));
        if (t > 0 && d.drift[t] < d.drift[t - 1]) monotone = false;
      }
    }
    INFO(phi.name());
    CHECK(worst < 1e-9);
    CHECK(monotone);
  }

  const auto affine = GeneratingFunction::affine(vec({1.0, 2.0, 3.0}));
  const auto d = fernholz_decompose(affine, random_path(rng, 3, 20));
  for (size_t t = 0; t < d.drift.size(); ++t) {
    CHECK(d.drift[t] == 0.0);
    CHECK(d.logV[t] == doctest::Approx(d.phi_term[t]).epsilon(1e-12));
  }

  const auto gm = GeneratingFunction::geometric_mean(vec({0.5, 0.5}));
  const auto cyc = fernholz_decompose(gm, MarketPath::from_rows({vec({0.5, 0.5}), vec({0.6, 0.4}), vec({0.5, 0.5})}));
  CHECK(cyc.phi_term[2] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(cyc.logV[2] == doctest::Approx(cyc.drift[2]).epsilon(1e-14));
  CHECK(cyc.drift[2] == doctest::Approx(2 * 0.020411).epsilon(1e-4));

  const auto flat = fernholz_decompose(gm, MarketPath::from_rows({vec({0.3, 0.7}), vec({0.3, 0.7}), vec({0.3, 0.7})}));
  for (size_t t = 0; t < 3; ++t) {
    CHECK(flat.logV[t] == 0.0);
    CHECK(flat.phi_term[t] == 0.0);
    CHECK(flat.drift[t] == 0.0);
  }
}

TEST_CASE("value of a generated portfolio is bounded below") {
  Rng rng(8);
  for (const auto& phi : builtin_generators3()) {
    const auto pi = PortfolioMap::generated_by(phi);
    for (int k = 0; k < 50; ++k) {
      const MarketPath path = random_path(rng, 3, 100);
      double lo = INFINITY, hi = 0.0;
      for (Index t = 0; t <= 100; ++t) {
        lo = std::min(lo, eval(phi, path.point(t)));
        hi = std::max(hi, eval(phi, path.point(t)));
      }
      const auto logV = log_relative_value(pi, path);
      for (double x : logV) CHECK(x >= std::log(lo) - std::log(hi) - 1e-12);
    }
  }
}

TEST_CASE("cycle log value") {
  const auto half = PortfolioMap::constant(pt({0.5, 0.5}));
  CHECK(cycle_log_value(half, two_point_cycle()) == doctest::Approx(0.16008541534707313).epsilon(1e-14));
  CHECK(cycle_log_value(half, std::vector<Vector>{vec({0.4, 0.6}), vec({0.6, 0.4})}) ==
        doctest::Approx(0.16008541534707313).epsilon(1e-14));

  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    std::vector<Vector> ring;
    for (int j = 0; j < 5; ++j) ring.push_back(sample_dirichlet(rng, 4));
    CHECK(std::abs(cycle_log_value(PortfolioMap::market(), ring)) < 1e-14);
  }
  CHECK_THROWS_AS(cycle_log_value(half, MarketPath::from_rows({vec({0.4, 0.6}), vec({0.6, 0.4})})), ArgumentError);
}

TEST_CASE("fuzzing generated portfolios finds no witness") {
  for (const auto& phi : builtin_generators3()) {
    const auto report = mcm_fuzz(PortfolioMap::generated_by(phi), Box::whole(3));
    INFO(phi.name());
    CHECK(report.trials == 10000);
    CHECK(report.min_log_value >= kViolationThreshold);
    CHECK_FALSE(report.witness.has_value());
  }
  FuzzOptions local;
  local.delta = 0.05;
  local.trials = 2000;
  const auto report = mcm_fuzz(PortfolioMap::generated_by(GeneratingFunction::diversity(0.3)), Box::whole(4), local);
  CHECK_FALSE(report.witness.has_value());

  const auto market = mcm_fuzz(PortfolioMap::market(), Box::whole(3));
  CHECK(std::abs(market.min_log_value) < 1e-14);
}

TEST_CASE("fuzzing the counterexample finds a witness") {
  const auto pi = counterexample_portfolio(0.5);
  const auto report = mcm_fuzz(pi, Box::around(Vector::Constant(3, 1.0 / 3.0), 0.1));
  REQUIRE(report.witness.has_value());
  CHECK(report.min_log_value < kViolationThreshold);
  CHECK(cycle_log_value(pi, *report.witness) < kViolationThreshold);
  for (const auto& x : *report.witness) CHECK(max_abs(x - Vector::Constant(3, 1.0 / 3.0)) <= 0.1 + 1e-15);
}

TEST_CASE("fuzz respects jump size and region") {
  CHECK_THROWS_AS(mcm_fuzz(PortfolioMap::market(), Box{vec({0.6, 0.6}), vec({0.9, 0.9})}), ArgumentError);
  Rng rng(2);
  const Box box = Box::around(vec({0.2, 0.3, 0.5}), 0.05);
  for (int k = 0; k < 200; ++k) CHECK(box.contains(sample_in_box(rng, box)));
}

TEST_CASE("cycle search") {
  const auto pi = counterexample_portfolio(0.5);
  const auto found = find_violating_cycle(pi, Box::whole(3), 20000);
  REQUIRE(found.has_value());
  CHECK(found->log_value < kViolationThreshold);
  CHECK(found->ring.size() >= 2);
  CHECK(found->ring.size() <= 6);
  CHECK(cycle_log_value(pi, found->ring) == doctest::Approx(found->log_value).epsilon(1e-12));

  double previous = 0.0;
  for (int k = 1; k <= 4; ++k) {
    const auto logV = log_relative_value(pi, repeat_cycle(found->ring, k));
    CHECK(logV.back() == doctest::Approx(k * found->log_value).epsilon(1e-9));
    CHECK(logV.back() < previous);
    previous = logV.back();
  }

  for (const auto& phi : builtin_generators3())
    CHECK_FALSE(find_violating_cycle(PortfolioMap::generated_by(phi), Box::whole(3), 5000).has_value());
}

TEST_CASE("buy and hold is cyclically monotone") {
  const auto first = PortfolioMap::constant(SimplexPoint(vec({1.0, 0.0}), Openness::Closed));
  CHECK(cycle_log_value(first, two_point_cycle()) == doctest::Approx(0.0).epsilon(1e-15));
  double worst = INFINITY;
  for (int a = 1; a < 40; ++a)
    for (int b = 1; b < 40; ++b) {
      if (a == b) continue;
      const std::vector<Vector> ring = {vec({a / 40.0, 1 - a / 40.0}), vec({b / 40.0, 1 - b / 40.0})};
      worst = std::min(worst, cycle_log_value(first, ring));
    }
  CHECK(worst >= -1e-12);
  CHECK_FALSE(find_violating_cycle(first, Box::whole(2), 3000).has_value());
}

TEST_CASE("exponential coordinates") {
  Rng rng(11);
  std::vector<Vector> theta;
  for (int k = 0; k < 30; ++k) theta.push_back(to_exponential(SimplexPoint(sample_dirichlet(rng, 3, 3.0))).theta);
  for (double x : relative_value_exp([](const Vector& t) { return Vector::Zero(t.size()); }, theta))
    CHECK(std::abs(x) < 1e-13);

  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = Matrix::Random(2, 2) * 0.5;
    const Vector b = Vector::Random(2);
    auto shift = [&](const Vector& t) -> Vector { return (a * t.array().tanh().matrix() + b).eval(); };
    const auto pi = PortfolioMap(
        [&](const Vector& mu) {
          const Vector t = to_exponential(SimplexPoint(mu)).theta;
          return from_exponential(ExpCoord{t - shift(t)}).coords();
        },
        true);
    std::vector<Vector> rows;
    for (const auto& t : theta) rows.push_back(from_exponential(ExpCoord{t}).coords());
    const auto direct = log_relative_value(pi, MarketPath::from_rows(rows));
    const auto viaexp = relative_value_exp(shift, theta);
    for (size_t t = 0; t < theta.size(); ++t) CHECK(viaexp[t] == doctest::Approx(direct[t]).epsilon(1e-10));

    std::vector<Vector> ring(theta.begin(), theta.begin() + 5);
    ring.push_back(ring.front());
    double expected = 0.0;
    for (size_t s = 0; s + 1 < ring.size(); ++s) {
      const Vector f = shift(ring[s]);
      expected += psi(ring[s + 1] - f) - psi(ring[s] - f);
    }
    CHECK(relative_value_exp(shift, ring).back() == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("path csv round trip") {
  Rng rng(4);
  const MarketPath path = random_path(rng, 3, 10);
  std::stringstream buffer;
  path.write_csv(buffer);
  CHECK(buffer.str().rfind("w1,w2,w3\n", 0) == 0);
  const MarketPath back = MarketPath::read_csv(buffer);
  CHECK((back.points() - path.points()).cwiseAbs().maxCoeff() <= 1e-15);

  std::istringstream bad("w1,w2\n0.5,0.5\n0.5,abc\n");
  try {
    MarketPath::read_csv(bad);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("oscillating path accumulates drift") {
  const auto phi = GeneratingFunction::diversity(0.5);
  std::vector<Vector> rows;
  for (int t = 0; t <= 400; ++t) rows.push_back(t % 2 == 0 ? vec({0.45, 0.55}) : vec({0.55, 0.45}));
  const auto d = fernholz_decompose(phi, MarketPath::from_rows(rows));
  CHECK(d.drift.back() > 0.5);
  CHECK(d.logV.back() == doctest::Approx(d.drift.back()).epsilon(1e-10));
}

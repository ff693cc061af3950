#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fgplab/dynamics.hpp"
#include "fgplab/errors.hpp"
#include "fgplab/transport.hpp"
#include "test_support.hpp"

using namespace fgplab;
using namespace fgplab::testing;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr CostKind kAllKinds[] = {CostKind::LogPartition, CostKind::ExpShift, CostKind::NegEntropy,
                                  CostKind::Quadratic};

Vector log_vertex(Index n, Index k) {
  Vector h = Vector::Constant(n, kNegInf);
  h[k] = 0.0;
  return h;
}

Vector vertex(Index n, Index k) { return Vector::Unit(n, k); }

std::vector<Vector> permutations_of(Vector base) {
  std::vector<Vector> out;
  std::sort(base.begin(), base.end());
  do out.push_back(base);
  while (std::next_permutation(base.begin(), base.end()));
  return out;
}

// Random atoms suited to each side of each cost.
std::pair<std::vector<Vector>, std::vector<Vector>> random_atoms(Rng& rng, CostKind kind, int m, Index n) {
  std::normal_distribution<double> normal;
  std::vector<Vector> xs, ys;
  for (int k = 0; k < m; ++k) {
    switch (kind) {
      case CostKind::LogPartition:
        xs.push_back(sample_dirichlet(rng, n, 2.0));
        ys.push_back(Vector::NullaryExpr(n, [&](Index) { return normal(rng); }));
        break;
      case CostKind::ExpShift:
      case CostKind::Quadratic:
        xs.push_back(Vector::NullaryExpr(n - (kind == CostKind::ExpShift), [&](Index) { return normal(rng); }));
        ys.push_back(Vector::NullaryExpr(n - (kind == CostKind::ExpShift), [&](Index) { return normal(rng); }));
        break;
      case CostKind::NegEntropy:
        xs.push_back(sample_dirichlet(rng, n, 2.0));
        ys.push_back(sample_dirichlet(rng, n, 1.0));
        break;
    }
  }
  return {xs, ys};
}

std::set<std::pair<size_t, size_t>> support_indices(const Coupling& c) {
  std::set<std::pair<size_t, size_t>> out;
  for (const auto& e : c.entries)
    if (e.mass > 1e-12) out.insert({e.source, e.target});
  return out;
}

void check_marginals(const Coupling& c, const DiscreteMeasure& p, const DiscreteMeasure& q) {
  Vector rows = Vector::Zero(static_cast<Index>(p.size()));
  Vector cols = Vector::Zero(static_cast<Index>(q.size()));
  for (const auto& e : c.entries) {
    CHECK(e.mass >= 0.0);
    rows[static_cast<Index>(e.source)] += e.mass;
    cols[static_cast<Index>(e.target)] += e.mass;
  }
  CHECK(max_abs(rows - p.weights) <= 1e-9);
  CHECK(max_abs(cols - q.weights) <= 1e-9);
}

}  // namespace

TEST_CASE("cost examples") {
  CHECK(cost(CostKind::LogPartition, vec({0.2, 0.3, 0.5}), vec({0, 0, 0})) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(cost(CostKind::LogPartition, vec({0.2, 0.3, 0.5}), log_vertex(3, 1)) == doctest::Approx(std::log(0.3)));
  CHECK_THROWS_AS(cost(CostKind::LogPartition, vec({0.5, 0.5}), vec({kNegInf, kNegInf})), ArgumentError);
  CHECK(cost(CostKind::NegEntropy, vec({0.2, 0.3, 0.5}), vec({0.2, 0.3, 0.5})) == doctest::Approx(0.0));
  CHECK(cost(CostKind::NegEntropy, vec({0.2, 0.3, 0.5}), vertex(3, 2)) == doctest::Approx(std::log(0.5)));
  CHECK(cost(CostKind::NegEntropy, vec({0.5, 0.5, 0.0}), vec({0.2, 0.3, 0.5})) == INFINITY);
  CHECK(cost(CostKind::ExpShift, vec({0.7}), vec({0.7})) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(cost(CostKind::ExpShift, vec({0.1, -0.4}), vec({0.1, -0.4})) == doctest::Approx(std::log(3.0)).epsilon(1e-15));
  CHECK(cost(CostKind::Quadratic, vec({1, 2}), vec({4, 6})) == 25.0);
  CHECK(parse_cost_kind("neg_entropy") == CostKind::NegEntropy);
  CHECK(to_string(CostKind::ExpShift) == "exp_shift");
  CHECK_THROWS_AS(parse_cost_kind("l2"), ParseError);
}

TEST_CASE("discrete measure validation") {
  CHECK_THROWS(DiscreteMeasure({vec({0.1}), vec({0.2})}, vec({0.5, 0.6})));
  CHECK_THROWS(DiscreteMeasure({vec({0.1}), vec({0.1})}, vec({0.5, 0.5})));
  CHECK_THROWS(DiscreteMeasure({vec({NAN})}, vec({1.0})));
  CHECK_THROWS(DiscreteMeasure({vec({0.1}), vec({0.2})}, vec({-0.5, 1.5})));
  const auto m = DiscreteMeasure::from_json(nlohmann::json::parse(R"({"atoms": [[0, null], ["-inf", 1]]})"));
  CHECK(m.weights[0] == 0.5);
  CHECK(std::isinf(m.atoms[0][1]));
  CHECK(std::isinf(m.atoms[1][0]));
}

TEST_CASE("single atom") {
  for (CostKind kind : kAllKinds) {
    Rng rng(1);
    const auto [xs, ys] = random_atoms(rng, kind, 1, 3);
    const DiscreteMeasure p({xs[0]}, vec({1.0}));
    const auto c = solve_discrete(p, p, kind == CostKind::LogPartition ? CostKind::Quadratic : kind);
    REQUIRE(c.entries.size() == 1);
    CHECK(c.entries[0].source == 0);
    CHECK(c.entries[0].target == 0);
    CHECK(c.entries[0].mass == 1.0);
    const auto b = brute_force_solve(p, p, kind == CostKind::LogPartition ? CostKind::Quadratic : kind);
    CHECK(b.entries.size() == 1);
  }
  const DiscreteMeasure p({vec({0.2, 0.8})}, vec({1.0}));
  CHECK(solve_discrete(p, p, CostKind::NegEntropy).value == doctest::Approx(0.0));
  CHECK(check_c_monotone({{vec({0.2, 0.8}), vec({0.2, 0.8})}}, CostKind::NegEntropy).ok);
}

TEST_CASE("one-dimensional quadratic transport is monotone") {
  Rng rng(9);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vector> xs, ys;
    for (int k = 0; k < 5; ++k) {
      xs.push_back(vec({normal(rng)}));
      ys.push_back(vec({normal(rng)}));
    }
    const auto p = DiscreteMeasure::uniform(xs), q = DiscreteMeasure::uniform(ys);
    const auto c = solve_discrete(p, q, CostKind::Quadratic);
    const auto b = brute_force_solve(p, q, CostKind::Quadratic);
    CHECK(c.value == b.value);
    for (const auto& e1 : c.entries)
      for (const auto& e2 : c.entries)
        if (xs[e1.source][0] < xs[e2.source][0]) CHECK(ys[e1.target][0] < ys[e2.target][0]);
  }
}

TEST_CASE("solver matches brute force") {
  for (CostKind kind : kAllKinds) {
    Rng rng(100 + static_cast<int>(kind));
    for (int trial = 0; trial < 200; ++trial) {
      const int m = 2 + trial % 6;
      const auto [xs, ys] = random_atoms(rng, kind, m, 3);
      const auto p = DiscreteMeasure::uniform(xs), q = DiscreteMeasure::uniform(ys);
      const auto c = solve_discrete(p, q, kind);
      const auto b = brute_force_solve(p, q, kind);
      INFO(to_string(kind), " m=", m);
      CHECK(c.value == b.value);
      check_marginals(c, p, q);
    }
  }
}

TEST_CASE("brute force limits and small cases") {
  std::vector<Vector> nine;
  for (int k = 0; k < 9; ++k) nine.push_back(vec({double(k)}));
  CHECK_THROWS_AS(brute_force_solve(DiscreteMeasure::uniform(nine), DiscreteMeasure::uniform(nine), CostKind::Quadratic),
                  ArgumentError);

  const auto p = DiscreteMeasure::uniform({vec({0.9, 0.1}), vec({0.1, 0.9})});
  const auto q = DiscreteMeasure::uniform({vec({5.0, 0.0}), vec({0.0, 0.0})});
  const auto b = brute_force_solve(p, q, CostKind::LogPartition);
  const Matrix c = cost_matrix(p, q, CostKind::LogPartition);
  CHECK(b.value == doctest::Approx(std::min(c(0, 0) + c(1, 1), c(0, 1) + c(1, 0)) / 2).epsilon(1e-12));
  CHECK(support_indices(b) == std::set<std::pair<size_t, size_t>>{{0, 1}, {1, 0}});

  const auto all = enumerate_assignments(c);
  REQUIRE(all.size() == 2);
  CHECK(all[0].permutation == std::vector<size_t>{0, 1});
}

TEST_CASE("optimal supports are cyclically monotone") {
  for (CostKind kind : kAllKinds) {
    Rng rng(7 + static_cast<int>(kind));
    for (int trial = 0; trial < 30; ++trial) {
      const auto [xs, ys] = random_atoms(rng, kind, 6, 3);
      std::uniform_real_distribution<double> unif(0.2, 1.0);
      Vector wp = Vector::NullaryExpr(6, [&](Index) { return unif(rng); });
      Vector wq = Vector::NullaryExpr(6, [&](Index) { return unif(rng); });
      const DiscreteMeasure p(xs, wp / wp.sum()), q(ys, wq / wq.sum());
      const auto c = solve_discrete(p, q, kind);
      check_marginals(c, p, q);
      const auto report = check_c_monotone(support_of(c, p, q), kind, 5);
      INFO(to_string(kind));
      CHECK(report.ok);
    }
  }
}

TEST_CASE("market coupling is not entropy optimal") {
  const std::vector<Vector> atoms = {vec({0.5, 0.3, 0.2}), vec({0.2, 0.5, 0.3}), vec({0.3, 0.2, 0.5})};
  std::vector<std::pair<Vector, Vector>> identity;
  for (const auto& a : atoms) identity.push_back({a, a});
  const auto report = check_c_monotone(identity, CostKind::NegEntropy);
  CHECK_FALSE(report.ok);
  CHECK(report.cycle.size() >= 2);
  CHECK(report.excess > 1e-9);

  const auto market = mcm_fuzz_finite(PortfolioMap::market(), atoms);
  CHECK_FALSE(market.witness.has_value());
}

TEST_CASE("change of measure") {
  CHECK(max_abs(change_of_measure(pt({0.5, 0.5}), vec({std::log(2.0), 0.0})).coords() - vec({2.0 / 3, 1.0 / 3})) <
        1e-15);
  Rng rng(2);
  for (int k = 0; k < 50; ++k) {
    const Vector mu = sample_dirichlet(rng, 4);
    CHECK(max_abs(change_of_measure(SimplexPoint(mu), Vector::Zero(4)).coords() - mu) < 1e-15);
    CHECK(change_of_measure(SimplexPoint(mu), log_vertex(4, 2)).coords() == vertex(4, 2));
  }
  const auto exp_pi = portfolio_from_exp_shift([](const Vector& t) { return Vector::Constant(t.size(), std::log(2.0)); });
  CHECK(max_abs(exp_pi(pt({0.5, 0.5})).coords() - vec({1.0 / 3, 2.0 / 3})) < 1e-15);
  const auto zero = portfolio_from_exp_shift([](const Vector& t) { return Vector::Zero(t.size()); });
  for (int k = 0; k < 20; ++k) {
    const Vector mu = sample_dirichlet(rng, 3);
    CHECK(max_abs(zero.weights(mu) - mu) < 1e-14);
  }
}

TEST_CASE("exp shift agrees with change of measure") {
  Rng rng(3);
  auto shift = [](const Vector& t) -> Vector { return (0.3 * t.array().sin() + 0.1 * t.array().square()).matrix(); };
  const auto a = portfolio_from_exp_shift(shift);
  const auto b = portfolio_from_coupling([&](const Vector& mu) {
    const Vector phi = shift(to_exponential(SimplexPoint(mu)).theta);
    Vector h = Vector::Zero(mu.size());
    h.head(phi.size()) = -phi;
    return h;
  });
  for (int k = 0; k < 200; ++k) {
    const Vector mu = sample_dirichlet(rng, 3, 2.0);
    CHECK(max_abs(a.weights(mu) - b.weights(mu)) <= 1e-12);
  }
}

TEST_CASE("rank based examples") {
  const auto orderings = permutations_of(vec({0.5, 0.3, 0.2}));
  const auto p = DiscreteMeasure::uniform(orderings);

  const auto q_log = DiscreteMeasure::uniform({log_vertex(3, 0), log_vertex(3, 1), log_vertex(3, 2)});
  const auto c1 = solve_discrete(p, q_log, CostKind::LogPartition);
  for (const auto& e : c1.entries) {
    Index smallest;
    orderings[e.source].minCoeff(&smallest);
    CHECK(e.target == static_cast<size_t>(smallest));
  }
  const auto pi1 = portfolio_from_support(c1, p, q_log, CostKind::LogPartition);
  for (const auto& mu : orderings) {
    Index smallest;
    mu.minCoeff(&smallest);
    CHECK(pi1.weights(mu) == vertex(3, smallest));
  }

  const auto q_vertex = DiscreteMeasure::uniform({vertex(3, 0), vertex(3, 1), vertex(3, 2)});
  const auto c2 = solve_discrete(p, q_vertex, CostKind::NegEntropy);
  for (const auto& e : c2.entries) {
    Index smallest;
    orderings[e.source].minCoeff(&smallest);
    CHECK(e.target == static_cast<size_t>(smallest));
  }

  // Equal weight on the two smallest.
  const auto q_pairs = DiscreteMeasure::uniform({vec({0.5, 0.5, 0.0}), vec({0.5, 0.0, 0.5}), vec({0.0, 0.5, 0.5})});
  const auto c3 = solve_discrete(p, q_pairs, CostKind::NegEntropy);
  const auto pi3 = portfolio_from_support(c3, p, q_pairs, CostKind::NegEntropy);
  for (const auto& mu : orderings) {
    Index largest;
    mu.maxCoeff(&largest);
    Vector expected = Vector::Constant(3, 0.5);
    expected[largest] = 0.0;
    CHECK(pi3.weights(mu) == expected);
  }
  CHECK_FALSE(mcm_fuzz_finite(pi3, orderings).witness.has_value());
}

TEST_CASE("entropy problem through the quadratic problem") {
  const DiscreteMeasure single({vec({0.2, 0.8})}, vec({1.0}));
  const DiscreteMeasure target({vec({0.6, 0.4})}, vec({1.0}));
  const auto one = entropy_to_quadratic(single, target);
  CHECK(one.coupling.entries.size() == 1);
  CHECK(one.neg_entropy_value == doctest::Approx(cost(CostKind::NegEntropy, vec({0.2, 0.8}), vec({0.6, 0.4}))));

  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const auto [xs, ys] = random_atoms(rng, CostKind::NegEntropy, 5, 3);
    const auto p = DiscreteMeasure::uniform(xs), q = DiscreteMeasure::uniform(ys);
    const auto reduced = entropy_to_quadratic(p, q);
    const auto direct = brute_force_solve(p, q, CostKind::NegEntropy);
    CHECK(support_indices(reduced.coupling) == support_indices(direct));
    CHECK(reduced.neg_entropy_value == doctest::Approx(direct.value).epsilon(1e-12));
    CHECK(std::isfinite(reduced.quadratic_value));
    for (const auto& z : reduced.zeta.atoms) CHECK((z.array() > 0.0).all());
  }
  CHECK_THROWS_AS(entropy_to_quadratic(DiscreteMeasure({vec({1.0, 0.0})}, vec({1.0})), target), DomainError);
}

TEST_CASE("portfolios from optimal supports pass fuzzing") {
  for (CostKind kind : {CostKind::LogPartition, CostKind::NegEntropy, CostKind::ExpShift}) {
    Rng rng(50 + static_cast<int>(kind));
    for (int trial = 0; trial < 10; ++trial) {
      const auto [xs, ys] = random_atoms(rng, kind, 6, 3);
      const auto p = DiscreteMeasure::uniform(xs), q = DiscreteMeasure::uniform(ys);
      const auto c = solve_discrete(p, q, kind);
      const auto pi = portfolio_from_support(c, p, q, kind);
      std::vector<Vector> points;
      for (const auto& x : xs) points.push_back(kind == CostKind::ExpShift ? from_exponential(ExpCoord{x}).coords() : x);
      FuzzOptions options;
      options.trials = 3000;
      const auto report = mcm_fuzz_finite(pi, points, options);
      INFO(to_string(kind));
      CHECK_FALSE(report.witness.has_value());
    }
  }
}

TEST_CASE("infeasible problems") {
  const DiscreteMeasure p({vec({0.5, 0.5, 0.0})}, vec({1.0}));
  const DiscreteMeasure q({vec({0.2, 0.3, 0.5})}, vec({1.0}));
  CHECK_THROWS_AS(solve_discrete(p, q, CostKind::NegEntropy), InfeasibleError);

  const DiscreteMeasure p2({vec({0.5, 0.5, 0.0}), vec({0.2, 0.3, 0.5})}, vec({0.5, 0.5}));
  const DiscreteMeasure q2({vec({0.1, 0.1, 0.8}), vec({0.3, 0.3, 0.4})}, vec({0.5, 0.5}));
  CHECK_THROWS_AS(solve_discrete(p2, q2, CostKind::NegEntropy), InfeasibleError);

  const DiscreteMeasure q3({vec({0.5, 0.5, 0.0}), vec({0.3, 0.3, 0.4})}, vec({0.5, 0.5}));
  const auto ok = solve_discrete(p2, q3, CostKind::NegEntropy);
  CHECK(support_indices(ok) == std::set<std::pair<size_t, size_t>>{{0, 0}, {1, 1}});
}

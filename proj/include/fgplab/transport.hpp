#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fgplab/portfolio_map.hpp"
#include "fgplab/simplex.hpp"

namespace fgplab {

enum class CostKind { LogPartition, ExpShift, NegEntropy, Quadratic };

CostKind parse_cost_kind(const std::string& tag);
std::string to_string(CostKind kind);

// Finitely supported probability measure.  Atoms may carry -inf coordinates
// (log-partition targets) but never NaN or +inf.
struct DiscreteMeasure {
  std::vector<Vector> atoms;
  Vector weights;

  DiscreteMeasure(std::vector<Vector> atoms, Vector weights);
  static DiscreteMeasure uniform(std::vector<Vector> atoms);
  static DiscreteMeasure from_json(const nlohmann::json& spec);

  size_t size() const { return atoms.size(); }
  Index dimension() const { return atoms.front().size(); }
};

struct CouplingEntry {
  size_t source;
  size_t target;
  double mass;
};

struct Coupling {
  std::vector<CouplingEntry> entries;  // sorted by (source, target)
  double value;
};

// LogPartition(mu, h) = log sum e^{h_i} mu_i;  ExpShift(theta, phi) = psi(theta - phi);
// NegEntropy(p, q) = -sum q_i log(q_i / p_i);  Quadratic(x, y) = |x - y|^2.
// NegEntropy with q_i > 0 = p_i is +inf.
double cost(CostKind kind, const Vector& x, const Vector& y);
Matrix cost_matrix(const DiscreteMeasure& p, const DiscreteMeasure& q, CostKind kind);

// Sum of mass * cost over entries in (source, target) order.
double coupling_value(const std::vector<CouplingEntry>& entries, const Matrix& costs);

// Exact optimal coupling by successive shortest paths on the bipartite
// network.  Costs are rounded to integer multiples of 1e-12; +inf costs are
// missing arcs.  Ties resolve toward lower node indices.
Coupling solve_discrete(const DiscreteMeasure& p, const DiscreteMeasure& q, CostKind kind);
Coupling solve_discrete(const Vector& source_weights, const Vector& target_weights, const Matrix& costs);

struct Assignment {
  std::vector<size_t> permutation;  // source k -> target permutation[k]
  double value;
};

// All feasible permutations with their values, in lexicographic order.
std::vector<Assignment> enumerate_assignments(const Matrix& costs);

// Optimal assignment by enumeration; equal-size uniform marginals with at
// most 8 atoms.
Coupling brute_force_solve(const DiscreteMeasure& p, const DiscreteMeasure& q, CostKind kind);

struct MonotonicityReport {
  bool ok;
  std::vector<size_t> cycle;  // indices into the support, when violated
  double excess;              // largest sum c(x_k, y_k) - sum c(x_{k+1}, y_k) seen
};

// Exhaustive check of c-cyclical monotonicity over all cycles of at most
// max_m support pairs (max_m <= 5), tolerance 1e-9.
MonotonicityReport check_c_monotone(const std::vector<std::pair<Vector, Vector>>& support, CostKind kind,
                                    int max_m = 4);
std::vector<std::pair<Vector, Vector>> support_of(const Coupling& coupling, const DiscreteMeasure& p,
                                                  const DiscreteMeasure& q);

// pi_i = mu_i e^{h_i} / sum_j mu_j e^{h_j}, with e^{-inf} = 0.
SimplexPoint change_of_measure(const SimplexPoint& mu, const Vector& h);

PortfolioMap portfolio_from_coupling(std::function<Vector(const Vector&)> selection);
// pi(iota^{-1}(theta)) = iota^{-1}(theta - phi(theta)).
PortfolioMap portfolio_from_exp_shift(std::function<Vector(const Vector&)> phi_map);

// Portfolio on the atoms of P read off an optimal coupling: each atom uses
// its heaviest target (lowest index on ties); other points use the nearest
// atom.  LogPartition targets are h, NegEntropy targets are the portfolio
// itself, ExpShift sources and targets are theta and phi.
PortfolioMap portfolio_from_support(const Coupling& coupling, const DiscreteMeasure& p, const DiscreteMeasure& q,
                                    CostKind kind);

struct QuadraticReduction {
  DiscreteMeasure zeta;     // atoms -log mu of P
  Coupling coupling;        // indices (P atom, Q atom)
  double quadratic_value;   // optimum of the quadratic problem between Q and zeta
  double neg_entropy_value; // NegEntropy value of the recovered coupling
};

// Solves the relative-entropy problem through the quadratic problem on
// zeta = -log mu.
QuadraticReduction entropy_to_quadratic(const DiscreteMeasure& p, const DiscreteMeasure& q);

}  // namespace fgplab

#include "fgplab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fgplab {

namespace {

using Wide = __int128;

constexpr double kCostScale = 1e12;
constexpr double kMaxAbsCost = 9e6;
constexpr double kMassEpsilon = 1e-15;
constexpr double kCycleTolerance = 1e-9;
constexpr Wide kUnreached = static_cast<Wide>(1) << 120;

std::vector<std::vector<long long>> scaled_costs(const Matrix& costs, std::vector<std::vector<bool>>& finite) {
  std::vector<std::vector<long long>> out(static_cast<size_t>(costs.rows()),
                                          std::vector<long long>(static_cast<size_t>(costs.cols()), 0));
  finite.assign(static_cast<size_t>(costs.rows()), std::vector<bool>(static_cast<size_t>(costs.cols()), false));
  for (Index i = 0; i < costs.rows(); ++i)
    for (Index j = 0; j < costs.cols(); ++j) {
      const double c = costs(i, j);
      if (std::isnan(c) || c == -std::numeric_limits<double>::infinity())
        throw ArgumentError("cost matrix has an undefined entry");
      if (c == std::numeric_limits<double>::infinity()) continue;
      if (std::abs(c) > kMaxAbsCost) throw ArgumentError("cost too large for the exact solver");
      out[static_cast<size_t>(i)][static_cast<size_t>(j)] = std::llround(c * kCostScale);
      finite[static_cast<size_t>(i)][static_cast<size_t>(j)] = true;
    }
  return out;
}

struct Edge {
  int to;
  int rev;
  double cap;
  long long cost;
};

class FlowNetwork {
 public:
  explicit FlowNetwork(int nodes) : graph_(static_cast<size_t>(nodes)) {}

  int add(int from, int to, double cap, long long cost) {
    graph_[static_cast<size_t>(from)].push_back({to, static_cast<int>(graph_[static_cast<size_t>(to)].size()), cap, cost});
    graph_[static_cast<size_t>(to)].push_back({from, static_cast<int>(graph_[static_cast<size_t>(from)].size()) - 1, 0.0, -cost});
    return static_cast<int>(graph_[static_cast<size_t>(from)].size()) - 1;
  }

  std::vector<std::vector<Edge>>& graph() { return graph_; }

 private:
  std::vector<std::vector<Edge>> graph_;
};

}  // namespace

CostKind parse_cost_kind(const std::string& tag) {
  if (tag == "log_partition") return CostKind::LogPartition;
  if (tag == "exp_shift") return CostKind::ExpShift;
  if (tag == "neg_entropy") return CostKind::NegEntropy;
  if (tag == "quadratic") return CostKind::Quadratic;
  throw ParseError("unknown cost kind '" + tag + "'");
}

std::string to_string(CostKind kind) {
  switch (kind) {
    case CostKind::LogPartition: return "log_partition";
    case CostKind::ExpShift: return "exp_shift";
    case CostKind::NegEntropy: return "neg_entropy";
    case CostKind::Quadratic: return "quadratic";
  }
  return "unknown";
}

DiscreteMeasure::DiscreteMeasure(std::vector<Vector> atoms_in, Vector weights_in)
    : atoms(std::move(atoms_in)), weights(std::move(weights_in)) {
  if (atoms.empty()) throw ArgumentError("measure needs at least one atom");
  if (static_cast<Index>(atoms.size()) != weights.size()) throw ArgumentError("atoms and weights differ in length");
  const Index n = atoms.front().size();
  for (size_t k = 0; k < atoms.size(); ++k) {
    if (atoms[k].size() != n || n < 1) throw ArgumentError("atoms differ in dimension");
    for (Index i = 0; i < n; ++i)
      if (std::isnan(atoms[k][i]) || atoms[k][i] == std::numeric_limits<double>::infinity())
        throw ArgumentError("atom coordinates must be finite or -inf");
    for (size_t l = 0; l < k; ++l)
      if (atoms[l] == atoms[k]) throw ArgumentError("atoms must be distinct");
  }
  if (!weights.allFinite() || (weights.array() < 0.0).any()) throw ArgumentError("weights must be nonnegative");
  if (std::abs(weights.sum() - 1.0) > kSimplexTolerance) throw ArgumentError("weights must sum to 1");
}

DiscreteMeasure DiscreteMeasure::uniform(std::vector<Vector> atoms) {
  const Index m = static_cast<Index>(atoms.size());
  if (m == 0) throw ArgumentError("measure needs at least one atom");
  return DiscreteMeasure(std::move(atoms), Vector::Constant(m, 1.0 / static_cast<double>(m)));
}

DiscreteMeasure DiscreteMeasure::from_json(const nlohmann::json& spec) {
  try {
    std::vector<Vector> atoms;
    for (const auto& atom : spec.at("atoms")) {
      Vector x(static_cast<Index>(atom.size()));
      for (size_t i = 0; i < atom.size(); ++i) {
        const auto& c = atom[i];
        if (c.is_null() || (c.is_string() && c.get<std::string>() == "-inf"))
          x[static_cast<Index>(i)] = -std::numeric_limits<double>::infinity();
        else
          x[static_cast<Index>(i)] = c.get<double>();
      }
      atoms.push_back(std::move(x));
    }
    if (!spec.contains("weights")) return uniform(std::move(atoms));
    const auto w = spec.at("weights").get<std::vector<double>>();
    return DiscreteMeasure(std::move(atoms), Eigen::Map<const Vector>(w.data(), static_cast<Index>(w.size())));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("measure spec: ") + e.what());
  }
}

double cost(CostKind kind, const Vector& x, const Vector& y) {
  switch (kind) {
    case CostKind::LogPartition: {
      if (x.size() != y.size()) throw ArgumentError("dimension mismatch");
      if ((y.array() == -std::numeric_limits<double>::infinity()).all())
        throw ArgumentError("log-partition target is entirely -inf");
      return log_sum_exp((y.array() + x.array().log()).matrix());
    }
    case CostKind::ExpShift:
      if (x.size() != y.size()) throw ArgumentError("dimension mismatch");
      return psi(x - y);
    case CostKind::NegEntropy: {
      if (x.size() != y.size()) throw ArgumentError("dimension mismatch");
      double s = 0.0;
      for (Index i = 0; i < x.size(); ++i) {
        if (y[i] == 0.0) continue;
        if (x[i] == 0.0) return std::numeric_limits<double>::infinity();
        s -= y[i] * std::log(y[i] / x[i]);
      }
      return s;
    }
    case CostKind::Quadratic:
      if (x.size() != y.size()) throw ArgumentError("dimension mismatch");
      return (x - y).squaredNorm();
  }
  throw ArgumentError("unknown cost kind");
}

Matrix cost_matrix(const DiscreteMeasure& p, const DiscreteMeasure& q, CostKind kind) {
  Matrix c(static_cast<Index>(p.size()), static_cast<Index>(q.size()));
  for (size_t i = 0; i < p.size(); ++i)
    for (size_t j = 0; j < q.size(); ++j)
      c(static_cast<Index>(i), static_cast<Index>(j)) = cost(kind, p.atoms[i], q.atoms[j]);
  return c;
}

double coupling_value(const std::vector<CouplingEntry>& entries, const Matrix& costs) {
  double v = 0.0;
  for (const auto& e : entries) v += e.mass * costs(static_cast<Index>(e.source), static_cast<Index>(e.target));
  return v;
}

Coupling solve_discrete(const DiscreteMeasure& p, const DiscreteMeasure& q, CostKind kind) {
  return solve_discrete(p.weights, q.weights, cost_matrix(p, q, kind));
}

Coupling solve_discrete(const Vector& a, const Vector& b, const Matrix& costs) {
  const int m = static_cast<int>(a.size());
  const int k = static_cast<int>(b.size());
  if (costs.rows() != m || costs.cols() != k) throw ArgumentError("cost matrix shape does not match the marginals");
  std::vector<std::vector<bool>> finite;
  const auto scaled = scaled_costs(costs, finite);

  const int source = 0;
  const int sink = m + k + 1;
  const int nodes = m + k + 2;
  FlowNetwork net(nodes);
  std::vector<int> supply_edge(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) supply_edge[static_cast<size_t>(i)] = net.add(source, 1 + i, a[i], 0);
  std::vector<std::vector<int>> arc(static_cast<size_t>(m), std::vector<int>(static_cast<size_t>(k), -1));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < k; ++j)
      if (finite[static_cast<size_t>(i)][static_cast<size_t>(j)])
        arc[static_cast<size_t>(i)][static_cast<size_t>(j)] =
            net.add(1 + i, 1 + m + j, std::numeric_limits<double>::infinity(), scaled[static_cast<size_t>(i)][static_cast<size_t>(j)]);
  for (int j = 0; j < k; ++j) net.add(1 + m + j, sink, b[j], 0);

  for (int i = 0; i < m; ++i)
    if (a[i] > 0.0 && std::none_of(arc[static_cast<size_t>(i)].begin(), arc[static_cast<size_t>(i)].end(), [](int e) { return e >= 0; }))
      throw InfeasibleError("source atom " + std::to_string(i) + " has no finite-cost target");

  // Exact shortest distances on the initial DAG serve as potentials.
  std::vector<Wide> pot(static_cast<size_t>(nodes), 0);
  Wide sink_pot = kUnreached;
  for (int j = 0; j < k; ++j) {
    Wide best = kUnreached;
    for (int i = 0; i < m; ++i)
      if (finite[static_cast<size_t>(i)][static_cast<size_t>(j)])
        best = std::min<Wide>(best, scaled[static_cast<size_t>(i)][static_cast<size_t>(j)]);
    if (best == kUnreached) {
      if (b[j] > 0.0) throw InfeasibleError("target atom " + std::to_string(j) + " has no finite-cost source");
      best = 0;
    }
    pot[static_cast<size_t>(1 + m + j)] = best;
    sink_pot = std::min(sink_pot, best);
  }
  pot[static_cast<size_t>(sink)] = sink_pot == kUnreached ? 0 : sink_pot;

  auto& g = net.graph();
  std::vector<Wide> dist(static_cast<size_t>(nodes));
  std::vector<int> prev_node(static_cast<size_t>(nodes)), prev_edge(static_cast<size_t>(nodes));
  std::vector<char> done(static_cast<size_t>(nodes));
  const double total = std::min(a.sum(), b.sum());
  double pushed = 0.0;

  while (total - pushed > 1e-13) {
    std::fill(dist.begin(), dist.end(), kUnreached);
    std::fill(done.begin(), done.end(), 0);
    dist[static_cast<size_t>(source)] = 0;
    for (;;) {
      int u = -1;
      for (int v = 0; v < nodes; ++v)
        if (!done[static_cast<size_t>(v)] && dist[static_cast<size_t>(v)] < kUnreached &&
            (u < 0 || dist[static_cast<size_t>(v)] < dist[static_cast<size_t>(u)]))
          u = v;
      if (u < 0) break;
      done[static_cast<size_t>(u)] = 1;
      const auto& edges = g[static_cast<size_t>(u)];
      for (size_t e = 0; e < edges.size(); ++e) {
        const Edge& ed = edges[e];
        if (ed.cap <= kMassEpsilon || done[static_cast<size_t>(ed.to)]) continue;
        const Wide nd = dist[static_cast<size_t>(u)] + ed.cost + pot[static_cast<size_t>(u)] - pot[static_cast<size_t>(ed.to)];
        if (nd < dist[static_cast<size_t>(ed.to)]) {
          dist[static_cast<size_t>(ed.to)] = nd;
          prev_node[static_cast<size_t>(ed.to)] = u;
          prev_edge[static_cast<size_t>(ed.to)] = static_cast<int>(e);
        }
      }
    }
    if (dist[static_cast<size_t>(sink)] == kUnreached) throw InfeasibleError("marginals admit no finite-cost coupling");
    Wide reach = 0;
    for (int v = 0; v < nodes; ++v)
      if (dist[static_cast<size_t>(v)] < kUnreached) reach = std::max(reach, dist[static_cast<size_t>(v)]);
    for (int v = 0; v < nodes; ++v)
      pot[static_cast<size_t>(v)] += dist[static_cast<size_t>(v)] < kUnreached ? dist[static_cast<size_t>(v)] : reach;

    double flow = std::numeric_limits<double>::infinity();
    for (int v = sink; v != source; v = prev_node[static_cast<size_t>(v)])
      flow = std::min(flow, g[static_cast<size_t>(prev_node[static_cast<size_t>(v)])][static_cast<size_t>(prev_edge[static_cast<size_t>(v)])].cap);
    for (int v = sink; v != source; v = prev_node[static_cast<size_t>(v)]) {
      Edge& ed = g[static_cast<size_t>(prev_node[static_cast<size_t>(v)])][static_cast<size_t>(prev_edge[static_cast<size_t>(v)])];
      ed.cap -= flow;
      g[static_cast<size_t>(v)][static_cast<size_t>(ed.rev)].cap += flow;
    }
    pushed += flow;
  }

  Coupling out;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < k; ++j) {
      const int e = arc[static_cast<size_t>(i)][static_cast<size_t>(j)];
      if (e < 0) continue;
      const Edge& ed = g[static_cast<size_t>(1 + i)][static_cast<size_t>(e)];
      const double mass = g[static_cast<size_t>(ed.to)][static_cast<size_t>(ed.rev)].cap;
      if (mass > kMassEpsilon) out.entries.push_back({static_cast<size_t>(i), static_cast<size_t>(j), mass});
    }
  out.value = coupling_value(out.entries, costs);
  return out;
}

std::vector<Assignment> enumerate_assignments(const Matrix& costs) {
  if (costs.rows() != costs.cols()) throw ArgumentError("assignments need a square cost matrix");
  const size_t m = static_cast<size_t>(costs.rows());
  if (m > 8) throw ArgumentError("enumeration is capped at 8 atoms");
  const double mass = 1.0 / static_cast<double>(m);
  std::vector<size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<Assignment> out;
  do {
    double value = 0.0;
    bool ok = true;
    for (size_t i = 0; i < m && ok; ++i) {
      const double c = costs(static_cast<Index>(i), static_cast<Index>(perm[i]));
      if (!std::isfinite(c)) ok = false;
      value += mass * c;
    }
    if (ok) out.push_back({perm, value});
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

Coupling brute_force_solve(const DiscreteMeasure& p, const DiscreteMeasure& q, CostKind kind) {
  const size_t m = p.size();
  if (q.size() != m) throw ArgumentError("brute force needs equally many atoms on both sides");
  if (m > 8) throw ArgumentError("brute force is capped at 8 atoms");
  const double mass = 1.0 / static_cast<double>(m);
  for (Index i = 0; i < static_cast<Index>(m); ++i)
    if (std::abs(p.weights[i] - mass) > kSimplexTolerance || std::abs(q.weights[i] - mass) > kSimplexTolerance)
      throw ArgumentError("brute force needs uniform marginals");
  const Matrix costs = cost_matrix(p, q, kind);
  std::vector<std::vector<bool>> finite;
  const auto scaled = scaled_costs(costs, finite);

  std::vector<size_t> perm(m), best;
  std::iota(perm.begin(), perm.end(), 0);
  Wide best_cost = 0;
  do {
    Wide total = 0;
    bool ok = true;
    for (size_t i = 0; i < m && ok; ++i) {
      if (!finite[i][perm[i]]) ok = false;
      else total += scaled[i][perm[i]];
    }
    if (ok && (best.empty() || total < best_cost)) {
      best = perm;
      best_cost = total;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  if (best.empty()) throw InfeasibleError("no finite-cost assignment");

  Coupling out;
  for (size_t i = 0; i < m; ++i) out.entries.push_back({i, best[i], p.weights[static_cast<Index>(i)]});
  out.value = coupling_value(out.entries, costs);
  return out;
}

MonotonicityReport check_c_monotone(const std::vector<std::pair<Vector, Vector>>& support, CostKind kind, int max_m) {
  if (support.empty()) throw ArgumentError("support must be nonempty");
  if (max_m > 5) throw ArgumentError("cycle length is capped at 5");
  const size_t s = support.size();
  Matrix c(static_cast<Index>(s), static_cast<Index>(s));
  for (size_t i = 0; i < s; ++i)
    for (size_t j = 0; j < s; ++j)
      c(static_cast<Index>(i), static_cast<Index>(j)) = cost(kind, support[i].first, support[j].second);

  MonotonicityReport report{true, {}, -std::numeric_limits<double>::infinity()};
  std::vector<size_t> cycle;
  std::vector<char> used(s, 0);
  // cycle[0] is the smallest index, which removes rotations.
  std::function<void()> extend = [&]() {
    const size_t len = cycle.size();
    if (len >= 2) {
      double excess = 0.0;
      for (size_t k = 0; k < len; ++k) {
        const size_t here = cycle[k];
        const size_t next = cycle[(k + 1) % len];
        excess += c(static_cast<Index>(here), static_cast<Index>(here)) - c(static_cast<Index>(next), static_cast<Index>(here));
      }
      if (!std::isnan(excess)) {
        report.excess = std::max(report.excess, excess);
        if (excess > kCycleTolerance && report.ok) {
          report.ok = false;
          report.cycle = cycle;
        }
      }
    }
    if (static_cast<int>(len) >= max_m) return;
    for (size_t j = cycle.front() + 1; j < s; ++j) {
      if (used[j]) continue;
      used[j] = 1;
      cycle.push_back(j);
      extend();
      cycle.pop_back();
      used[j] = 0;
    }
  };
  for (size_t first = 0; first < s; ++first) {
    used[first] = 1;
    cycle.assign(1, first);
    extend();
    used[first] = 0;
  }
  if (report.excess == -std::numeric_limits<double>::infinity()) report.excess = 0.0;
  return report;
}

std::vector<std::pair<Vector, Vector>> support_of(const Coupling& coupling, const DiscreteMeasure& p,
                                                  const DiscreteMeasure& q) {
  std::vector<std::pair<Vector, Vector>> out;
  for (const auto& e : coupling.entries) out.emplace_back(p.atoms.at(e.source), q.atoms.at(e.target));
  return out;
}

SimplexPoint change_of_measure(const SimplexPoint& mu, const Vector& h) {
  if (h.size() != mu.size()) throw ArgumentError("dimension mismatch");
  const Vector z = (h.array() + mu.coords().array().log()).matrix();
  const double top = z.maxCoeff();
  if (top == -std::numeric_limits<double>::infinity() || std::isnan(top))
    throw ArgumentError("change of measure has no mass");
  const Vector e = (z.array() - top).unaryExpr([](double v) { return std::exp(v); }).matrix();
  return SimplexPoint(e / e.sum(), Openness::Closed);
}

PortfolioMap portfolio_from_coupling(std::function<Vector(const Vector&)> selection) {
  return PortfolioMap(
      [sel = std::move(selection)](const Vector& mu) {
        return change_of_measure(SimplexPoint(mu, Openness::Closed), sel(mu)).coords();
      },
      false, "coupling");
}

PortfolioMap portfolio_from_exp_shift(std::function<Vector(const Vector&)> phi_map) {
  return PortfolioMap(
      [phi = std::move(phi_map)](const Vector& mu) {
        const ExpCoord theta = to_exponential(SimplexPoint(mu));
        const Vector shift = phi(theta.theta);
        if (shift.size() != theta.theta.size()) throw ArgumentError("shift dimension mismatch");
        return from_exponential(ExpCoord{theta.theta - shift}).coords();
      },
      true, "exp_shift");
}

PortfolioMap portfolio_from_support(const Coupling& coupling, const DiscreteMeasure& p, const DiscreteMeasure& q,
                                    CostKind kind) {
  if (kind == CostKind::Quadratic) throw ArgumentError("quadratic couplings do not define a portfolio");
  std::vector<size_t> choice(p.size(), 0);
  std::vector<double> heaviest(p.size(), -1.0);
  for (const auto& e : coupling.entries)
    if (e.mass > heaviest.at(e.source)) {
      heaviest[e.source] = e.mass;
      choice[e.source] = e.target;
    }
  for (size_t i = 0; i < p.size(); ++i)
    if (heaviest[i] < 0.0) throw ArgumentError("coupling leaves a source atom without mass");
  std::vector<Vector> sources = p.atoms;
  std::vector<Vector> targets;
  for (size_t i = 0; i < p.size(); ++i) targets.push_back(q.atoms[choice[i]]);

  auto nearest = [sources](const Vector& x) {
    size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < sources.size(); ++i) {
      const double d = (sources[i] - x).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  };

  switch (kind) {
    case CostKind::LogPartition:
      return PortfolioMap(
          [nearest, targets](const Vector& mu) {
            return change_of_measure(SimplexPoint(mu, Openness::Closed), targets[nearest(mu)]).coords();
          },
          false, "support:log_partition");
    case CostKind::NegEntropy:
      return PortfolioMap([nearest, targets](const Vector& mu) { return targets[nearest(mu)]; }, false,
                          "support:neg_entropy");
    case CostKind::ExpShift:
      return PortfolioMap(
          [nearest, targets](const Vector& mu) {
            const Vector theta = to_exponential(SimplexPoint(mu)).theta;
            return from_exponential(ExpCoord{theta - targets[nearest(theta)]}).coords();
          },
          false, "support:exp_shift");
    case CostKind::Quadratic: break;
  }
  throw ArgumentError("unsupported cost kind");
}

QuadraticReduction entropy_to_quadratic(const DiscreteMeasure& p, const DiscreteMeasure& q) {
  std::vector<Vector> zeta;
  for (const auto& mu : p.atoms) {
    if (!(mu.array() > 0.0).all()) throw DomainError("entropy reduction needs strictly positive source atoms");
    zeta.push_back(-mu.array().log().matrix());
  }
  DiscreteMeasure zeta_measure(std::move(zeta), p.weights);
  const Coupling quad = solve_discrete(q, zeta_measure, CostKind::Quadratic);
  Coupling back;
  for (const auto& e : quad.entries) back.entries.push_back({e.target, e.source, e.mass});
  std::sort(back.entries.begin(), back.entries.end(), [](const CouplingEntry& x, const CouplingEntry& y) {
    return std::tie(x.source, x.target) < std::tie(y.source, y.target);
  });
  back.value = coupling_value(back.entries, cost_matrix(p, q, CostKind::NegEntropy));
  return QuadraticReduction{std::move(zeta_measure), back, quad.value, back.value};
}

}  // namespace fgplab

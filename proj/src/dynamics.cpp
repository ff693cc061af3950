#include "fgplab/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

namespace fgplab {

namespace {

Matrix stack(const std::vector<Vector>& rows) {
  if (rows.empty()) throw ArgumentError("market path needs at least two points");
  Matrix m(static_cast<Index>(rows.size()), rows.front().size());
  for (size_t t = 0; t < rows.size(); ++t) {
    if (rows[t].size() != m.cols()) throw ArgumentError("market path rows differ in dimension");
    m.row(static_cast<Index>(t)) = rows[t].transpose();
  }
  return m;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

double ring_log_value(const PortfolioMap& pi, const std::vector<Vector>& ring) {
  const size_t m = ring.size();
  double total = 0.0;
  for (size_t k = 0; k < m; ++k) {
    const Vector& from = ring[k];
    const Vector& to = ring[(k + 1) % m];
    const double factor = step_multiplier(pi.weights(from), from, to);
    if (!(factor > 0.0)) return -std::numeric_limits<double>::infinity();
    total += std::log(factor);
  }
  return total;
}

// Orthonormal pair of tangent directions.
std::pair<Vector, Vector> tangent_plane(Rng& rng, Index n) {
  const Vector u = sample_tangent_direction(rng, n);
  if (n == 2) return {u, Vector::Zero(n)};
  for (;;) {
    Vector w = sample_tangent_direction(rng, n);
    w -= w.dot(u) * u;
    const double norm = w.norm();
    if (norm > 1e-6) return {u, w / norm};
  }
}

// Sort vertices by angle around their centroid in a random tangent plane,
// turning a random vertex set into a simple polygon of random orientation.
void order_by_angle(Rng& rng, std::vector<Vector>& ring) {
  const Index n = ring.front().size();
  const auto [u, w] = tangent_plane(rng, n);
  Vector center = Vector::Zero(n);
  for (const auto& x : ring) center += x;
  center /= static_cast<double>(ring.size());
  std::vector<std::pair<double, size_t>> keyed;
  for (size_t k = 0; k < ring.size(); ++k) {
    const Vector d = ring[k] - center;
    keyed.emplace_back(std::atan2(d.dot(w), d.dot(u)), k);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<Vector> sorted;
  for (const auto& [angle, k] : keyed) sorted.push_back(ring[k]);
  ring = std::move(sorted);
}

}  // namespace

MarketPath::MarketPath(Matrix points) : points_(std::move(points)) {
  if (points_.rows() < 2) throw ArgumentError("market path needs at least two points");
  if (points_.cols() < 2) throw ArgumentError("market path needs at least two assets");
  for (Index t = 0; t < points_.rows(); ++t) {
    try {
      points_.row(t) = SimplexPoint(points_.row(t).transpose()).coords().transpose();
    } catch (const DomainError& e) {
      throw DomainError("market path row " + std::to_string(t) + ": " + e.what());
    }
  }
}

MarketPath::MarketPath(const std::vector<SimplexPoint>& points) {
  std::vector<Vector> rows;
  rows.reserve(points.size());
  for (const auto& p : points) rows.push_back(p.coords());
  *this = MarketPath(stack(rows));
}

MarketPath MarketPath::from_rows(const std::vector<Vector>& rows) { return MarketPath(stack(rows)); }

MarketPath MarketPath::read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("market path: empty input");
  const auto header = split(trim(line), ',');
  for (size_t i = 0; i < header.size(); ++i)
    if (trim(header[i]) != "w" + std::to_string(i + 1))
      throw ParseError("market path: header must be w1,...,wn (line 1)");
  std::vector<Vector> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line), ',');
    if (cells.size() != header.size())
      throw ParseError("market path: line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                       " fields, expected " + std::to_string(header.size()));
    Vector row(static_cast<Index>(cells.size()));
    for (size_t i = 0; i < cells.size(); ++i) {
      try {
        size_t used = 0;
        const std::string cell = trim(cells[i]);
        row[static_cast<Index>(i)] = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ParseError("market path: line " + std::to_string(lineno) + " has a malformed number");
      }
    }
    rows.push_back(row);
  }
  if (rows.size() < 2) throw ParseError("market path: need at least two rows");
  try {
    return MarketPath(stack(rows));
  } catch (const DomainError& e) {
    throw ParseError(std::string("market path: ") + e.what());
  }
}

MarketPath MarketPath::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_csv(in);
}

void MarketPath::write_csv(std::ostream& out) const {
  for (Index i = 0; i < dimension(); ++i) out << (i ? "," : "") << "w" << i + 1;
  out << "\n";
  char buf[32];
  for (Index t = 0; t < length(); ++t) {
    for (Index i = 0; i < dimension(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", points_(t, i));
      out << (i ? "," : "") << buf;
    }
    out << "\n";
  }
}

bool MarketPath::closed() const {
  return (points_.row(0) - points_.row(length() - 1)).cwiseAbs().maxCoeff() <= kSimplexTolerance;
}

double step_multiplier(const Vector& pi, const Vector& from, const Vector& to) {
  return (pi.array() * to.array() / from.array()).sum();
}

std::vector<double> log_relative_value(const PortfolioMap& pi, const MarketPath& path) {
  std::vector<double> out(static_cast<size_t>(path.length()));
  out[0] = 0.0;
  Vector from = path.row(0);
  for (Index t = 0; t + 1 < path.length(); ++t) {
    const Vector to = path.row(t + 1);
    const double factor = step_multiplier(pi.weights(from), from, to);
    if (!(factor > 0.0)) throw NumericDegeneracyError("nonpositive value multiplier at step " + std::to_string(t));
    out[static_cast<size_t>(t + 1)] = out[static_cast<size_t>(t)] + std::log(factor);
    from = to;
  }
  return out;
}

std::vector<double> relative_value(const PortfolioMap& pi, const MarketPath& path) {
  auto out = log_relative_value(pi, path);
  for (double& v : out) v = std::exp(v);
  return out;
}

ValueDecomposition fernholz_decompose(const GeneratingFunction& phi, const MarketPath& path) {
  const size_t len = static_cast<size_t>(path.length());
  ValueDecomposition out{std::vector<double>(len, 0.0), std::vector<double>(len, 0.0), std::vector<double>(len, 0.0)};
  SimplexPoint from = path.point(0);
  const double log_phi0 = log_eval(phi, from);
  for (size_t t = 0; t + 1 < len; ++t) {
    const SimplexPoint to = path.point(static_cast<Index>(t + 1));
    const SimplexPoint pi = portfolio_from_generating(phi, from);
    const double factor = step_multiplier(pi.coords(), from.coords(), to.coords());
    if (!(factor > 0.0)) throw NumericDegeneracyError("nonpositive value multiplier at step " + std::to_string(t));
    double increment = std::holds_alternative<Affine>(phi.kind()) ? 0.0 : l_divergence(phi, pi, to, from).value;
    if (increment < 0.0 && increment >= -1e-12) increment = 0.0;
    out.logV[t + 1] = out.logV[t] + std::log(factor);
    out.phi_term[t + 1] = log_eval(phi, to) - log_phi0;
    out.drift[t + 1] = out.drift[t] + increment;
    from = to;
  }
  return out;
}

double cycle_log_value(const PortfolioMap& pi, const MarketPath& cycle) {
  if (!cycle.closed()) throw ArgumentError("cycle must end where it starts");
  std::vector<Vector> ring;
  for (Index t = 0; t + 1 < cycle.length(); ++t) ring.push_back(cycle.row(t));
  return ring_log_value(pi, ring);
}

double cycle_log_value(const PortfolioMap& pi, const std::vector<Vector>& ring) {
  if (ring.empty()) throw ArgumentError("empty cycle");
  return ring_log_value(pi, ring);
}

Box Box::whole(Index n) { return Box{Vector::Zero(n), Vector::Ones(n)}; }

Box Box::around(const Vector& center, double radius) {
  if (!(radius > 0.0)) throw ArgumentError("box radius must be positive");
  return Box{(center.array() - radius).matrix(), (center.array() + radius).matrix()};
}

Box Box::from_json(const nlohmann::json& spec) {
  try {
    if (!spec.is_array() || spec.size() < 2) throw ParseError("region must be an array of [lo, hi] pairs");
    Box box{Vector(static_cast<Index>(spec.size())), Vector(static_cast<Index>(spec.size()))};
    for (size_t i = 0; i < spec.size(); ++i) {
      const auto pair = spec[i].get<std::vector<double>>();
      if (pair.size() != 2 || !(pair[0] <= pair[1])) throw ParseError("region entries must be [lo, hi] with lo <= hi");
      box.lo[static_cast<Index>(i)] = pair[0];
      box.hi[static_cast<Index>(i)] = pair[1];
    }
    return box;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("region: ") + e.what());
  }
}

bool Box::contains(const Vector& x) const {
  return x.size() == lo.size() && (x.array() > 0.0).all() && (x.array() >= lo.array()).all() &&
         (x.array() <= hi.array()).all();
}

Vector sample_in_box(Rng& rng, const Box& box) {
  const Index n = box.dimension();
  if (n < 2) throw ArgumentError("region needs at least two coordinates");
  const Vector lo = box.lo.cwiseMax(0.0);
  const Vector hi = box.hi.cwiseMin(1.0);
  if ((lo.array() > hi.array()).any() || lo.sum() > 1.0 || hi.sum() < 1.0)
    throw ArgumentError("region does not meet the simplex");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector x(n);
  for (int attempt = 0; attempt < 200000; ++attempt) {
    for (Index i = 0; i + 1 < n; ++i) x[i] = lo[i] + (hi[i] - lo[i]) * unit(rng);
    x[n - 1] = 1.0 - x.head(n - 1).sum();
    if (box.contains(x)) return x / x.sum();
  }
  throw ArgumentError("region has no interior points of the simplex");
}

FuzzReport mcm_fuzz(const PortfolioMap& pi, const Box& region, const FuzzOptions& options) {
  if (options.max_m < 2) throw ArgumentError("cycles need at least two vertices");
  FuzzReport report;
  for (long trial = 0; trial < options.trials; ++trial) {
    Rng rng(options.seed * 1000003ULL + static_cast<unsigned long>(trial));
    const int m = std::uniform_int_distribution<int>(2, options.max_m)(rng);
    std::vector<Vector> ring;
    if (options.delta) {
      const Vector center = sample_in_box(rng, region);
      const double r = 0.5 * *options.delta;
      Box local{region.lo.cwiseMax((center.array() - r).matrix()), region.hi.cwiseMin((center.array() + r).matrix())};
      while (static_cast<int>(ring.size()) < m) {
        Vector x = sample_in_box(rng, local);
        if ((x - center).norm() <= r) ring.push_back(std::move(x));
      }
    } else {
      for (int k = 0; k < m; ++k) ring.push_back(sample_in_box(rng, region));
    }
    if (m >= 3 && std::bernoulli_distribution(0.5)(rng)) order_by_angle(rng, ring);
    const double value = ring_log_value(pi, ring);
    ++report.trials;
    if (value < report.min_log_value) report.min_log_value = value;
    if (!report.witness && value < kViolationThreshold) report.witness = ring;
  }
  return report;
}

FuzzReport mcm_fuzz_finite(const PortfolioMap& pi, const std::vector<Vector>& points, const FuzzOptions& options) {
  FuzzReport report;
  if (points.size() < 2) {
    report.min_log_value = 0.0;
    return report;
  }
  const int count = static_cast<int>(points.size());
  for (long trial = 0; trial < options.trials; ++trial) {
    Rng rng(options.seed * 1000003ULL + static_cast<unsigned long>(trial));
    const int m = std::uniform_int_distribution<int>(2, options.max_m)(rng);
    std::uniform_int_distribution<int> pick(0, count - 1);
    std::vector<Vector> ring;
    int last = -1;
    for (int k = 0; k < m; ++k) {
      int idx = pick(rng);
      while (idx == last) idx = pick(rng);
      ring.push_back(points[static_cast<size_t>(idx)]);
      last = idx;
    }
    const double value = ring_log_value(pi, ring);
    ++report.trials;
    if (value < report.min_log_value) report.min_log_value = value;
    if (!report.witness && value < kViolationThreshold) report.witness = ring;
  }
  return report;
}

std::optional<CycleSearchResult> find_violating_cycle(const PortfolioMap& pi, const Box& region, long budget,
                                                      unsigned long seed) {
  constexpr double kDeepEnough = -1e-5;
  constexpr std::array<double, 4> kRadii = {0.2, 0.1, 0.05, 0.3};
  const Index n = region.dimension();
  Rng rng(seed);
  long used = 0;
  std::optional<CycleSearchResult> best;

  auto evaluate = [&](const std::vector<Vector>& ring) {
    ++used;
    return ring_log_value(pi, ring);
  };
  auto consider = [&](const std::vector<Vector>& ring, double value) {
    if (value < kViolationThreshold && (!best || value < best->log_value)) best = CycleSearchResult{ring, value, used};
  };

  for (int restart = 0; used < budget; ++restart) {
    const int m = 2 + (restart % 5);
    const double radius = kRadii[static_cast<size_t>((restart / 5) % kRadii.size())];
    const Vector center = sample_in_box(rng, region);
    const auto [u, w] = tangent_plane(rng, n);
    const double phase = std::uniform_real_distribution<double>(0.0, 2.0 * M_PI)(rng);
    std::vector<Vector> ring;
    for (int k = 0; k < m; ++k) {
      const double angle = phase + 2.0 * M_PI * k / m;
      Vector x = center + radius * (std::cos(angle) * u + std::sin(angle) * w);
      if (!region.contains(x)) x = sample_in_box(rng, region);
      ring.push_back(x / x.sum());
    }
    double value = evaluate(ring);
    std::vector<Vector> flipped(ring.rbegin(), ring.rend());
    const double flipped_value = evaluate(flipped);
    if (flipped_value < value) {
      ring = std::move(flipped);
      value = flipped_value;
    }
    consider(ring, value);

    // Coordinate moves along e(i) - e(n).
    double step = 0.25 * radius;
    while (step > 1e-7 && used < budget) {
      bool improved = false;
      for (int k = 0; k < m && used < budget; ++k)
        for (Index i = 0; i + 1 < n && used < budget; ++i)
          for (double sign : {1.0, -1.0}) {
            Vector moved = ring[static_cast<size_t>(k)];
            moved[i] += sign * step;
            moved[n - 1] -= sign * step;
            if (!region.contains(moved)) continue;
            std::swap(ring[static_cast<size_t>(k)], moved);
            const double trial = evaluate(ring);
            if (trial < value) {
              value = trial;
              improved = true;
              consider(ring, value);
            } else {
              std::swap(ring[static_cast<size_t>(k)], moved);
            }
          }
      if (!improved) step *= 0.5;
      if (best && best->log_value < kDeepEnough) break;
    }
    if (best && best->log_value < kDeepEnough) break;
  }
  if (best) best->evaluations = used;
  return best;
}

MarketPath repeat_cycle(const std::vector<Vector>& ring, int k) {
  if (ring.empty() || k < 1) throw ArgumentError("repeat_cycle needs a ring and k >= 1");
  std::vector<Vector> rows;
  for (int r = 0; r < k; ++r) rows.insert(rows.end(), ring.begin(), ring.end());
  rows.push_back(ring.front());
  return MarketPath::from_rows(rows);
}

std::vector<double> relative_value_exp(const std::function<Vector(const Vector&)>& phi_map,
                                       const std::vector<Vector>& theta_path) {
  if (theta_path.empty()) throw ArgumentError("empty theta path");
  std::vector<double> out(theta_path.size(), 0.0);
  const double psi0 = psi(theta_path.front());
  double drift = 0.0;
  for (size_t s = 0; s + 1 < theta_path.size(); ++s) {
    const Vector& now = theta_path[s];
    const Vector& next = theta_path[s + 1];
    const Vector shift = phi_map(now);
    if (shift.size() != now.size() || !shift.allFinite()) throw ArgumentError("shift must be finite and match theta");
    drift += psi(next - shift) - psi(now - shift);
    out[s + 1] = psi0 - psi(next) + drift;
  }
  return out;
}

}  // namespace fgplab

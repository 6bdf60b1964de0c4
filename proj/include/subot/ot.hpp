// Copyright 2026 The subot Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Discrete Kantorovich problem between finitely supported measures.
//
// The primal is min <Pi, c> over couplings with marginals (mu, nu); the dual
// is max <mu, f> + <nu, g> over f_i + g_j <= c_ij. solve_kantorovich runs a
// primal-dual min-cost-flow (successive shortest paths with node potentials),
// so the returned pair satisfies complementary slackness exactly up to
// rounding.

#ifndef SUBOT_OT_HPP_
#define SUBOT_OT_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "subot/core.hpp"
#include "subot/geometry.hpp"
#include "subot/grushin.hpp"
#include "subot/shooting.hpp"

namespace subot {

struct DiscreteMeasure {
  std::vector<Vec> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
  int dim() const { return points.empty() ? 0 : static_cast<int>(points[0].size()); }

  /// Throws InvalidArgument unless weights are >= 0 and sum to 1 (1e-12) and
  /// all points are finite and share a dimension.
  void validate(double tol = 1e-12) const {
    if (points.size() != weights.size()) {
      throw InvalidArgument("measure: points/weights length mismatch");
    }
    if (points.empty()) throw InvalidArgument("measure: empty support");
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!(weights[i] >= 0.0)) throw InvalidArgument("measure: negative weight");
      if (points[i].size() != points[0].size() || !points[i].allFinite()) {
        throw InvalidArgument("measure: non-finite or ragged point");
      }
      total += weights[i];
    }
    if (std::abs(total - 1.0) > tol) {
      std::ostringstream os;
      os << "measure: weights sum to " << total << ", expected 1";
      throw InvalidArgument(os.str());
    }
  }

  static DiscreteMeasure uniform(std::vector<Vec> pts) {
    DiscreteMeasure m;
    const double w = 1.0 / static_cast<double>(pts.size());
    m.weights.assign(pts.size(), w);
    m.points = std::move(pts);
    return m;
  }

  static DiscreteMeasure dirac(const Vec& at) { return {{at}, {1.0}}; }
};

struct TransportPlan {
  Mat matrix;         // |mu| x |nu| couplings
  double value = 0.0; // sum_ij Pi_ij c_ij
};

struct DualPotentials {
  Vec f;  // on the mu support
  Vec g;  // on the nu support

  double value(const DiscreteMeasure& mu, const DiscreteMeasure& nu) const {
    return to_vec(mu.weights).dot(f) + to_vec(nu.weights).dot(g);
  }
};

enum class CostBackend { kClosedForm, kShooting };

/// True when pair_cost can use the closed form for (x, y).
inline bool has_closed_form(const ControlSystem& sys, const Vec& x, const Vec& y) {
  if (sys.name.rfind("euclidean", 0) == 0) return true;
  return sys.name == "grushin" && (x[0] == 0.0 || y[0] == 0.0);
}

/// Squared distance d(x,y)^2 for one pair. The closed form covers euclidean
/// systems and Grushin pairs with one end on the axis x1 = 0.
inline double pair_cost(CostBackend backend, const ControlSystem& sys,
                        const Vec& x, const Vec& y,
                        const ConnectOptions& opts = {}) {
  if (backend == CostBackend::kClosedForm) {
    if (sys.name.rfind("euclidean", 0) == 0) return (x - y).squaredNorm();
    if (sys.name == "grushin") {
      if (y[0] == 0.0) return std::pow(grushin_distance_origin(x, y[1]), 2);
      if (x[0] == 0.0) return std::pow(grushin_distance_origin(y, x[1]), 2);
    }
    throw InvalidArgument("closed-form cost unavailable for '" + sys.name +
                          "' at this pair; use the shooting backend");
  }
  return connect(sys, x, y, opts).cost;
}

/// c_ij = d(x_i, y_j)^2. Shooting failures are rethrown naming the pair.
inline Mat cost_matrix(CostBackend backend, const ControlSystem& sys,
                       const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                       const ConnectOptions& opts = {}) {
  const auto rows = static_cast<Eigen::Index>(mu.size());
  const auto cols = static_cast<Eigen::Index>(nu.size());
  Mat c(rows, cols);
  parallel_for(static_cast<std::size_t>(rows * cols), [&](std::size_t idx) {
    const auto i = static_cast<Eigen::Index>(idx) / cols;
    const auto j = static_cast<Eigen::Index>(idx) % cols;
    const Vec& x = mu.points[static_cast<std::size_t>(i)];
    const Vec& y = nu.points[static_cast<std::size_t>(j)];
    if ((x - y).norm() == 0.0) {
      c(i, j) = 0.0;
      return;
    }
    try {
      c(i, j) = pair_cost(backend, sys, x, y, opts);
    } catch (const NoConvergence& e) {
      std::ostringstream os;
      os << "cost_matrix: pair (" << i << ", " << j << "): " << e.what();
      throw NoConvergence(e.best_error(), os.str());
    }
  });
  return c;
}

namespace detail {

inline void check_shapes(const Mat& c, const DiscreteMeasure& mu,
                         const DiscreteMeasure& nu) {
  if (c.rows() != static_cast<Eigen::Index>(mu.size()) ||
      c.cols() != static_cast<Eigen::Index>(nu.size())) {
    throw InvalidArgument("cost matrix shape does not match the measures");
  }
}

}  // namespace detail

/// Exact optimal coupling and dual potentials of the discrete problem.
///
/// Rows with remaining supply feed a multi-source Dijkstra over the residual
/// network in reduced costs; each augmentation saturates a supply, a demand,
/// or a backward arc. Ties resolve towards the lowest index, so the output is
/// deterministic. Arcs with c = +inf are absent.
inline std::pair<TransportPlan, DualPotentials> solve_kantorovich(
    const Mat& c, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
    double marginal_tol = 1e-9) {
  detail::check_shapes(c, mu, nu);
  const double mass_mu = std::accumulate(mu.weights.begin(), mu.weights.end(), 0.0);
  const double mass_nu = std::accumulate(nu.weights.begin(), nu.weights.end(), 0.0);
  for (double w : mu.weights) {
    if (!(w >= 0.0)) throw InvalidArgument("solve_kantorovich: negative weight");
  }
  for (double w : nu.weights) {
    if (!(w >= 0.0)) throw InvalidArgument("solve_kantorovich: negative weight");
  }
  if (std::abs(mass_mu - mass_nu) > marginal_tol) {
    std::ostringstream os;
    os << "solve_kantorovich: infeasible marginals (masses " << mass_mu << " vs "
       << mass_nu << ")";
    throw InvalidArgument(os.str());
  }
  if (c.hasNaN()) throw InvalidArgument("solve_kantorovich: NaN cost");
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      if (c(i, j) == -kInf) throw InvalidArgument("solve_kantorovich: -inf cost");
    }
  }

  const auto m = static_cast<std::size_t>(c.rows());
  const auto n = static_cast<std::size_t>(c.cols());
  const std::size_t nodes = m + n;  // rows [0, m), columns [m, m + n)

  Mat flow = Mat::Zero(c.rows(), c.cols());
  std::vector<double> supply(mu.weights);
  std::vector<double> demand(nu.weights);
  // Reduced cost of arc i -> j is c_ij + pi_i - pi_j >= 0.
  std::vector<double> pi(nodes, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double lowest = kInf;
    for (std::size_t i = 0; i < m; ++i) {
      lowest = std::min(lowest, c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    pi[m + j] = std::isfinite(lowest) ? lowest : 0.0;
  }

  // Masses below this are treated as exhausted (rounding residue).
  const double eps = 1e-15;
  auto remaining = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += std::max(0.0, x);
    return s;
  };

  std::vector<double> dist(nodes);
  std::vector<long> parent(nodes);
  std::vector<char> done(nodes);
  while (remaining(supply) > 1e3 * eps && remaining(demand) > 1e3 * eps) {
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(parent.begin(), parent.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    for (std::size_t i = 0; i < m; ++i) {
      if (supply[i] > eps) dist[i] = 0.0;
    }
    long target = -1;
    for (std::size_t iter = 0; iter < nodes; ++iter) {
      long u = -1;
      for (std::size_t v = 0; v < nodes; ++v) {
        if (!done[v] && dist[v] < kInf && (u < 0 || dist[v] < dist[static_cast<std::size_t>(u)])) {
          u = static_cast<long>(v);
        }
      }
      if (u < 0) break;
      const auto uu = static_cast<std::size_t>(u);
      done[uu] = 1;
      if (uu >= m && demand[uu - m] > eps) {
        target = u;
        break;
      }
      if (uu < m) {
        const auto i = static_cast<Eigen::Index>(uu);
        for (std::size_t j = 0; j < n; ++j) {
          const double cij = c(i, static_cast<Eigen::Index>(j));
          if (!std::isfinite(cij) || done[m + j]) continue;
          const double nd = dist[uu] + std::max(0.0, cij + pi[uu] - pi[m + j]);
          if (nd < dist[m + j]) {
            dist[m + j] = nd;
            parent[m + j] = u;
          }
        }
      } else {
        const auto j = static_cast<Eigen::Index>(uu - m);
        for (std::size_t i = 0; i < m; ++i) {
          if (done[i] || flow(static_cast<Eigen::Index>(i), j) <= 0.0) continue;
          const double cij = c(static_cast<Eigen::Index>(i), j);
          const double nd = dist[uu] + std::max(0.0, -cij + pi[uu] - pi[i]);
          if (nd < dist[i]) {
            dist[i] = nd;
            parent[i] = u;
          }
        }
      }
    }
    if (target < 0) {
      throw InfeasibleProblem(
          "solve_kantorovich: no finite-cost feasible coupling exists");
    }
    const double reach = dist[static_cast<std::size_t>(target)];
    for (std::size_t v = 0; v < nodes; ++v) pi[v] += std::min(dist[v], reach);

    // Bottleneck along the path back to a supplying row.
    double amount = demand[static_cast<std::size_t>(target) - m];
    long v = target;
    while (parent[static_cast<std::size_t>(v)] >= 0) {
      const long u = parent[static_cast<std::size_t>(v)];
      if (static_cast<std::size_t>(v) < m) {  // backward arc: column u -> row v
        amount = std::min(amount, flow(v, static_cast<Eigen::Index>(u - static_cast<long>(m))));
      }
      v = u;
    }
    amount = std::min(amount, supply[static_cast<std::size_t>(v)]);

    v = target;
    while (parent[static_cast<std::size_t>(v)] >= 0) {
      const long u = parent[static_cast<std::size_t>(v)];
      if (static_cast<std::size_t>(v) >= m) {
        flow(u, v - static_cast<long>(m)) += amount;
      } else {
        auto& f = flow(v, u - static_cast<long>(m));
        f -= amount;
        if (f < eps) f = 0.0;
      }
      v = u;
    }
    supply[static_cast<std::size_t>(v)] -= amount;
    demand[static_cast<std::size_t>(target) - m] -= amount;
  }

  TransportPlan plan;
  plan.matrix = flow;
  plan.value = 0.0;
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      if (flow(i, j) > 0.0) plan.value += flow(i, j) * c(i, j);
    }
  }
  DualPotentials duals;
  duals.f.resize(c.rows());
  duals.g.resize(c.cols());
  for (std::size_t i = 0; i < m; ++i) duals.f[static_cast<Eigen::Index>(i)] = -pi[i];
  for (std::size_t j = 0; j < n; ++j) duals.g[static_cast<Eigen::Index>(j)] = pi[m + j];
  // Keep exact feasibility f_i + g_j <= c_ij against accumulated rounding.
  for (Eigen::Index j = 0; j < c.cols(); ++j) {
    double excess = 0.0;
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      if (std::isfinite(c(i, j))) excess = std::max(excess, duals.f[i] + duals.g[j] - c(i, j));
    }
    duals.g[j] -= excess;
  }
  return {plan, duals};
}

/// g_j = min_i [c_ij - f_i].
inline Vec c1_transform(const Vec& f, const Mat& c) {
  if (f.size() != c.rows()) throw InvalidArgument("c1_transform: shape mismatch");
  Vec g(c.cols());
  for (Eigen::Index j = 0; j < c.cols(); ++j) g[j] = (c.col(j) - f).minCoeff();
  return g;
}

/// f_i = min_j [c_ij - g_j].
inline Vec c2_transform(const Vec& g, const Mat& c) {
  if (g.size() != c.cols()) throw InvalidArgument("c2_transform: shape mismatch");
  Vec f(c.rows());
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    f[i] = (c.row(i).transpose() - g).minCoeff();
  }
  return f;
}

/// f is c-concave iff c2(c1(f)) reproduces it within `tol` (sup norm).
inline bool is_c_concave(const Vec& f, const Mat& c, double tol = 1e-12) {
  if (!(tol > 0.0)) throw InvalidArgument("is_c_concave: tol must be > 0");
  return (c2_transform(c1_transform(f, c), c) - f).lpNorm<Eigen::Infinity>() <= tol;
}

/// Cells carrying mass (> tol) where f_i + g_j misses c_ij by more than tol.
/// An empty result certifies that the plan is optimal.
inline std::vector<std::pair<std::size_t, std::size_t>> support_slackness(
    const TransportPlan& plan, const DualPotentials& duals, const Mat& c,
    double tol = 1e-9) {
  std::vector<std::pair<std::size_t, std::size_t>> violations;
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      if (plan.matrix(i, j) > tol && std::abs(duals.f[i] + duals.g[j] - c(i, j)) > tol) {
        violations.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      }
    }
  }
  return violations;
}

namespace detail {

// Bellman-Ford on the node-potential graph with every non-support
// constraint tightened by `margin`: u_i - u_j <= c_ij - margin. Returns false
// on a negative cycle, otherwise fills `u` with feasible potentials.
inline bool tightened_potentials(const TransportPlan& plan, const Mat& c, double margin,
                                 double support_tol, double eps, std::vector<double>& u) {
  const auto m = static_cast<std::size_t>(c.rows());
  const auto n = static_cast<std::size_t>(c.cols());
  u.assign(m + n, 0.0);
  for (std::size_t pass = 0; pass <= m + n; ++pass) {
    bool changed = false;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double cij = c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (!std::isfinite(cij)) continue;
        const bool support =
            plan.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > support_tol;
        // column j -> row i
        const double w = support ? cij : cij - margin;
        if (u[m + j] + w < u[i] - eps) {
          u[i] = u[m + j] + w;
          changed = true;
        }
        // row i -> column j, support only
        if (support && u[i] - cij < u[m + j] - eps) {
          u[m + j] = u[i] - cij;
          changed = true;
        }
      }
    }
    if (!changed) return true;
  }
  return false;
}

}  // namespace detail

/// Recentres optimal duals inside the optimal dual face. Node potentials u
/// (u = f on rows, u = -g on columns) obey u_i - u_j <= c_ij everywhere and
/// equality on the plan's support. First the largest uniform slack t that all
/// non-support constraints can keep at once is found by bisection; then the
/// average of the shortest-path potentials from every source, taken on the
/// constraints tightened by t, gives duals whose inactive constraints all have
/// slack >= t. This keeps the c-transform argmin unique on a neighbourhood of
/// each support point that is as wide as the data allows.
inline DualPotentials center_duals(const TransportPlan& plan, const DualPotentials& duals,
                                   const Mat& c, double support_tol = 1e-14) {
  const auto m = static_cast<std::size_t>(c.rows());
  const auto n = static_cast<std::size_t>(c.cols());
  const std::size_t nodes = m + n;

  double lo_c = kInf, hi_c = -kInf;
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      if (!std::isfinite(c(i, j))) continue;
      lo_c = std::min(lo_c, c(i, j));
      hi_c = std::max(hi_c, c(i, j));
    }
  }
  if (!std::isfinite(lo_c)) return duals;
  const double eps = 1e-13 * std::max(1.0, hi_c - lo_c);

  std::vector<double> h;
  if (!detail::tightened_potentials(plan, c, 0.0, support_tol, eps, h)) return duals;
  double lo = 0.0;
  double hi = hi_c - lo_c + 1.0;
  std::vector<double> trial;
  for (int iter = 0; iter < 60 && hi - lo > 1e-12 * (hi_c - lo_c + 1.0); ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (detail::tightened_potentials(plan, c, mid, support_tol, eps, trial)) {
      lo = mid;
      h = trial;
    } else {
      hi = mid;
    }
  }
  const double margin = lo;

  // Arc weights, reweighted by h so they are non-negative (Johnson).
  auto weight = [&](std::size_t from, std::size_t to) -> double {
    double w;
    if (from >= m && to < m) {  // column j -> row i: u_i <= u_j + c_ij
      const auto i = static_cast<Eigen::Index>(to);
      const auto j = static_cast<Eigen::Index>(from - m);
      w = c(i, j);
      if (plan.matrix(i, j) <= support_tol) w -= margin;
    } else if (from < m && to >= m) {  // support arc row i -> column j
      const auto i = static_cast<Eigen::Index>(from);
      const auto j = static_cast<Eigen::Index>(to - m);
      if (plan.matrix(i, j) <= support_tol) return kInf;
      w = -c(i, j);
    } else {
      return kInf;
    }
    if (!std::isfinite(w)) return kInf;
    return std::max(0.0, w + h[from] - h[to]);
  };

  std::vector<double> sum(nodes, 0.0);
  std::size_t sources = 0;
  std::vector<double> dist(nodes);
  std::vector<char> done(nodes);
  for (std::size_t s = 0; s < nodes; ++s) {
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(done.begin(), done.end(), 0);
    dist[s] = 0.0;
    for (std::size_t iter = 0; iter < nodes; ++iter) {
      std::size_t u = nodes;
      for (std::size_t v = 0; v < nodes; ++v) {
        if (!done[v] && dist[v] < kInf && (u == nodes || dist[v] < dist[u])) u = v;
      }
      if (u == nodes) break;
      done[u] = 1;
      for (std::size_t v = 0; v < nodes; ++v) {
        if (done[v]) continue;
        const double w = weight(u, v);
        if (w < kInf && dist[u] + w < dist[v]) dist[v] = dist[u] + w;
      }
    }
    if (std::any_of(dist.begin(), dist.end(), [](double d) { return !std::isfinite(d); })) {
      continue;  // source does not reach every node
    }
    for (std::size_t v = 0; v < nodes; ++v) sum[v] += dist[v] - h[s] + h[v];
    ++sources;
  }
  if (sources == 0) return duals;

  DualPotentials out;
  out.f.resize(c.rows());
  out.g.resize(c.cols());
  const double inv = 1.0 / static_cast<double>(sources);
  for (std::size_t i = 0; i < m; ++i) out.f[static_cast<Eigen::Index>(i)] = sum[i] * inv;
  for (std::size_t j = 0; j < n; ++j) out.g[static_cast<Eigen::Index>(j)] = -sum[m + j] * inv;
  // Shift so the potentials sit near the input ones (the dual value is
  // invariant under f + t, g - t).
  const double shift = (duals.f - out.f).mean();
  out.f.array() += shift;
  out.g.array() -= shift;
  return out;
}

}  // namespace subot

#endif  // SUBOT_OT_HPP_

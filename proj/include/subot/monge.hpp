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

// Monge maps as time-1 projections of the Hamiltonian flow,
//   phi_t(x) = pi(e^{tH}(-df_x)),
// where f is a potential on a lattice and df comes from finite differences.
//
// Units: the flow uses H of L = 1/2|u|^2, whose unit-time cost is d^2/2,
// while cost matrices hold d^2. A potential in flow units is therefore half
// of a dual potential in cost-matrix units; potential_from_duals applies the
// factor. For transport to a point mass at y this gives f = d(., y)^2 / 2,
// whose seed -df_x is the initial covector of the geodesic from x to y.

#ifndef SUBOT_MONGE_HPP_
#define SUBOT_MONGE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "subot/core.hpp"
#include "subot/geometry.hpp"
#include "subot/grushin.hpp"
#include "subot/hamiltonian.hpp"
#include "subot/ot.hpp"

namespace subot {

/// Rectangular lattice lower + h * index, index_d in [0, counts_d).
struct Lattice {
  Vec lower;
  Vec spacing;
  std::vector<int> counts;

  int dim() const { return static_cast<int>(lower.size()); }

  Vec upper() const {
    Vec up(lower.size());
    for (int d = 0; d < dim(); ++d) {
      up[d] = lower[d] + spacing[d] * (counts[static_cast<std::size_t>(d)] - 1);
    }
    return up;
  }

  std::size_t node_count() const {
    std::size_t total = 1;
    for (int c : counts) total *= static_cast<std::size_t>(c);
    return total;
  }

  std::size_t flat_index(const std::vector<int>& idx) const {
    std::size_t flat = 0;
    for (int d = dim() - 1; d >= 0; --d) {
      flat = flat * static_cast<std::size_t>(counts[static_cast<std::size_t>(d)]) +
             static_cast<std::size_t>(idx[static_cast<std::size_t>(d)]);
    }
    return flat;
  }

  std::vector<int> multi_index(std::size_t flat) const {
    std::vector<int> idx(static_cast<std::size_t>(dim()));
    for (int d = 0; d < dim(); ++d) {
      const auto c = static_cast<std::size_t>(counts[static_cast<std::size_t>(d)]);
      idx[static_cast<std::size_t>(d)] = static_cast<int>(flat % c);
      flat /= c;
    }
    return idx;
  }

  Vec node(const std::vector<int>& idx) const {
    Vec x(dim());
    for (int d = 0; d < dim(); ++d) {
      x[d] = lower[d] + spacing[d] * idx[static_cast<std::size_t>(d)];
    }
    return x;
  }

  /// Lattice with uniform spacing h covering [lo, hi] (hi rounded up).
  static Lattice covering(const Vec& lo, const Vec& hi, double h) {
    if (!(h > 0.0)) throw InvalidArgument("lattice spacing must be > 0");
    Lattice g;
    g.lower = lo;
    g.spacing = Vec::Constant(lo.size(), h);
    for (Eigen::Index d = 0; d < lo.size(); ++d) {
      if (!(hi[d] > lo[d])) throw InvalidArgument("lattice box must have hi > lo");
      g.counts.push_back(static_cast<int>(std::ceil((hi[d] - lo[d]) / h - 1e-9)) + 1);
    }
    return g;
  }

  /// Lattice aligned to multiples of h that contains every point with at
  /// least `margin` cells to spare on each side.
  static Lattice around(const std::vector<Vec>& points, double h, int margin = 4) {
    if (points.empty()) throw InvalidArgument("lattice needs at least one point");
    Vec lo = points[0];
    Vec hi = points[0];
    for (const Vec& p : points) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    for (Eigen::Index d = 0; d < lo.size(); ++d) {
      lo[d] = (std::floor(lo[d] / h) - margin) * h;
      hi[d] = (std::ceil(hi[d] / h) + margin) * h;
    }
    return covering(lo, hi, h);
  }
};

/// Potential f sampled at lattice nodes. Gradients use central differences at
/// nodes, multilinearly interpolated inside the enclosing cell: df is exact to
/// the stencil order at nodes and O(h^2) between them.
struct PotentialField {
  Lattice grid;
  std::vector<double> values;
  // Central-difference order for node gradients: 4 uses the 5-point stencil
  // where two neighbours exist on both sides, 2 the 3-point one. Nodes next to
  // the box edge fall back to second-order one-sided differences.
  int stencil_order = 4;

  static PotentialField sample(const Lattice& grid,
                               const std::function<double(const Vec&)>& fn) {
    PotentialField field;
    field.grid = grid;
    field.values.resize(grid.node_count());
    parallel_for(field.values.size(), [&](std::size_t i) {
      field.values[i] = fn(grid.node(grid.multi_index(i)));
    });
    for (double v : field.values) {
      if (!std::isfinite(v)) throw NumericalFailure("potential field: non-finite node value");
    }
    return field;
  }

  bool contains(const Vec& x) const {
    const Vec up = grid.upper();
    for (int d = 0; d < grid.dim(); ++d) {
      if (!(x[d] >= grid.lower[d] && x[d] <= up[d])) return false;
    }
    return true;
  }

  double at(const std::vector<int>& idx) const { return values[grid.flat_index(idx)]; }

  Vec node_gradient(const std::vector<int>& idx) const {
    Vec grad(grid.dim());
    std::vector<int> probe = idx;
    for (int d = 0; d < grid.dim(); ++d) {
      const auto dd = static_cast<std::size_t>(d);
      const int i = idx[dd];
      const int count = grid.counts[dd];
      const double h = grid.spacing[d];
      auto value = [&](int j) {
        probe[dd] = j;
        const double v = at(probe);
        probe[dd] = i;
        return v;
      };
      if (count < 3) {
        grad[d] = count == 2 ? (value(1) - value(0)) / h : 0.0;
      } else if (stencil_order >= 4 && i >= 2 && i <= count - 3) {
        grad[d] = (value(i - 2) - 8.0 * value(i - 1) + 8.0 * value(i + 1) - value(i + 2)) /
                  (12.0 * h);
      } else if (i == 0) {
        grad[d] = (-3.0 * value(0) + 4.0 * value(1) - value(2)) / (2.0 * h);
      } else if (i == count - 1) {
        grad[d] = (3.0 * value(i) - 4.0 * value(i - 1) + value(i - 2)) / (2.0 * h);
      } else {
        grad[d] = (value(i + 1) - value(i - 1)) / (2.0 * h);
      }
    }
    return grad;
  }
};

/// df_x from the lattice samples. Throws InvalidArgument outside the box.
inline Vec potential_gradient(const PotentialField& field, const Vec& x) {
  const int dim = field.grid.dim();
  if (x.size() != dim) throw InvalidArgument("potential_gradient: dimension mismatch");
  if (!field.contains(x)) throw InvalidArgument("potential_gradient: point outside the grid box");

  std::vector<int> base(static_cast<std::size_t>(dim));
  std::vector<double> frac(static_cast<std::size_t>(dim));
  for (int d = 0; d < dim; ++d) {
    const auto dd = static_cast<std::size_t>(d);
    const double s = (x[d] - field.grid.lower[d]) / field.grid.spacing[d];
    int cell = static_cast<int>(std::floor(s));
    cell = std::clamp(cell, 0, std::max(0, field.grid.counts[dd] - 2));
    base[dd] = cell;
    frac[dd] = std::clamp(s - cell, 0.0, 1.0);
  }

  Vec grad = Vec::Zero(dim);
  std::vector<int> corner(static_cast<std::size_t>(dim));
  for (unsigned mask = 0; mask < (1u << dim); ++mask) {
    double w = 1.0;
    bool valid = true;
    for (int d = 0; d < dim; ++d) {
      const auto dd = static_cast<std::size_t>(d);
      const bool up = (mask >> d) & 1u;
      w *= up ? frac[dd] : 1.0 - frac[dd];
      corner[dd] = base[dd] + (up ? 1 : 0);
      if (corner[dd] >= field.grid.counts[dd]) valid = false;
    }
    if (w == 0.0 || !valid) continue;
    grad += w * field.node_gradient(corner);
  }
  return grad;
}

/// Seed potential from discrete duals: f(x) = 1/2 min_j [c(x, y_j) - g_j]
/// (the c-transform of g, halved into flow units).
inline PotentialField potential_from_duals(CostBackend backend, const ControlSystem& sys,
                                           const Lattice& grid, const DiscreteMeasure& nu,
                                           const Vec& g, const ConnectOptions& opts = {}) {
  if (g.size() != static_cast<Eigen::Index>(nu.size())) {
    throw InvalidArgument("potential_from_duals: dual length != |nu|");
  }
  return PotentialField::sample(grid, [&](const Vec& x) {
    double best = kInf;
    for (std::size_t j = 0; j < nu.size(); ++j) {
      const Vec& y = nu.points[j];
      const double cost = (x - y).norm() == 0.0 ? 0.0 : pair_cost(backend, sys, x, y, opts);
      best = std::min(best, cost - g[static_cast<Eigen::Index>(j)]);
    }
    return 0.5 * best;
  });
}

struct MongeOptions {
  double step = kDefaultStep;
};

/// phi(x, t) = pi(e^{tH}(x, -df_x)); t = 0 returns x unchanged.
inline Vec monge_map(const ControlSystem& sys, const PotentialField& field, const Vec& x,
                     double t, const MongeOptions& opts = {}) {
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("monge_map: t must lie in [0, 1]");
  const Vec seed = -potential_gradient(field, x);
  if (t == 0.0) return x;
  return flow_endpoint(sys, {x, seed}, t, opts.step).x;
}

struct InterpolationFrames {
  std::vector<double> times;
  std::vector<std::vector<Vec>> clouds;  // clouds[m][i] = phi_{times[m]}(x_i)
  std::vector<Vec> covectors;            // initial covector -df_{x_i}
};

inline InterpolationFrames displacement_interpolation(const ControlSystem& sys,
                                                      const PotentialField& field,
                                                      const DiscreteMeasure& mu,
                                                      const std::vector<double>& times,
                                                      const MongeOptions& opts = {}) {
  for (double t : times) {
    if (!(t >= 0.0 && t <= 1.0)) {
      throw InvalidArgument("displacement_interpolation: times must lie in [0, 1]");
    }
  }
  InterpolationFrames frames;
  frames.times = times;
  frames.clouds.assign(times.size(), std::vector<Vec>(mu.size()));
  frames.covectors.resize(mu.size());
  parallel_for(mu.size(), [&](std::size_t i) {
    const Vec& x = mu.points[i];
    frames.covectors[i] = -potential_gradient(field, x);
    for (std::size_t m = 0; m < times.size(); ++m) {
      frames.clouds[m][i] = monge_map(sys, field, x, times[m], opts);
    }
  });
  return frames;
}

/// Closed-form Grushin interpolation from (x1, x2) to the point mass at
/// (0, delta): the minimizing geodesic into (0, delta), run backwards,
///   ((a/b) sin(b(1-t)), delta + a^2/(4b^2) (2(1-t)b - sin(2(1-t)b))).
/// On the axis x1 = 0 the b = +-pi limit with a > 0 is used.
inline Vec grushin_interpolation_to_delta(double x1, double x2, double delta, double t) {
  if (t == 0.0) return make_vec({x1, x2});
  if (t == 1.0) return make_vec({0.0, delta});
  const auto cov = grushin::covector_to(make_vec({x1, x2}), delta);
  return grushin::geodesic(cov.a, cov.b, delta, 1.0 - t);
}

/// Squared-Euclidean matching cost between the time-t image of mu (with mu's
/// weights) and nu; zero iff the mapped cloud coincides with nu.
inline double pushforward_check(const ControlSystem& sys, const PotentialField& field,
                                const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                double t = 1.0, const MongeOptions& opts = {}) {
  DiscreteMeasure mapped;
  mapped.weights = mu.weights;
  mapped.points.resize(mu.size());
  parallel_for(mu.size(), [&](std::size_t i) {
    mapped.points[i] = monge_map(sys, field, mu.points[i], t, opts);
  });
  Mat c(static_cast<Eigen::Index>(mapped.size()), static_cast<Eigen::Index>(nu.size()));
  for (std::size_t i = 0; i < mapped.size(); ++i) {
    for (std::size_t j = 0; j < nu.size(); ++j) {
      c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          (mapped.points[i] - nu.points[j]).squaredNorm();
    }
  }
  return solve_kantorovich(c, mapped, nu).first.value;
}

}  // namespace subot

#endif  // SUBOT_MONGE_HPP_

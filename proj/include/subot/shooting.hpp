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

// Optimal-control cost c(x,y) by geodesic shooting.
//
// All costs here are squared distances: with L = 1/2|u|^2 a unit-time normal
// extremal has energy H(x, p0), and c = d^2 = 2 H(x, p0).

#ifndef SUBOT_SHOOTING_HPP_
#define SUBOT_SHOOTING_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "subot/core.hpp"
#include "subot/geometry.hpp"
#include "subot/grushin.hpp"
#include "subot/hamiltonian.hpp"
#include "subot/trajectory.hpp"

namespace subot {

/// Grushin geodesic from (0, delta) with initial covector (a, b) at time t.
inline Vec grushin_geodesic(double a, double b, double delta, double t) {
  return grushin::geodesic(a, b, delta, t);
}

/// Grushin distance from (0, delta) to `target`.
inline double grushin_distance_origin(const Vec& target, double delta = 0.0) {
  return grushin::distance_from_axis(target, delta);
}

struct GeodesicSolution {
  Vec p0;
  Vec endpoint;
  double cost = 0.0;            // d^2 = 2 H(x, p0)
  double boundary_error = 0.0;  // |endpoint - target|
  bool minimal = false;
  Trajectory trajectory;
};

struct ConnectOptions {
  int starts = 24;
  double tol = 1e-8;
  double step = kDefaultStep;
  // Seeds are first driven to `search_tol` with the cheaper `search_step`;
  // the `polish` cheapest distinct candidates are then finished at `step`.
  double search_step = 2e-2;
  double search_tol = 1e-6;
  int polish = 3;
  int max_iterations = 60;
  // Relative cost agreement required for the minimality flag.
  double minimality_tol = 1e-6;
};

namespace detail {

struct ShotResult {
  Vec p0;
  Vec endpoint;
  double error = kInf;
  double cost = kInf;
  bool converged = false;
};

inline Vec shoot(const ControlSystem& sys, const Vec& x, const Vec& p0,
                 double step) {
  return flow_endpoint(sys, {x, p0}, 1.0, step).x;
}

// Levenberg-Marquardt on p0 -> endpoint(p0) - y with a forward-difference
// Jacobian of the endpoint map. After reaching `tol` it keeps iterating
// while the residual still drops by 10x, so costs are accurate well beyond
// the stopping tolerance.
inline ShotResult solve_from_seed(const ControlSystem& sys, const Vec& x,
                                  const Vec& y, Vec p0, double step, double tol,
                                  int max_iterations) {
  ShotResult out;
  Vec r;
  try {
    r = shoot(sys, x, p0, step) - y;
  } catch (const FlowBlowUp&) {
    return out;
  }
  double err = r.norm();
  double lambda = 1e-6;
  int stalled = 0;
  for (int it = 0; it < max_iterations; ++it) {
    if (err <= tol * 1e-3 || (err <= tol && stalled > 0)) break;
    Mat jac(sys.n, sys.n);
    try {
      for (int j = 0; j < sys.n; ++j) {
        const double h = 1e-7 * (1.0 + std::abs(p0[j]));
        Vec q = p0;
        q[j] += h;
        jac.col(j) = (shoot(sys, x, q, step) - y - r) / h;
      }
    } catch (const FlowBlowUp&) {
      break;
    }
    const Mat jtj = jac.transpose() * jac;
    const Vec jtr = jac.transpose() * r;
    bool improved = false;
    for (int attempt = 0; attempt < 12; ++attempt) {
      const Mat lhs = jtj + lambda * Mat(jtj.diagonal().cwiseMax(1e-12).asDiagonal());
      const Vec delta = lhs.ldlt().solve(-jtr);
      if (!delta.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const Vec candidate = p0 + delta;
      Vec rc;
      try {
        rc = shoot(sys, x, candidate, step) - y;
      } catch (const FlowBlowUp&) {
        lambda *= 10.0;
        continue;
      }
      const double ec = rc.norm();
      if (ec < err) {
        stalled = (err <= tol && ec > 0.1 * err) ? stalled + 1 : 0;
        p0 = candidate;
        r = rc;
        err = ec;
        lambda = std::max(lambda * 0.1, 1e-12);
        improved = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }
  out.p0 = p0;
  out.endpoint = r + y;
  out.error = err;
  out.cost = 2.0 * sys.hamiltonian(x, p0);
  out.converged = err <= tol;
  return out;
}

// Deterministic seeds: Halton points inside the ball of radius
// 2 (1 + |y - x|) pi, by rejection from the enclosing cube.
inline std::vector<Vec> shooting_seeds(int n, int count, double radius) {
  std::vector<Vec> seeds;
  for (std::size_t i = 0; static_cast<int>(seeds.size()) < count; ++i) {
    const auto h = halton_point(i, n);
    Vec v(n);
    for (int d = 0; d < n; ++d) v[d] = 2.0 * h[static_cast<std::size_t>(d)] - 1.0;
    if (v.squaredNorm() <= 1.0) seeds.push_back(radius * v);
  }
  return seeds;
}

}  // namespace detail

/// Multi-start shooting for the cheapest normal extremal from x to y in unit
/// time. Throws NoConvergence when no start reaches `opts.tol`.
inline GeodesicSolution connect(const ControlSystem& sys, const Vec& x,
                                const Vec& y, const ConnectOptions& opts = {}) {
  if (x.size() != sys.n || y.size() != sys.n) {
    throw InvalidArgument("connect: endpoints must have dimension " +
                          std::to_string(sys.n));
  }
  if (opts.starts < 1 || !(opts.tol > 0.0) || !(opts.step > 0.0)) {
    throw InvalidArgument("connect: need starts >= 1, tol > 0, step > 0");
  }

  GeodesicSolution sol;
  if ((y - x).norm() == 0.0) {
    sol.p0 = Vec::Zero(sys.n);
    sol.endpoint = x;
    sol.minimal = true;
    sol.trajectory = ham_flow(sys, {x, sol.p0}, 1.0, opts.step);
    return sol;
  }

  const double radius = 2.0 * (1.0 + (y - x).norm()) * kPi;
  const auto seeds = detail::shooting_seeds(sys.n, opts.starts, radius);
  const double search_step = std::max(opts.search_step, opts.step);
  const double search_tol = std::max(opts.search_tol, opts.tol);
  std::vector<detail::ShotResult> coarse(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) {
    coarse[i] = detail::solve_from_seed(sys, x, y, seeds[i], search_step,
                                        search_tol, opts.max_iterations);
  });

  // Cheapest distinct coarse candidates go on to the fine step. Unconverged
  // seeds are kept as a fallback in order of boundary error.
  std::vector<std::size_t> order(coarse.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (coarse[a].converged != coarse[b].converged) return coarse[a].converged;
    return coarse[a].converged ? coarse[a].cost < coarse[b].cost
                               : coarse[a].error < coarse[b].error;
  });
  std::vector<Vec> picked;
  for (std::size_t idx : order) {
    if (static_cast<int>(picked.size()) >= std::max(1, opts.polish)) break;
    if (!coarse[idx].p0.size()) continue;
    const Vec& p = coarse[idx].p0;
    const bool duplicate = std::any_of(picked.begin(), picked.end(), [&](const Vec& q) {
      return (p - q).norm() <= 1e-4 * (1.0 + q.norm());
    });
    if (!duplicate) picked.push_back(p);
  }
  std::vector<detail::ShotResult> fine(picked.size());
  parallel_for(picked.size(), [&](std::size_t i) {
    fine[i] = detail::solve_from_seed(sys, x, y, picked[i], opts.step, opts.tol,
                                      opts.max_iterations);
  });

  const detail::ShotResult* best = nullptr;
  double best_error = kInf;
  for (const auto& r : coarse) best_error = std::min(best_error, r.error);
  for (const auto& r : fine) {
    best_error = std::min(best_error, r.error);
    if (!r.converged) continue;
    if (best == nullptr || r.cost < best->cost) best = &r;
  }
  if (best == nullptr) {
    std::ostringstream os;
    os << "connect(" << sys.name << "): no start converged; best boundary error "
       << best_error;
    throw NoConvergence(best_error, os.str());
  }

  sol.p0 = best->p0;
  sol.endpoint = best->endpoint;
  sol.cost = best->cost;
  sol.boundary_error = best->error;
  sol.trajectory = ham_flow(sys, {x, sol.p0}, 1.0, opts.step);
  sol.minimal = true;
  if (sys.name == "grushin" && x[0] == 0.0) {
    const double d = grushin_distance_origin(y, x[1]);
    sol.minimal = std::abs(sol.cost - d * d) <= opts.minimality_tol * (1.0 + d * d);
  }
  return sol;
}

/// Upper-bound oracle built from piecewise-constant controls.
struct BruteForceResult {
  double cost = kInf;     // sum_p |u_p|^2 / pieces, i.e. 2 * energy
  double penalty = 0.0;   // penalty left after the exact endpoint projection
  double boundary_error = 0.0;
  std::vector<Vec> controls;
};

struct BruteForceOptions {
  int substeps = 16;               // RK4 steps per piece
  double penalty_weight = 1e4;
  std::size_t seed_budget = 4096;  // grid samples scored before refinement
  int refine_from = 4;             // best samples handed to coordinate descent
};

namespace detail {

inline Vec piecewise_endpoint(const ControlSystem& sys, const Vec& x,
                              const std::vector<Vec>& controls, int substeps) {
  const double dt = 1.0 / (static_cast<double>(controls.size()) * substeps);
  Vec z = x;
  for (const Vec& u : controls) {
    for (int s = 0; s < substeps; ++s) {
      const Vec k1 = sys.dynamics(z, u);
      const Vec k2 = sys.dynamics(z + 0.5 * dt * k1, u);
      const Vec k3 = sys.dynamics(z + 0.5 * dt * k2, u);
      const Vec k4 = sys.dynamics(z + dt * k3, u);
      z += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  return z;
}

inline std::vector<Vec> unpack(const Vec& flat, int pieces, int k) {
  std::vector<Vec> out;
  for (int p = 0; p < pieces; ++p) out.push_back(flat.segment(p * k, k));
  return out;
}

inline double control_cost(const Vec& flat, int pieces) {
  return flat.squaredNorm() / pieces;
}

}  // namespace detail

/// Upper bound on c(x,y) over `pieces` constant control pieces whose values
/// start on a `grid`-point lattice in [-radius, radius]^k. A penalised search
/// (weight 1e4 on |x(1)-y|^2) is followed by a minimum-norm Newton projection
/// onto x(1) = y and feasible descent, so the returned cost belongs to an
/// admissible control.
inline BruteForceResult brute_force_cost(const ControlSystem& sys, const Vec& x,
                                         const Vec& y, int pieces, int grid,
                                         double radius,
                                         const BruteForceOptions& opts = {}) {
  if (pieces < 1 || grid < 2 || !(radius > 0.0)) {
    throw InvalidArgument("brute_force_cost: need pieces>=1, grid>=2, radius>0");
  }
  const int k = sys.k;
  const int dim = pieces * k;
  if (pieces > 16 || std::pow(static_cast<double>(grid), k) > 1.0e4) {
    throw InvalidArgument("brute_force_cost: search budget exceeded");
  }

  auto endpoint = [&](const Vec& flat) {
    return detail::piecewise_endpoint(sys, x, detail::unpack(flat, pieces, k),
                                      opts.substeps);
  };
  auto objective = [&](const Vec& flat) {
    const Vec e = endpoint(flat) - y;
    const double value =
        detail::control_cost(flat, pieces) + opts.penalty_weight * e.squaredNorm();
    return std::isfinite(value) ? value : kInf;
  };

  // Stage 1: score lattice points. With few pieces the whole lattice fits in
  // the budget; otherwise Halton indices pick a spread-out subset.
  const double spacing = 2.0 * radius / (grid - 1);
  const double lattice_size = std::pow(static_cast<double>(grid), dim);
  const bool exhaustive = lattice_size <= static_cast<double>(opts.seed_budget);
  const std::size_t samples =
      exhaustive ? static_cast<std::size_t>(lattice_size) : opts.seed_budget;
  std::vector<std::pair<double, Vec>> scored;
  scored.reserve(samples + 1);
  scored.emplace_back(objective(Vec::Zero(dim)), Vec::Zero(dim));
  for (std::size_t s = 0; s < samples; ++s) {
    Vec flat(dim);
    if (exhaustive) {
      std::size_t code = s;
      for (int d = 0; d < dim; ++d) {
        flat[d] = -radius + spacing * static_cast<double>(code % static_cast<std::size_t>(grid));
        code /= static_cast<std::size_t>(grid);
      }
    } else {
      const auto h = halton_point(s, dim);
      for (int d = 0; d < dim; ++d) {
        const auto cell = std::min<int>(
            grid - 1, static_cast<int>(h[static_cast<std::size_t>(d)] * grid));
        flat[d] = -radius + spacing * cell;
      }
    }
    scored.emplace_back(objective(flat), flat);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  // Stage 2: coordinate descent with shrinking steps from the best samples.
  Vec best_flat;
  double best_value = kInf;
  const int refine = std::min<int>(opts.refine_from, static_cast<int>(scored.size()));
  for (int r = 0; r < refine; ++r) {
    Vec cur = scored[static_cast<std::size_t>(r)].second;
    double val = scored[static_cast<std::size_t>(r)].first;
    for (double h = spacing; h > 1e-3; h *= 0.5) {
      bool moved = true;
      for (int sweep = 0; sweep < 50 && moved; ++sweep) {
        moved = false;
        for (int d = 0; d < dim; ++d) {
          for (double sign : {1.0, -1.0}) {
            Vec trial = cur;
            trial[d] += sign * h;
            const double tv = objective(trial);
            if (tv < val) {
              cur = trial;
              val = tv;
              moved = true;
            }
          }
        }
      }
    }
    if (val < best_value) {
      best_value = val;
      best_flat = cur;
    }
  }

  // Stage 3: minimum-norm Newton onto the terminal constraint x(1) = y.
  auto project = [&](Vec flat) {
    Vec miss = endpoint(flat) - y;
    for (int it = 0; it < 50 && miss.norm() > 1e-13; ++it) {
      const Mat jac = central_jacobian(endpoint, flat, 1e-7);
      const Vec delta = jac.completeOrthogonalDecomposition().solve(-miss);
      double scale = 1.0;
      bool accepted = false;
      for (int back = 0; back < 30; ++back, scale *= 0.5) {
        const Vec trial = flat + scale * delta;
        const Vec m = endpoint(trial) - y;
        if (m.norm() < miss.norm()) {
          flat = trial;
          miss = m;
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
    }
    return std::make_pair(flat, miss);
  };
  auto [flat, miss] = project(best_flat);

  // Stage 4: feasible descent on |u|^2. Each step solves the KKT system
  // linearised at the current control, is projected back onto x(1) = y and
  // kept only if the cost drops, so every iterate stays admissible.
  const double feasible = std::max(1e-10, 10.0 * miss.norm());
  for (int it = 0; it < 40 && miss.norm() <= feasible; ++it) {
    const Mat jac = central_jacobian(endpoint, flat, 1e-7);
    const Eigen::Index m = jac.rows();
    Mat kkt = Mat::Zero(dim + m, dim + m);
    kkt.topLeftCorner(dim, dim) = 2.0 * Mat::Identity(dim, dim);
    kkt.topRightCorner(dim, m) = jac.transpose();
    kkt.bottomLeftCorner(m, dim) = jac;
    Vec rhs(dim + m);
    rhs.head(dim) = -2.0 * flat;
    rhs.tail(m) = -miss;
    const Vec step = kkt.completeOrthogonalDecomposition().solve(rhs).head(dim);
    if (!step.allFinite() || step.norm() < 1e-12 * (1.0 + flat.norm())) break;
    const double current = detail::control_cost(flat, pieces);
    bool improved = false;
    double scale = 1.0;
    for (int back = 0; back < 20; ++back, scale *= 0.5) {
      auto [cand, cand_miss] = project(flat + scale * step);
      if (cand_miss.norm() <= feasible &&
          detail::control_cost(cand, pieces) < current - 1e-14 * (1.0 + current)) {
        flat = cand;
        miss = cand_miss;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }

  BruteForceResult out;
  out.controls = detail::unpack(flat, pieces, k);
  out.boundary_error = miss.norm();
  out.penalty = opts.penalty_weight * miss.squaredNorm();
  out.cost = detail::control_cost(flat, pieces);
  return out;
}

}  // namespace subot

#endif  // SUBOT_SHOOTING_HPP_

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

#ifndef SUBOT_HAMILTONIAN_HPP_
#define SUBOT_HAMILTONIAN_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "subot/core.hpp"
#include "subot/geometry.hpp"
#include "subot/trajectory.hpp"

namespace subot {

inline constexpr double kDefaultStep = 1e-3;

namespace detail {

// Number of fixed steps covering [0, t_final] with spacing <= step.
inline std::size_t step_count(double t_final, double step) {
  const double ratio = t_final / step;
  auto count = static_cast<std::size_t>(std::ceil(ratio - 1e-9));
  return std::max<std::size_t>(count, 1);
}

inline PhasePoint hamiltonian_rhs(const ControlSystem& sys, const PhasePoint& z) {
  auto [dx, dp] = sys.hamiltonian_grad(z.x, z.p);
  return {std::move(dp), -dx};
}

// One classical fourth-order Runge-Kutta step of the Hamiltonian field.
inline PhasePoint rk4_step(const ControlSystem& sys, const PhasePoint& z,
                           double dt) {
  const PhasePoint k1 = hamiltonian_rhs(sys, z);
  const PhasePoint k2 =
      hamiltonian_rhs(sys, {z.x + 0.5 * dt * k1.x, z.p + 0.5 * dt * k1.p});
  const PhasePoint k3 =
      hamiltonian_rhs(sys, {z.x + 0.5 * dt * k2.x, z.p + 0.5 * dt * k2.p});
  const PhasePoint k4 = hamiltonian_rhs(sys, {z.x + dt * k3.x, z.p + dt * k3.p});
  return {z.x + (dt / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
          z.p + (dt / 6.0) * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p)};
}

inline void check_flow_args(const ControlSystem& sys, const PhasePoint& start,
                            double t_final, double step) {
  if (!(step > 0.0)) throw InvalidArgument("ham_flow: step must be > 0");
  if (!(t_final > 0.0)) throw InvalidArgument("ham_flow: t_final must be > 0");
  if (start.x.size() != sys.n || start.p.size() != sys.n) {
    throw InvalidArgument("ham_flow: phase point dimension mismatch for '" +
                          sys.name + "'");
  }
  if (!start.finite()) throw InvalidArgument("ham_flow: non-finite start");
}

[[noreturn]] inline void report_blow_up(double t) {
  std::ostringstream os;
  os << "Hamiltonian flow left the finite range at t=" << t;
  throw FlowBlowUp(t, os.str());
}

}  // namespace detail

/// Integrates the Hamiltonian flow e^{tH} from `start` with fixed RK4 steps of
/// size <= `step` and records every step.
inline Trajectory ham_flow(const ControlSystem& sys, const PhasePoint& start,
                           double t_final, double step = kDefaultStep) {
  detail::check_flow_args(sys, start, t_final, step);
  const std::size_t steps = detail::step_count(t_final, step);
  const double dt = t_final / static_cast<double>(steps);

  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.covectors.reserve(steps + 1);
  traj.controls.reserve(steps + 1);
  traj.energy.reserve(steps + 1);

  PhasePoint z = start;
  for (std::size_t s = 0;; ++s) {
    const double t = (s == steps) ? t_final : dt * static_cast<double>(s);
    traj.times.push_back(t);
    traj.states.push_back(z.x);
    traj.covectors.push_back(z.p);
    traj.controls.push_back(sys.maximizing_control(z.x, z.p));
    traj.energy.push_back(sys.hamiltonian(z.x, z.p));
    if (s == steps) break;
    z = detail::rk4_step(sys, z, dt);
    if (!z.finite()) detail::report_blow_up(dt * static_cast<double>(s + 1));
  }
  return traj;
}

/// Time-t phase point of the flow without storing samples.
inline PhasePoint flow_endpoint(const ControlSystem& sys, const PhasePoint& start,
                                double t_final, double step = kDefaultStep) {
  detail::check_flow_args(sys, start, t_final, step);
  const std::size_t steps = detail::step_count(t_final, step);
  const double dt = t_final / static_cast<double>(steps);
  PhasePoint z = start;
  for (std::size_t s = 0; s < steps; ++s) {
    z = detail::rk4_step(sys, z, dt);
    if (!z.finite()) detail::report_blow_up(dt * static_cast<double>(s + 1));
  }
  return z;
}

/// max_m |H(t_m) - H(0)|.
inline double energy_drift(const Trajectory& traj) {
  if (traj.energy.empty()) return 0.0;
  double drift = 0.0;
  for (double h : traj.energy) drift = std::max(drift, std::abs(h - traj.energy.front()));
  return drift;
}

/// Finite control set for the maximum-condition check, with its resolution
/// slack: for L = 1/2|u|^2 the grid maximum of <p,F> - L undershoots the true
/// maximum by at most 1/2 sum_i (spacing_i / 2)^2.
struct ControlGrid {
  std::vector<Vec> controls;
  double slack = 0.0;
  double radius = 0.0;
};

/// Uniform grid with `points_per_axis` nodes on [-radius, radius]^k.
inline ControlGrid make_control_grid(int k, double radius, int points_per_axis) {
  if (k < 1 || points_per_axis < 2 || !(radius > 0.0)) {
    throw InvalidArgument("make_control_grid: need k>=1, >=2 points, radius>0");
  }
  ControlGrid grid;
  grid.radius = radius;
  const double spacing = 2.0 * radius / (points_per_axis - 1);
  grid.slack = 0.5 * k * (0.5 * spacing) * (0.5 * spacing);
  std::vector<int> idx(static_cast<std::size_t>(k), 0);
  while (true) {
    Vec u(k);
    for (int d = 0; d < k; ++d) u[d] = -radius + spacing * idx[static_cast<std::size_t>(d)];
    grid.controls.push_back(u);
    int d = 0;
    while (d < k && ++idx[static_cast<std::size_t>(d)] == points_per_axis) {
      idx[static_cast<std::size_t>(d)] = 0;
      ++d;
    }
    if (d == k) break;
  }
  return grid;
}

/// Which statement of the maximum principle the covectors follow.
enum class PmpForm {
  kMaximized,  // H_u = <p,F> - L maximized, flow of the maximized Hamiltonian
  kBolzaMin,   // H_u = <p,F> + L minimized; covectors are the negatives
};

struct PmpReport {
  double adjoint_residual = 0.0;         // max |(x', p') - Hamiltonian field of H_u|
  double max_condition_residual = 0.0;   // max_m [grid max - value at u(t_m)]_+
  double grid_slack = 0.0;
  bool controls_in_grid = true;          // recorded controls within grid box
};

namespace detail {

// Fornberg weights for the first derivative at x0 from the given nodes.
inline std::vector<double> first_derivative_weights(double x0,
                                                    const std::vector<double>& nodes) {
  const std::size_t n = nodes.size();
  std::vector<std::vector<double>> c(n, std::vector<double>(2, 0.0));
  double c1 = 1.0;
  double c4 = nodes[0] - x0;
  c[0][0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t mn = std::min<std::size_t>(i, 1);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[i] - x0;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        for (std::size_t k = mn; k >= 1; --k) {
          c[i][k] = c1 * (static_cast<double>(k) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        }
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (std::size_t k = mn; k >= 1; --k) {
        c[j][k] = (c4 * c[j][k] - static_cast<double>(k) * c[j][k - 1]) / c3;
      }
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = c[i][1];
  return w;
}

// Time derivative of samples[m] from a centred (or clamped) 5-point stencil.
inline Vec sample_derivative(const std::vector<double>& t,
                             const std::vector<Vec>& samples, std::size_t m) {
  const std::size_t width = std::min<std::size_t>(5, t.size());
  std::size_t first = (m >= width / 2) ? m - width / 2 : 0;
  first = std::min(first, t.size() - width);
  std::vector<double> nodes(t.begin() + static_cast<std::ptrdiff_t>(first),
                            t.begin() + static_cast<std::ptrdiff_t>(first + width));
  const auto w = first_derivative_weights(t[m], nodes);
  Vec d = Vec::Zero(samples[m].size());
  for (std::size_t i = 0; i < width; ++i) d += w[i] * samples[first + i];
  return d;
}

}  // namespace detail

/// Checks a candidate extremal against the maximum principle: the adjoint
/// equation of H_u along the recorded controls, and the maximum condition of
/// <p,F(x,u)> - L(x,u) over `grid`.
inline PmpReport pmp_check(const ControlSystem& sys, const Trajectory& traj,
                           const ControlGrid& grid,
                           PmpForm form = PmpForm::kMaximized) {
  if (traj.size() < 3) {
    throw InvalidArgument("pmp_check: need at least 3 samples to differentiate");
  }
  if (!traj.has_covectors() || traj.controls.size() != traj.size()) {
    throw InvalidArgument("pmp_check: trajectory lacks covectors or controls");
  }
  if (grid.controls.empty()) throw InvalidArgument("pmp_check: empty control grid");

  std::vector<Vec> covectors = traj.covectors;
  if (form == PmpForm::kBolzaMin) {
    for (Vec& p : covectors) p = -p;
  }

  PmpReport report;
  report.grid_slack = grid.slack;
  for (std::size_t m = 0; m < traj.size(); ++m) {
    const Vec& x = traj.states[m];
    const Vec& p = covectors[m];
    const Vec& u = traj.controls[m];

    const Vec xdot = detail::sample_derivative(traj.times, traj.states, m);
    const Vec pdot = detail::sample_derivative(traj.times, covectors, m);
    const Vec field_x = sys.dynamics(x, u);
    const Vec field_p = -(sys.dynamics_jacobian(x, u).transpose() * p -
                          sys.lagrangian_grad_x(x, u));
    report.adjoint_residual =
        std::max({report.adjoint_residual, (xdot - field_x).lpNorm<Eigen::Infinity>(),
                  (pdot - field_p).lpNorm<Eigen::Infinity>()});

    const double recorded = p.dot(field_x) - sys.lagrangian(x, u);
    double best = -kInf;
    for (const Vec& v : grid.controls) {
      best = std::max(best, p.dot(sys.dynamics(x, v)) - sys.lagrangian(x, v));
    }
    report.max_condition_residual =
        std::max(report.max_condition_residual, best - recorded);
    if (u.lpNorm<Eigen::Infinity>() > grid.radius) report.controls_in_grid = false;
  }
  return report;
}

/// Mayer form of the Bolza problem: appends z with z' = L(x,u), so z(t)
/// accumulates the running cost and the extended running cost is zero.
///
/// The extended Hamiltonian is max_u [<p,F> + p_z L] = s H(x, p/s) with
/// s = -p_z > 0; normal extremals carry p_z = -1.
inline ControlSystem bolza_to_mayer(const ControlSystem& sys) {
  ControlSystem ext;
  const int n = sys.n;
  ext.name = sys.name + "+cost";
  ext.n = n + 1;
  ext.k = sys.k;

  auto head = [n](const Vec& xz) { return Vec(xz.head(n)); };
  auto scale_of = [n](const Vec& pz) {
    const double s = -pz[n];
    if (!(s > 0.0)) {
      throw InvalidArgument("extended Hamiltonian needs p_z < 0 (normal case)");
    }
    return s;
  };

  ext.fields = [sys, head](const Vec& xz) {
    std::vector<Vec> out;
    for (const Vec& xi : sys.fields(head(xz))) {
      Vec e(xi.size() + 1);
      e << xi, 0.0;
      out.push_back(e);
    }
    return out;
  };
  ext.field_jacobian = [sys, head, n](const Vec& xz, int i) {
    Mat j = Mat::Zero(n + 1, n + 1);
    j.topLeftCorner(n, n) = sys.field_jacobian(head(xz), i);
    return j;
  };
  ext.dynamics = [sys, head](const Vec& xz, const Vec& u) {
    const Vec x = head(xz);
    Vec v(xz.size());
    v << sys.dynamics(x, u), sys.lagrangian(x, u);
    return v;
  };
  ext.dynamics_jacobian = [sys, head, n](const Vec& xz, const Vec& u) {
    const Vec x = head(xz);
    Mat j = Mat::Zero(n + 1, n + 1);
    j.topLeftCorner(n, n) = sys.dynamics_jacobian(x, u);
    j.block(n, 0, 1, n) = sys.lagrangian_grad_x(x, u).transpose();
    return j;
  };
  ext.lagrangian = [](const Vec&, const Vec&) { return 0.0; };
  ext.lagrangian_grad_x = [n](const Vec&, const Vec&) {
    return Vec(Vec::Zero(n + 1));
  };
  ext.hamiltonian = [sys, head, scale_of, n](const Vec& xz, const Vec& pz) {
    const double s = scale_of(pz);
    return s * sys.hamiltonian(head(xz), Vec(pz.head(n) / s));
  };
  ext.hamiltonian_grad = [sys, head, scale_of, n](const Vec& xz, const Vec& pz) {
    const double s = scale_of(pz);
    const Vec q = pz.head(n) / s;
    const auto [hx, hp] = sys.hamiltonian_grad(head(xz), q);
    Vec dx(n + 1);
    dx << s * hx, 0.0;
    Vec dp(n + 1);
    dp << hp, hp.dot(q) - sys.hamiltonian(head(xz), q);
    return std::make_pair(dx, dp);
  };
  ext.maximizing_control = [sys, head, scale_of, n](const Vec& xz, const Vec& pz) {
    const double s = scale_of(pz);
    return sys.maximizing_control(head(xz), Vec(pz.head(n) / s));
  };
  return ext;
}

}  // namespace subot

#endif  // SUBOT_HAMILTONIAN_HPP_

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

// Framed control systems x' = X_0(x) + sum_i u_i X_i(x) with running cost
// L(x,u), their maximized Hamiltonians, and structural checks (Lie brackets,
// the 2-generating condition, Goh residuals, Lagrangian regularity).
//
// Built-in systems use L = 1/2 |u|^2, so H = 1/2 sum_i <p, X_i(x)>^2 and the
// squared distance of a unit-time minimizer is d^2 = 2 H(x0, p0).

#ifndef SUBOT_GEOMETRY_HPP_
#define SUBOT_GEOMETRY_HPP_

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "subot/core.hpp"
#include "subot/trajectory.hpp"

namespace subot {

/// A control system together with its running cost and maximized
/// Hamiltonian H(x,p) = max_u [<p, F(x,u)> - L(x,u)].
///
/// Field indices are 0-based. The record is immutable after construction and
/// every member is a pure function, so one instance may be shared across
/// threads.
struct ControlSystem {
  using FieldsFn = std::function<std::vector<Vec>(const Vec&)>;
  using FieldJacobianFn = std::function<Mat(const Vec&, int)>;
  using VectorFieldFn = std::function<Vec(const Vec&)>;
  using MatrixFieldFn = std::function<Mat(const Vec&)>;
  using StateControlFn = std::function<Vec(const Vec&, const Vec&)>;
  using StateControlMatFn = std::function<Mat(const Vec&, const Vec&)>;
  using ScalarFn = std::function<double(const Vec&, const Vec&)>;
  using GradientFn = std::function<std::pair<Vec, Vec>(const Vec&, const Vec&)>;

  std::string name;
  int n = 0;  // state dimension
  int k = 0;  // control dimension

  FieldsFn fields;                // X_1..X_k at x
  FieldJacobianFn field_jacobian; // dX_i/dx at x
  VectorFieldFn drift;            // X_0, empty when absent
  MatrixFieldFn drift_jacobian;

  StateControlFn dynamics;             // F(x,u)
  StateControlMatFn dynamics_jacobian; // dF/dx at (x,u)
  ScalarFn lagrangian;                 // L(x,u)
  StateControlFn lagrangian_grad_x;    // dL/dx at (x,u)

  ScalarFn hamiltonian;          // H(x,p)
  GradientFn hamiltonian_grad;   // (dH/dx, dH/dp)
  StateControlFn maximizing_control;  // argmax_u of <p,F(x,u)> - L(x,u)

  bool has_drift() const { return static_cast<bool>(drift); }
};

namespace detail {

inline void check_field_index(const ControlSystem& sys, int i) {
  if (i < 0 || i >= sys.k) {
    throw InvalidArgument("field index " + std::to_string(i) +
                          " out of range for system '" + sys.name +
                          "' with k=" + std::to_string(sys.k));
  }
}

}  // namespace detail

/// Builds a control-affine system with the quadratic cost L = 1/2 |u|^2.
/// When `field_jacobian` is empty, Jacobians fall back to central differences.
inline ControlSystem make_control_affine_system(
    std::string name, int n, int k, ControlSystem::FieldsFn fields,
    ControlSystem::FieldJacobianFn field_jacobian = {},
    ControlSystem::VectorFieldFn drift = {},
    ControlSystem::MatrixFieldFn drift_jacobian = {}) {
  if (n < 1 || k < 1) throw InvalidArgument("system dimensions must be >= 1");
  if (!fields) throw InvalidArgument("system needs a field evaluator");

  ControlSystem sys;
  sys.name = std::move(name);
  sys.n = n;
  sys.k = k;
  sys.fields = fields;
  if (field_jacobian) {
    sys.field_jacobian = std::move(field_jacobian);
  } else {
    sys.field_jacobian = [fields](const Vec& x, int i) {
      return central_jacobian(
          [&](const Vec& y) { return fields(y)[static_cast<std::size_t>(i)]; },
          x);
    };
  }
  sys.drift = drift;
  if (drift && !drift_jacobian) {
    sys.drift_jacobian = [drift](const Vec& x) {
      return central_jacobian(drift, x);
    };
  } else {
    sys.drift_jacobian = std::move(drift_jacobian);
  }

  const auto jac = sys.field_jacobian;
  const auto drift_jac = sys.drift_jacobian;

  sys.dynamics = [fields, drift](const Vec& x, const Vec& u) {
    const auto xs = fields(x);
    Vec v = drift ? drift(x) : Vec(Vec::Zero(x.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) {
      v += u[static_cast<Eigen::Index>(i)] * xs[i];
    }
    return v;
  };
  sys.dynamics_jacobian = [jac, drift_jac, k](const Vec& x, const Vec& u) {
    Mat j = drift_jac ? drift_jac(x) : Mat(Mat::Zero(x.size(), x.size()));
    for (int i = 0; i < k; ++i) j += u[i] * jac(x, i);
    return j;
  };
  sys.lagrangian = [](const Vec&, const Vec& u) { return 0.5 * u.squaredNorm(); };
  sys.lagrangian_grad_x = [](const Vec& x, const Vec&) {
    return Vec(Vec::Zero(x.size()));
  };
  sys.maximizing_control = [fields, k](const Vec& x, const Vec& p) {
    const auto xs = fields(x);
    Vec u(k);
    for (int i = 0; i < k; ++i) u[i] = p.dot(xs[static_cast<std::size_t>(i)]);
    return u;
  };
  sys.hamiltonian = [fields, drift](const Vec& x, const Vec& p) {
    double h = drift ? p.dot(drift(x)) : 0.0;
    for (const Vec& xi : fields(x)) {
      const double s = p.dot(xi);
      h += 0.5 * s * s;
    }
    return h;
  };
  sys.hamiltonian_grad = [fields, jac, drift, drift_jac, k](const Vec& x,
                                                           const Vec& p) {
    const auto xs = fields(x);
    Vec dx = Vec::Zero(x.size());
    Vec dp = Vec::Zero(x.size());
    if (drift) {
      dp += drift(x);
      dx += drift_jac(x).transpose() * p;
    }
    for (int i = 0; i < k; ++i) {
      const Vec& xi = xs[static_cast<std::size_t>(i)];
      const double s = p.dot(xi);
      dp += s * xi;
      dx += s * (jac(x, i).transpose() * p);
    }
    return std::make_pair(dx, dp);
  };
  return sys;
}

/// Grushin plane: X_1 = d/dx1, X_2 = x1 d/dx2.
inline ControlSystem grushin_system() {
  return make_control_affine_system(
      "grushin", 2, 2,
      [](const Vec& x) {
        return std::vector<Vec>{make_vec({1.0, 0.0}), make_vec({0.0, x[0]})};
      },
      [](const Vec&, int i) {
        Mat j = Mat::Zero(2, 2);
        if (i == 1) j(1, 0) = 1.0;
        return j;
      });
}

/// Heisenberg group with the left-invariant frame
/// X_1 = d/dx - (y/2) d/dz, X_2 = d/dy + (x/2) d/dz.
inline ControlSystem heisenberg_system() {
  return make_control_affine_system(
      "heisenberg", 3, 2,
      [](const Vec& x) {
        return std::vector<Vec>{make_vec({1.0, 0.0, -0.5 * x[1]}),
                                make_vec({0.0, 1.0, 0.5 * x[0]})};
      },
      [](const Vec&, int i) {
        Mat j = Mat::Zero(3, 3);
        if (i == 0) {
          j(2, 1) = -0.5;
        } else {
          j(2, 0) = 0.5;
        }
        return j;
      });
}

/// R^n with the coordinate frame; the cost is the squared Euclidean distance.
inline ControlSystem euclidean_system(int n) {
  if (n < 1) throw InvalidArgument("euclidean dimension must be >= 1");
  return make_control_affine_system(
      "euclidean" + std::to_string(n), n, n,
      [n](const Vec&) {
        std::vector<Vec> xs;
        xs.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) xs.push_back(Vec::Unit(n, i));
        return xs;
      },
      [n](const Vec&, int) { return Mat(Mat::Zero(n, n)); });
}

/// Resolves "grushin", "heisenberg", "euclidean" (plane), "euclideanN".
inline ControlSystem make_system(const std::string& name) {
  if (name == "grushin") return grushin_system();
  if (name == "heisenberg") return heisenberg_system();
  if (name == "euclidean") return euclidean_system(2);
  const std::string prefix = "euclidean";
  if (name.size() > prefix.size() && name.compare(0, prefix.size(), prefix) == 0) {
    const std::string digits = name.substr(prefix.size());
    if (digits.find_first_not_of("0123456789") == std::string::npos &&
        digits.size() <= 2) {
      const int n = std::stoi(digits);
      if (n >= 1) return euclidean_system(n);
    }
  }
  throw UnknownSystem(name);
}

/// [X_i, X_j](x) = DX_j X_i - DX_i X_j.
inline Vec lie_bracket(const ControlSystem& sys, int i, int j, const Vec& x) {
  detail::check_field_index(sys, i);
  detail::check_field_index(sys, j);
  if (i == j) return Vec::Zero(sys.n);
  const auto xs = sys.fields(x);
  return sys.field_jacobian(x, j) * xs[static_cast<std::size_t>(i)] -
         sys.field_jacobian(x, i) * xs[static_cast<std::size_t>(j)];
}

/// True iff the fields and their pairwise brackets span R^n at x, with
/// singular values counted above `tol` times the largest one.
inline bool is_two_generating(const ControlSystem& sys, const Vec& x,
                              double tol = 1e-9) {
  if (!(tol > 0.0)) throw InvalidArgument("is_two_generating: tol must be > 0");
  const auto xs = sys.fields(x);
  std::vector<Vec> columns(xs.begin(), xs.end());
  for (int i = 0; i < sys.k; ++i) {
    for (int j = i + 1; j < sys.k; ++j) columns.push_back(lie_bracket(sys, i, j, x));
  }
  Mat span(sys.n, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    span.col(static_cast<Eigen::Index>(c)) = columns[c];
  }
  if (!span.allFinite()) return false;
  const Vec sv = Eigen::JacobiSVD<Mat>(span).singularValues();
  if (sv.size() == 0 || sv[0] <= 0.0) return false;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > tol * sv[0]) ++rank;
  }
  return rank == sys.n;
}

/// Largest violation of the Goh condition along a trajectory:
/// max over samples and index pairs of |<p, X_i>| and |<p, [X_i, X_j]>|.
inline double goh_residual(const ControlSystem& sys, const Trajectory& traj) {
  if (!traj.has_covectors()) {
    throw InvalidArgument("goh_residual: trajectory carries no covectors");
  }
  double worst = 0.0;
  for (std::size_t m = 0; m < traj.size(); ++m) {
    const Vec& x = traj.states[m];
    const Vec& p = traj.covectors[m];
    for (const Vec& xi : sys.fields(x)) worst = std::max(worst, std::abs(p.dot(xi)));
    for (int i = 0; i < sys.k; ++i) {
      for (int j = i + 1; j < sys.k; ++j) {
        worst = std::max(worst, std::abs(p.dot(lie_bracket(sys, i, j, x))));
      }
    }
  }
  return worst;
}

/// Axis-aligned sampling box [lo_i, hi_i].
struct Box {
  std::vector<std::pair<double, double>> sides;

  int dim() const { return static_cast<int>(sides.size()); }
};

struct ConditionCheck {
  std::string name;
  bool pass = false;
  double worst = 0.0;  // worst sampled statistic for this condition
  Vec witness_x;
  Vec witness_u;
};

/// Sampled check of the Lagrangian hypotheses that make the cost complete:
/// superlinear growth, a growth bound on dL/dx, and strong convexity in u.
struct LagrangianReport {
  ConditionCheck superlinear;
  ConditionCheck gradient_bound;
  ConditionCheck strong_convexity;

  bool all_pass() const {
    return superlinear.pass && gradient_bound.pass && strong_convexity.pass;
  }
};

namespace detail {

// Box nodes with `per_side` points per axis, corners included.
inline std::vector<Vec> box_nodes(const Box& box, int per_side) {
  const int dim = box.dim();
  std::vector<Vec> nodes;
  std::vector<int> idx(static_cast<std::size_t>(dim), 0);
  while (true) {
    Vec x(dim);
    for (int d = 0; d < dim; ++d) {
      const auto [lo, hi] = box.sides[static_cast<std::size_t>(d)];
      x[d] = lo + (hi - lo) * idx[static_cast<std::size_t>(d)] / (per_side - 1);
    }
    nodes.push_back(x);
    int d = 0;
    while (d < dim && ++idx[static_cast<std::size_t>(d)] == per_side) {
      idx[static_cast<std::size_t>(d)] = 0;
      ++d;
    }
    if (d == dim) break;
  }
  return nodes;
}

// Unit directions: coordinate axes (both signs) and the two main diagonals.
inline std::vector<Vec> control_directions(int k) {
  std::vector<Vec> dirs;
  for (int i = 0; i < k; ++i) {
    dirs.push_back(Vec::Unit(k, i));
    dirs.push_back(-Vec::Unit(k, i));
  }
  dirs.push_back(Vec::Ones(k).normalized());
  Vec alt(k);
  for (int i = 0; i < k; ++i) alt[i] = (i % 2 == 0) ? 1.0 : -1.0;
  dirs.push_back(alt.normalized());
  return dirs;
}

}  // namespace detail

inline LagrangianReport validate_lagrangian(const ControlSystem& sys,
                                            const Box& box) {
  if (box.dim() != sys.n) {
    throw InvalidArgument("validate_lagrangian: box dimension != state dimension");
  }
  for (const auto& [lo, hi] : box.sides) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || hi < lo) {
      throw InvalidArgument("validate_lagrangian: box must be bounded");
    }
  }
  const auto xs = detail::box_nodes(box, 5);
  const auto dirs = detail::control_directions(sys.k);
  std::vector<double> ladder = {0.0};
  for (double r = 0.5; r <= 1.0e6; r *= 4.0) ladder.push_back(r);
  const auto& L = sys.lagrangian;

  LagrangianReport report;

  // Condition 1: L bounded below and |u| / (L + K) -> 0.
  double min_l = kInf;
  for (const Vec& x : xs) {
    for (double r : ladder) {
      for (const Vec& d : dirs) min_l = std::min(min_l, L(x, r * d));
    }
  }
  {
    auto& c = report.superlinear;
    c.name = "superlinear growth";
    const double K = 1.0 + std::max(0.0, -min_l);
    double previous = kInf;
    bool decreasing_tail = true;
    for (std::size_t r = 1; r < ladder.size(); ++r) {
      double rung_worst = 0.0;
      for (const Vec& x : xs) {
        for (const Vec& d : dirs) {
          const Vec u = ladder[r] * d;
          const double ratio = u.norm() / (L(x, u) + K);
          if (ratio > rung_worst) {
            rung_worst = ratio;
            if (r + 1 == ladder.size()) {
              c.witness_x = x;
              c.witness_u = u;
            }
          }
        }
      }
      if (r + 3 >= ladder.size() && rung_worst > previous) decreasing_tail = false;
      previous = rung_worst;
    }
    c.worst = previous;
    c.pass = std::isfinite(min_l) && decreasing_tail && previous <= 1e-3;
  }

  // Condition 2: |dL/dx| <= a (L + |u|) + b, sampled with a = b.
  {
    auto& c = report.gradient_bound;
    c.name = "state-gradient bound";
    double top = 0.0;
    double lower = 0.0;
    bool finite = true;
    for (std::size_t r = 0; r < ladder.size(); ++r) {
      for (const Vec& x : xs) {
        for (const Vec& d : dirs) {
          const Vec u = ladder[r] * d;
          const Vec grad = central_jacobian(
              [&](const Vec& y) { return make_vec({L(y, u)}); }, x).row(0).transpose();
          const double ratio = grad.norm() / (L(x, u) - min_l + u.norm() + 1.0);
          if (!std::isfinite(ratio)) finite = false;
          if (ratio > c.worst) {
            c.worst = ratio;
            c.witness_x = x;
            c.witness_u = u;
          }
          if (r + 1 == ladder.size()) {
            top = std::max(top, ratio);
          } else {
            lower = std::max(lower, ratio);
          }
        }
      }
    }
    c.pass = finite && top <= 2.0 * lower + 1e-9;
  }

  // Condition 3: strong convexity of u -> L(x,u), via the smallest Hessian
  // eigenvalue on moderate controls (large |u| only adds roundoff).
  {
    auto& c = report.strong_convexity;
    c.name = "strong convexity in u";
    c.worst = kInf;
    for (const Vec& x : xs) {
      for (double r : ladder) {
        if (r > 1.0e3) break;
        for (const Vec& d : dirs) {
          const Vec u = r * d;
          const double h = 1e-4 * (1.0 + u.norm());
          Mat hess(sys.k, sys.k);
          for (int a = 0; a < sys.k; ++a) {
            for (int b = a; b < sys.k; ++b) {
              const Vec ea = h * Vec::Unit(sys.k, a);
              const Vec eb = h * Vec::Unit(sys.k, b);
              const double v = (L(x, u + ea + eb) - L(x, u + ea - eb) -
                                L(x, u - ea + eb) + L(x, u - ea - eb)) /
                               (4.0 * h * h);
              hess(a, b) = v;
              hess(b, a) = v;
            }
          }
          const double eig =
              Eigen::SelfAdjointEigenSolver<Mat>(hess).eigenvalues().minCoeff();
          if (eig < c.worst) {
            c.worst = eig;
            c.witness_x = x;
            c.witness_u = u;
          }
        }
      }
    }
    c.pass = c.worst >= 1e-6;
  }
  return report;
}

}  // namespace subot

#endif  // SUBOT_GEOMETRY_HPP_

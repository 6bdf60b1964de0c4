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

// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit if any
// fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "subot/cli.hpp"
#include "subot/monge.hpp"

namespace {

using namespace subot;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double max_norm(const Vec& v) { return v.cwiseAbs().maxCoeff(); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Outcome criterion_1() {
  const auto sys = grushin_system();
  const Vec o = Vec::Zero(2);
  const double d_line = grushin_distance_origin(make_vec({1.0, 0.0}));
  const double d_up = grushin_distance_origin(make_vec({0.0, 1.0}));
  const double s_line = std::sqrt(connect(sys, o, make_vec({1.0, 0.0})).cost);
  const double s_up = std::sqrt(connect(sys, o, make_vec({0.0, 1.0})).cost);
  const double root = std::sqrt(2.0 * kPi);
  Outcome r;
  r.pass = std::abs(d_line - 1.0) <= 1e-9 && std::abs(d_up - root) <= 1e-6 &&
           std::abs(s_line - 1.0) <= 1e-6 && std::abs(s_up - root) <= 1e-6;
  r.detail = "closed form |d-1|=" + fmt(std::abs(d_line - 1.0)) +
             " |d-sqrt(2pi)|=" + fmt(std::abs(d_up - root)) +
             "; shooting |d-1|=" + fmt(std::abs(s_line - 1.0)) +
             " |d-sqrt(2pi)|=" + fmt(std::abs(s_up - root));
  return r;
}

Outcome criterion_2() {
  const auto sys = grushin_system();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ua(-2.0, 2.0), ub(-3.0, 3.0), ud(-1.0, 1.0);
  double worst = 0.0;
  for (int s = 0; s < 100; ++s) {
    const double a = ua(rng), b = ub(rng), delta = ud(rng);
    const auto end = flow_endpoint(sys, {make_vec({0.0, delta}), make_vec({a, b})}, 1.0);
    worst = std::max(worst, max_norm(end.x - grushin::geodesic(a, b, delta, 1.0)));
  }
  double seam = 0.0;
  for (double a : {-1.5, 0.3, 1.0, 2.0}) {
    for (double t : {0.25, 0.5, 1.0}) {
      for (double sign : {1.0, -1.0}) {
        const double b = sign * grushin::kSeriesThreshold;
        seam = std::max(seam, max_norm(grushin::geodesic(a, std::nextafter(b, 0.0), 0.2, t) -
                                       grushin::geodesic(a, b, 0.2, t)));
      }
    }
  }
  return {worst <= 1e-7 && seam <= 1e-10,
          "max endpoint error " + fmt(worst) + " over 100 (a,b); seam jump " + fmt(seam)};
}

Outcome criterion_3() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double worst = 0.0;
  for (const auto& sys : {grushin_system(), heisenberg_system(), euclidean_system(2)}) {
    for (int s = 0; s < 50; ++s) {
      Vec x(sys.n), p(sys.n);
      for (int i = 0; i < sys.n; ++i) x[i] = unit(rng), p[i] = unit(rng);
      p *= 2.0 * std::abs(unit(rng)) / std::max(1.0, p.norm());
      worst = std::max(worst, energy_drift(ham_flow(sys, {x, p}, 1.0, 1e-3)));
    }
  }
  // At step 1e-3 the drift sits at roundoff, so the order is read off steps
  // where truncation dominates. The Euclidean flow is integrated exactly.
  double ratio = kInf;
  for (const auto& sys : {grushin_system(), heisenberg_system()}) {
    const PhasePoint z{Vec::Constant(sys.n, 0.4), Vec::LinSpaced(sys.n, 1.5, -1.0)};
    const double coarse = energy_drift(ham_flow(sys, z, 1.0, 0.05));
    const double fine = energy_drift(ham_flow(sys, z, 1.0, 0.025));
    ratio = std::min(ratio, fine > 0.0 ? coarse / fine : 0.0);
  }
  return {worst <= 1e-8 && ratio >= 8.0,
          "max drift " + fmt(worst) + " on 150 starts; min halving ratio " + fmt(ratio)};
}

Outcome criterion_4() {
  const auto sys = grushin_system();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double adjoint = 0.0;
  double excess = -kInf;  // max condition residual minus grid slack
  bool in_grid = true;
  for (int s = 0; s < 20; ++s) {
    const Vec x = make_vec({u(rng), u(rng)});
    const Vec y = make_vec({u(rng), u(rng)});
    const auto sol = connect(sys, x, y);
    double umax = 0.0;
    for (const Vec& c : sol.trajectory.controls) umax = std::max(umax, max_norm(c));
    const auto report = pmp_check(sys, sol.trajectory,
                                  make_control_grid(sys.k, std::max(1.0, 1.25 * umax), 41));
    adjoint = std::max(adjoint, report.adjoint_residual);
    excess = std::max(excess, report.max_condition_residual - report.grid_slack);
    in_grid = in_grid && report.controls_in_grid;
  }
  auto bad = ham_flow(sys, {make_vec({0.0, 0.0}), make_vec({1.0, 1.0})}, 1.0);
  for (std::size_t m = bad.size() / 2; m < bad.size(); ++m) {
    bad.covectors[m] *= 2.0;
    bad.controls[m] = sys.maximizing_control(bad.states[m], bad.covectors[m]);
  }
  const double corrupted = pmp_check(sys, bad, make_control_grid(2, 4.0, 41)).adjoint_residual;
  return {adjoint <= 1e-6 && excess <= 1e-6 && in_grid && corrupted > 0.1,
          "20 geodesics: adjoint " + fmt(adjoint) + ", condition - slack " + fmt(excess) +
              "; corrupted control " + fmt(corrupted)};
}

DiscreteMeasure random_measure(std::mt19937_64& rng, std::size_t size) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DiscreteMeasure m;
  for (std::size_t i = 0; i < size; ++i) {
    m.points.push_back(make_vec({u(rng), u(rng)}));
    m.weights.push_back(0.05 + u(rng));
  }
  const double total = std::accumulate(m.weights.begin(), m.weights.end(), 0.0);
  for (double& w : m.weights) w /= total;
  double rest = 1.0;
  for (std::size_t i = 0; i + 1 < size; ++i) rest -= m.weights[i];
  m.weights.back() = rest;
  return m;
}

Mat random_cost(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::uniform_real_distribution<double> u(0.0, 10.0);
  Mat c(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) c(i, j) = u(rng);
  }
  return c;
}

Outcome criterion_5() {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> size(1, 64);
  double gap = 0.0;
  std::size_t violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto mu = random_measure(rng, static_cast<std::size_t>(size(rng)));
    const auto nu = random_measure(rng, static_cast<std::size_t>(size(rng)));
    const Mat c = random_cost(rng, static_cast<Eigen::Index>(mu.size()),
                              static_cast<Eigen::Index>(nu.size()));
    const auto [plan, duals] = solve_kantorovich(c, mu, nu);
    gap = std::max(gap, std::abs(plan.value - duals.value(mu, nu)) / (1.0 + std::abs(plan.value)));
    violations += support_slackness(plan, duals, c).size();
  }
  // Uniform n x n instances with n + n <= 12: optimum = best permutation.
  double enum_err = 0.0;
  int instances = 0;
  for (std::size_t n = 1; n <= 6; ++n) {
    std::vector<Vec> pts;
    for (std::size_t i = 0; i < n; ++i) pts.push_back(make_vec({static_cast<double>(i)}));
    const auto mu = DiscreteMeasure::uniform(pts);
    for (int trial = 0; trial < 50; ++trial, ++instances) {
      const Mat c = random_cost(rng, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      std::vector<int> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      double best = kInf;
      do {
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) v += c(static_cast<Eigen::Index>(i), perm[i]);
        best = std::min(best, v / static_cast<double>(n));
      } while (std::next_permutation(perm.begin(), perm.end()));
      const auto [plan, duals] = solve_kantorovich(c, mu, mu);
      enum_err = std::max(enum_err, std::abs(plan.value - best));
      violations += support_slackness(plan, duals, c).size();
    }
  }
  return {gap <= 1e-9 && enum_err <= 1e-12 && violations == 0,
          "relative gap " + fmt(gap) + " on 100 instances; enumeration error " + fmt(enum_err) +
              " on " + std::to_string(instances) + " instances; slackness violations " +
              std::to_string(violations)};
}

Outcome criterion_6() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::uniform_int_distribution<int> size(1, 20);
  double idem = 0.0;
  bool concave = true;
  double excess = -kInf;
  for (int trial = 0; trial < 200; ++trial) {
    const int m = size(rng), n = size(rng);
    const Mat c = random_cost(rng, m, n);
    Vec f(m), g(n);
    for (int i = 0; i < m; ++i) f[i] = u(rng);
    for (int j = 0; j < n; ++j) g[j] = u(rng);
    const Vec f1 = c1_transform(f, c);
    idem = std::max(idem, max_norm(c1_transform(c2_transform(f1, c), c) - f1));
    concave = concave && is_c_concave(c2_transform(g, c), c);
    const auto mu = random_measure(rng, static_cast<std::size_t>(m));
    const auto nu = random_measure(rng, static_cast<std::size_t>(n));
    const double optimum = solve_kantorovich(c, mu, nu).first.value;
    excess = std::max(excess, DualPotentials{f, f1}.value(mu, nu) - optimum);
  }
  return {idem <= 1e-12 && concave && excess <= 1e-12,
          "c1 c2 c1 - c1 " + fmt(idem) + "; c2-images c-concave " + (concave ? "yes" : "no") +
              "; max dual - optimum " + fmt(excess)};
}

// Translate of a 10x10 grid with spacing 1/8; potential from LP duals.
struct TranslateProblem {
  ControlSystem sys = euclidean_system(2);
  Vec shift = make_vec({0.25, 0.125});
  DiscreteMeasure mu, nu;
  double lp_value = 0.0;
  PotentialField field;

  TranslateProblem() {
    std::vector<Vec> src, dst;
    for (int i = 0; i < 10; ++i) {
      for (int j = 0; j < 10; ++j) {
        src.push_back(make_vec({i / 8.0, j / 8.0}));
        dst.push_back(src.back() + shift);
      }
    }
    mu = DiscreteMeasure::uniform(src);
    nu = DiscreteMeasure::uniform(dst);
    const Mat c = cost_matrix(CostBackend::kClosedForm, sys, mu, nu);
    const auto [plan, duals] = solve_kantorovich(c, mu, nu);
    lp_value = plan.value;
    const auto centered = center_duals(plan, duals, c);
    field = potential_from_duals(CostBackend::kClosedForm, sys, Lattice::around(src, 1.0 / 32), nu,
                                 centered.g);
  }
};

struct GrushinDeltaProblem {
  ControlSystem sys = grushin_system();
  DiscreteMeasure mu = cli::detail::default_cloud();
  DiscreteMeasure nu = DiscreteMeasure::dirac(make_vec({0.0, 0.0}));
  std::vector<double> times = {0.0, 0.25, 0.5, 0.75, 1.0};

  PotentialField field(double h) const {
    return PotentialField::sample(Lattice::around(mu.points, h), [](const Vec& x) {
      const double d = grushin::distance_from_axis(x, 0.0);
      return 0.5 * d * d;
    });
  }

  double closed_form_gap(double h) const {
    const auto frames = displacement_interpolation(sys, field(h), mu, times);
    double gap = 0.0;
    for (std::size_t m = 0; m < times.size(); ++m) {
      for (std::size_t i = 0; i < mu.size(); ++i) {
        const Vec& x = mu.points[i];
        gap = std::max(gap, max_norm(frames.clouds[m][i] -
                                     grushin_interpolation_to_delta(x[0], x[1], 0.0, times[m])));
      }
    }
    return gap;
  }
};

Outcome criterion_7() {
  const TranslateProblem tp;
  double map_err = 0.0;
  for (const Vec& x : tp.mu.points) {
    map_err = std::max(map_err, max_norm(monge_map(tp.sys, tp.field, x, 1.0) - (x + tp.shift)));
  }
  const double value_err = std::abs(tp.lp_value - tp.shift.squaredNorm());

  const GrushinDeltaProblem gp;
  const double coarse = gp.closed_form_gap(1.0 / 64);
  const double fine = gp.closed_form_gap(1.0 / 128);
  return {map_err <= 1e-6 && value_err <= 1e-6 && fine <= 1e-4 && coarse / fine >= 3.0,
          "translate map error " + fmt(map_err) + ", LP value error " + fmt(value_err) +
              "; grushin gap h=1/64 " + fmt(coarse) + ", h=1/128 " + fmt(fine) + " (shrink " +
              fmt(coarse / fine) + "x)"};
}

Outcome criterion_8() {
  const GrushinDeltaProblem gp;
  const double h = 1.0 / 128;
  const double residual = pushforward_check(gp.sys, gp.field(h), gp.mu, gp.nu);
  const TranslateProblem tp;
  const double exact = pushforward_check(tp.sys, tp.field, tp.mu, tp.nu);
  return {residual <= 10.0 * h * h && exact <= 1e-10,
          "grushin-to-delta residual " + fmt(residual) + " (bound " + fmt(10.0 * h * h) +
              "); translate residual " + fmt(exact)};
}

Outcome criterion_9() {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int generating = 0;
  for (const auto& sys : {grushin_system(), heisenberg_system()}) {
    for (int s = 0; s < 50; ++s) {
      Vec x(sys.n);
      for (int i = 0; i < sys.n; ++i) x[i] = u(rng);
      generating += is_two_generating(sys, x) ? 1 : 0;
    }
  }
  const auto sys = grushin_system();
  double margin = kInf;
  double boundary = 0.0;
  for (int s = 0; s < 20; ++s) {
    const Vec x = make_vec({u(rng), u(rng)});
    const Vec y = make_vec({u(rng), u(rng)});
    const auto bf = brute_force_cost(sys, x, y, 4, 9, 4.0);
    margin = std::min(margin, bf.cost - connect(sys, x, y).cost);
    boundary = std::max(boundary, bf.boundary_error);
  }
  return {generating == 100 && margin >= -1e-6 && boundary <= 1e-8,
          "2-generating at " + std::to_string(generating) +
              "/100 points; min brute force - shooting " + fmt(margin) +
              " on 20 pairs (brute force boundary error " + fmt(boundary) + ")"};
}

Outcome criterion_10() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "subot_acceptance_interpolate";
  fs::remove_all(dir);
  cli::RunConfig c;
  c.command = "interpolate";
  c.system = "grushin";
  c.delta_target = {0.0, 0.0};
  c.out_dir = dir.string();
  std::ostringstream out, err;
  const int code = cli::run(c, out, err);
  if (code != cli::kExitOk) return {false, "interpolate exited with " + std::to_string(code)};

  std::ifstream svg_in(dir / "interpolation.svg");
  std::stringstream svg;
  svg << svg_in.rdbuf();
  const std::string text = svg.str();
  std::size_t polylines = 0;
  for (auto pos = text.find("<polyline"); pos != std::string::npos;
       pos = text.find("<polyline", pos + 1)) {
    ++polylines;
  }
  std::ifstream summary_in(dir / "interpolation.json");
  const auto summary = nlohmann::json::parse(summary_in);
  const double spread = summary["endpoint_spread"].get<double>();
  const std::size_t points = summary["points"].get<std::size_t>();
  fs::remove_all(dir);
  return {polylines == points && points == 10 && spread <= 1e-4,
          std::to_string(polylines) + " polylines for " + std::to_string(points) +
              " points; endpoint spread " + fmt(spread)};
}

}  // namespace

int main() {
  const std::vector<std::function<Outcome()>> criteria = {
      criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
      criterion_6, criterion_7, criterion_8, criterion_9, criterion_10};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome r;
    try {
      r = criteria[i]();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %zu: %s [%.1fs]\n", r.pass ? "PASS" : "FAIL", i + 1,
                r.detail.c_str(), secs);
    std::fflush(stdout);
    failures += r.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}

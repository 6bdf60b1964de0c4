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

// Command runner behind the `subot` tool. Argument parsing lives in tools/;
// this header takes a resolved RunConfig, writes artifacts under
// config.out_dir and returns the process exit status.

#ifndef SUBOT_CLI_HPP_
#define SUBOT_CLI_HPP_

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "subot/core.hpp"
#include "subot/geometry.hpp"
#include "subot/hamiltonian.hpp"
#include "subot/io.hpp"
#include "subot/monge.hpp"
#include "subot/ot.hpp"
#include "subot/shooting.hpp"

namespace subot::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitBadConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kManifestVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

struct RunConfig {
  std::string command;
  std::string system = "grushin";
  std::string out_dir = "subot-out";

  // Points and covectors given on the command line.
  std::vector<double> from;
  std::vector<double> to;
  std::vector<double> p0;
  std::vector<double> at;
  std::vector<double> delta_target;

  // Input files.
  std::string mu_path;
  std::string nu_path;

  // Numerics.
  double step = kDefaultStep;
  double tol = 1e-8;
  double t_final = 1.0;
  int starts = 24;
  std::uint64_t seed = 0;
  std::string backend = "auto";  // auto | closed-form | shooting

  // distance --table lo:hi:n,...
  std::string table;

  // interpolate
  std::vector<double> times = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> grid;  // lo1,hi1,...,lon,hin,h or just h
  double grid_h = 1.0 / 64.0;
  int path_samples = 64;

  // pmp-check
  int control_points = 41;
  double control_radius = 2.0;
  std::string pmp_form = "maximized";  // maximized | bolza-min

  // brackets
  int samples = 0;

  // validate-lagrangian: lo1,hi1,...
  std::vector<double> box;
};

inline nlohmann::json to_json(const RunConfig& c) {
  return {
      {"command", c.command},   {"system", c.system},
      {"out_dir", c.out_dir},   {"from", c.from},
      {"to", c.to},             {"p0", c.p0},
      {"at", c.at},             {"delta_target", c.delta_target},
      {"mu", c.mu_path},        {"nu", c.nu_path},
      {"step", c.step},         {"tol", c.tol},
      {"t_final", c.t_final},   {"starts", c.starts},
      {"seed", c.seed},         {"backend", c.backend},
      {"table", c.table},       {"times", c.times},
      {"grid", c.grid},         {"grid_h", c.grid_h},
      {"path_samples", c.path_samples},
      {"control_points", c.control_points},
      {"control_radius", c.control_radius},
      {"pmp_form", c.pmp_form}, {"samples", c.samples},
      {"box", c.box},
  };
}

namespace detail {

inline Vec point_arg(const std::vector<double>& v, int n, const char* flag) {
  if (static_cast<int>(v.size()) != n) {
    throw InvalidArgument(std::string("--") + flag + " needs " + std::to_string(n) +
                          " coordinates, got " + std::to_string(v.size()));
  }
  return to_vec(v);
}

inline void check_config(const RunConfig& c) {
  if (!(c.step > 0.0) || !(c.tol > 0.0) || !(c.t_final > 0.0) || c.starts < 1 ||
      !(c.grid_h > 0.0) || c.path_samples < 2 || c.control_points < 2 ||
      !(c.control_radius > 0.0) || c.samples < 0) {
    throw InvalidArgument("numeric options must be positive");
  }
  if (c.backend != "auto" && c.backend != "closed-form" && c.backend != "shooting") {
    throw InvalidArgument("--backend must be auto, closed-form or shooting");
  }
  if (c.pmp_form != "maximized" && c.pmp_form != "bolza-min") {
    throw InvalidArgument("--form must be maximized or bolza-min");
  }
  for (const auto* path : {&c.mu_path, &c.nu_path}) {
    if (!path->empty() && !std::filesystem::exists(*path)) {
      throw InvalidArgument("input file not found: '" + *path + "'");
    }
  }
}

inline ConnectOptions connect_options(const RunConfig& c) {
  ConnectOptions o;
  o.starts = c.starts;
  o.tol = c.tol;
  o.step = c.step;
  return o;
}

// auto resolves per pair: the closed form wherever it applies.
inline double cost(const RunConfig& c, const ControlSystem& sys, const Vec& x, const Vec& y) {
  if ((x - y).norm() == 0.0) return 0.0;
  const bool closed = c.backend == "closed-form" ||
                      (c.backend == "auto" && has_closed_form(sys, x, y));
  return pair_cost(closed ? CostBackend::kClosedForm : CostBackend::kShooting, sys, x, y,
                   connect_options(c));
}

inline Mat cost_matrix(const RunConfig& c, const ControlSystem& sys, const DiscreteMeasure& mu,
                       const DiscreteMeasure& nu) {
  Mat m(static_cast<Eigen::Index>(mu.size()), static_cast<Eigen::Index>(nu.size()));
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (std::size_t j = 0; j < nu.size(); ++j) {
      try {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            cost(c, sys, mu.points[i], nu.points[j]);
      } catch (const NoConvergence& e) {
        throw NoConvergence(e.best_error(), "pair (" + std::to_string(i) + ", " +
                                                std::to_string(j) + "): " + e.what());
      }
    }
  }
  return m;
}

inline nlohmann::json vec_json(const Vec& v) { return to_std(v); }

inline nlohmann::json vecs_json(const std::vector<Vec>& vs) {
  nlohmann::json out = nlohmann::json::array();
  for (const Vec& v : vs) out.push_back(to_std(v));
  return out;
}

class Outputs {
 public:
  explicit Outputs(std::string dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  std::ofstream open(const std::string& name) {
    artifacts_.push_back(name);
    std::ofstream f(path(name));
    if (!f) throw InvalidArgument("cannot write '" + path(name) + "'");
    return f;
  }

  void write_json(const std::string& name, const nlohmann::json& j) {
    auto f = open(name);
    f << j.dump(2) << '\n';
  }

  std::string path(const std::string& name) const {
    return (std::filesystem::path(dir_) / name).string();
  }

  const std::vector<std::string>& artifacts() const { return artifacts_; }

 private:
  std::string dir_;
  std::vector<std::string> artifacts_;
};

// Ten points off the axis x1 = 0, five per half-plane, used by `interpolate`
// when no --mu file is given. Coordinates are dyadic so the points sit on
// lattice nodes for any h = 2^-m <= 1/16.
inline DiscreteMeasure default_cloud() {
  std::vector<Vec> pts;
  for (int side : {1, -1}) {
    for (int j = 0; j < 5; ++j) {
      pts.push_back(make_vec({side * (0.5 + 0.125 * j), side * (-0.375 + 0.1875 * j)}));
    }
  }
  return DiscreteMeasure::uniform(std::move(pts));
}

// "lo:hi:n,lo:hi:n" -> lattice points in row-major order (last axis fastest).
inline std::vector<Vec> table_points(const std::string& text, int n) {
  const auto axes = io::split(text, ',');
  if (static_cast<int>(axes.size()) != n) {
    throw InvalidArgument("--table needs one lo:hi:count per coordinate");
  }
  std::vector<std::vector<double>> ticks;
  for (const auto& axis : axes) {
    const auto parts = io::split(axis, ':');
    if (parts.size() != 3) throw InvalidArgument("--table axis must be lo:hi:count");
    const double lo = io::parse_list(parts[0]).at(0);
    const double hi = io::parse_list(parts[1]).at(0);
    const double count = io::parse_list(parts[2]).at(0);
    if (count < 1 || count != std::floor(count) || count > 1e4 || (count > 1 && !(hi > lo))) {
      throw InvalidArgument("--table axis '" + axis + "' is malformed");
    }
    std::vector<double> t;
    const int m = static_cast<int>(count);
    for (int i = 0; i < m; ++i) t.push_back(m == 1 ? lo : lo + (hi - lo) * i / (m - 1));
    ticks.push_back(t);
  }
  std::vector<Vec> pts;
  std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
  while (true) {
    Vec p(n);
    for (int d = 0; d < n; ++d) p[d] = ticks[static_cast<std::size_t>(d)][idx[static_cast<std::size_t>(d)]];
    pts.push_back(p);
    int d = n - 1;
    while (d >= 0 && ++idx[static_cast<std::size_t>(d)] == ticks[static_cast<std::size_t>(d)].size()) {
      idx[static_cast<std::size_t>(d)] = 0;
      --d;
    }
    if (d < 0) break;
  }
  return pts;
}

inline nlohmann::json run_distance(const RunConfig& c, const ControlSystem& sys, Outputs& out) {
  const Vec x = point_arg(c.from, sys.n, "from");
  if (!c.table.empty()) {
    const auto pts = table_points(c.table, sys.n);
    std::vector<double> d2(pts.size());
    parallel_for(pts.size(), [&](std::size_t i) { d2[i] = cost(c, sys, x, pts[i]); });
    auto f = out.open("distance_table.csv");
    for (int d = 0; d < sys.n; ++d) f << 'x' << d + 1 << ',';
    f << "d,d2\n";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (int d = 0; d < sys.n; ++d) f << io::format_double(pts[i][d]) << ',';
      f << io::format_double(std::sqrt(d2[i])) << ',' << io::format_double(d2[i]) << '\n';
    }
    return {{"rows", pts.size()}, {"table", out.path("distance_table.csv")}};
  }
  const Vec y = point_arg(c.to, sys.n, "to");
  nlohmann::json detail = {{"from", vec_json(x)}, {"to", vec_json(y)}};
  double d2 = 0.0;
  if ((c.backend == "auto" && has_closed_form(sys, x, y)) || c.backend == "closed-form") {
    d2 = cost(c, sys, x, y);
    detail["backend"] = "closed-form";
  } else {
    const auto sol = connect(sys, x, y, connect_options(c));
    d2 = sol.cost;
    detail["backend"] = "shooting";
    detail["p0"] = vec_json(sol.p0);
    detail["boundary_error"] = sol.boundary_error;
    detail["minimal"] = sol.minimal;
  }
  const nlohmann::json result = {{"d", std::sqrt(d2)}, {"d2", d2}};
  detail["d"] = result["d"];
  detail["d2"] = result["d2"];
  out.write_json("distance.json", detail);
  return result;
}

inline nlohmann::json run_flow(const RunConfig& c, const ControlSystem& sys, Outputs& out) {
  const Vec x = point_arg(c.from, sys.n, "from");
  const Vec p = point_arg(c.p0, sys.n, "p0");
  const Trajectory traj = ham_flow(sys, {x, p}, c.t_final, c.step);
  {
    auto f = out.open("flow.csv");
    io::write_flow_csv(f, traj);
  }
  return {{"endpoint", vec_json(traj.states.back())},
          {"covector", vec_json(traj.covectors.back())},
          {"energy", traj.energy.front()},
          {"energy_drift", energy_drift(traj)},
          {"samples", traj.size()}};
}

inline nlohmann::json run_transport(const RunConfig& c, const ControlSystem& sys, Outputs& out) {
  if (c.mu_path.empty() || c.nu_path.empty()) {
    throw InvalidArgument("transport needs --mu and --nu");
  }
  const auto mu = io::read_measure(c.mu_path);
  const auto nu = io::read_measure(c.nu_path);
  if (mu.dim() != sys.n || nu.dim() != sys.n) {
    throw InvalidArgument("measure dimension does not match system '" + sys.name + "'");
  }
  const Mat cm = cost_matrix(c, sys, mu, nu);
  const auto [plan, duals] = solve_kantorovich(cm, mu, nu);
  const auto violations = support_slackness(plan, duals, cm);
  {
    auto f = out.open("plan.csv");
    io::write_plan_csv(f, plan);
  }
  out.write_json("duals.json", {{"f", vec_json(duals.f)}, {"g", vec_json(duals.g)}});
  nlohmann::json slack = nlohmann::json::array();
  for (const auto& [i, j] : violations) slack.push_back({i, j});
  const double dual_value = duals.value(mu, nu);
  const nlohmann::json result = {{"value", plan.value},
                                 {"dual_value", dual_value},
                                 {"gap", plan.value - dual_value},
                                 {"slackness_violations", slack}};
  out.write_json("transport.json", result);
  return result;
}

inline Lattice interpolation_grid(const RunConfig& c, const std::vector<Vec>& pts, int n) {
  if (c.grid.empty()) return Lattice::around(pts, c.grid_h);
  if (c.grid.size() == 1) return Lattice::around(pts, c.grid[0]);
  if (static_cast<int>(c.grid.size()) != 2 * n + 1) {
    throw InvalidArgument("--grid takes lo1,hi1,...,lon,hin,h or just h");
  }
  Vec lo(n), hi(n);
  for (int d = 0; d < n; ++d) {
    lo[d] = c.grid[static_cast<std::size_t>(2 * d)];
    hi[d] = c.grid[static_cast<std::size_t>(2 * d + 1)];
  }
  return Lattice::covering(lo, hi, c.grid.back());
}

inline nlohmann::json run_interpolate(const RunConfig& c, const ControlSystem& sys,
                                      Outputs& out) {
  const auto mu = c.mu_path.empty() ? default_cloud() : io::read_measure(c.mu_path);
  if (mu.dim() != sys.n) throw InvalidArgument("--mu dimension does not match the system");
  if (c.delta_target.empty() == c.nu_path.empty()) {
    throw InvalidArgument("interpolate needs exactly one of --delta-target and --nu");
  }
  const auto nu = c.nu_path.empty()
                      ? DiscreteMeasure::dirac(point_arg(c.delta_target, sys.n, "delta-target"))
                      : io::read_measure(c.nu_path);
  if (nu.dim() != sys.n) throw InvalidArgument("--nu dimension does not match the system");
  for (double t : c.times) {
    if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("--times must lie in [0, 1]");
  }

  Vec g = Vec::Zero(static_cast<Eigen::Index>(nu.size()));
  nlohmann::json summary;
  if (nu.size() > 1) {
    const Mat cm = cost_matrix(c, sys, mu, nu);
    const auto [plan, duals] = solve_kantorovich(cm, mu, nu);
    g = center_duals(plan, duals, cm).g;
    summary["transport_value"] = plan.value;
  }

  const Lattice grid = interpolation_grid(c, mu.points, sys.n);
  for (const Vec& x : mu.points) {
    bool inside = true;
    const Vec up = grid.upper();
    for (int d = 0; d < sys.n; ++d) inside = inside && x[d] >= grid.lower[d] && x[d] <= up[d];
    if (!inside) throw InvalidArgument("--grid box does not contain every point of mu");
  }
  const PotentialField field = PotentialField::sample(grid, [&](const Vec& x) {
    double best = kInf;
    for (std::size_t j = 0; j < nu.size(); ++j) {
      best = std::min(best, cost(c, sys, x, nu.points[j]) - g[static_cast<Eigen::Index>(j)]);
    }
    return 0.5 * best;
  });

  const MongeOptions mopts{c.step};
  const auto frames = displacement_interpolation(sys, field, mu, c.times, mopts);
  {
    auto f = out.open("frames.csv");
    io::write_frames_csv(f, frames.times, frames.clouds);
  }

  // Dense paths for the figure: one polyline per mass point.
  std::vector<std::vector<Vec>> paths(mu.size());
  parallel_for(mu.size(), [&](std::size_t i) {
    const Trajectory traj =
        ham_flow(sys, {mu.points[i], frames.covectors[i]}, 1.0, c.step);
    const std::size_t last = traj.size() - 1;
    for (int s = 0; s <= c.path_samples; ++s) {
      paths[i].push_back(traj.states[last * static_cast<std::size_t>(s) /
                                      static_cast<std::size_t>(c.path_samples)]);
    }
  });
  {
    auto f = out.open("interpolation.svg");
    io::write_paths_svg(f, paths, "displacement interpolation, " + sys.name);
  }

  summary["points"] = mu.size();
  summary["grid_h"] = grid.spacing[0];
  summary["frames"] = frames.times.size();
  summary["pushforward_residual"] = pushforward_check(sys, field, mu, nu, 1.0, mopts);
  if (nu.size() == 1) {
    double spread = 0.0;
    for (const auto& path : paths) spread = std::max(spread, (path.back() - nu.points[0]).norm());
    summary["endpoint_spread"] = spread;
    if (sys.name == "grushin") {
      // Flow-synthesized frames against the closed-form interpolation.
      double gap = 0.0;
      for (std::size_t m = 0; m < frames.times.size(); ++m) {
        for (std::size_t i = 0; i < mu.size(); ++i) {
          const Vec& x = mu.points[i];
          const Vec exact =
              grushin_interpolation_to_delta(x[0], x[1], nu.points[0][1], frames.times[m]);
          gap = std::max(gap, (frames.clouds[m][i] - exact).cwiseAbs().maxCoeff());
        }
      }
      summary["closed_form_gap"] = gap;
    }
  }
  out.write_json("interpolation.json", summary);
  return summary;
}

inline nlohmann::json run_pmp_check(const RunConfig& c, const ControlSystem& sys, Outputs& out) {
  const Vec x = point_arg(c.from, sys.n, "from");
  Vec p;
  if (!c.p0.empty()) {
    p = point_arg(c.p0, sys.n, "p0");
  } else {
    p = connect(sys, x, point_arg(c.to, sys.n, "to"), connect_options(c)).p0;
  }
  const PmpForm form = c.pmp_form == "bolza-min" ? PmpForm::kBolzaMin : PmpForm::kMaximized;
  Trajectory traj = ham_flow(sys, {x, p}, c.t_final, c.step);
  if (form == PmpForm::kBolzaMin) {
    for (Vec& q : traj.covectors) q = -q;
  }
  const ControlGrid grid = make_control_grid(sys.k, c.control_radius, c.control_points);
  const PmpReport r = pmp_check(sys, traj, grid, form);
  const nlohmann::json result = {{"p0", vec_json(p)},
                                 {"form", c.pmp_form},
                                 {"adjoint_residual", r.adjoint_residual},
                                 {"max_condition_residual", r.max_condition_residual},
                                 {"grid_slack", r.grid_slack},
                                 {"controls_in_grid", r.controls_in_grid}};
  out.write_json("pmp.json", result);
  return result;
}

inline nlohmann::json run_brackets(const RunConfig& c, const ControlSystem& sys, Outputs& out) {
  const Vec x = c.at.empty() ? Vec::Zero(sys.n) : point_arg(c.at, sys.n, "at");
  nlohmann::json brackets = nlohmann::json::array();
  for (int i = 0; i < sys.k; ++i) {
    for (int j = i + 1; j < sys.k; ++j) {
      brackets.push_back({{"i", i + 1}, {"j", j + 1}, {"value", vec_json(lie_bracket(sys, i, j, x))}});
    }
  }
  nlohmann::json result = {{"at", vec_json(x)},
                           {"fields", vecs_json(sys.fields(x))},
                           {"brackets", brackets},
                           {"two_generating", is_two_generating(sys, x)}};
  if (c.samples > 0) {
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    int hits = 0;
    for (int s = 0; s < c.samples; ++s) {
      Vec y(sys.n);
      for (int d = 0; d < sys.n; ++d) y[d] = unit(rng);
      hits += is_two_generating(sys, y) ? 1 : 0;
    }
    result["random_samples"] = c.samples;
    result["random_two_generating"] = hits;
  }
  out.write_json("brackets.json", result);
  return result;
}

inline nlohmann::json check_json(const ConditionCheck& cc) {
  return {{"pass", cc.pass},
          {"worst", cc.worst},
          {"witness_x", vec_json(cc.witness_x)},
          {"witness_u", vec_json(cc.witness_u)}};
}

inline nlohmann::json run_validate_lagrangian(const RunConfig& c, const ControlSystem& sys,
                                              Outputs& out) {
  Box box;
  if (c.box.empty()) {
    box.sides.assign(static_cast<std::size_t>(sys.n), {-1.0, 1.0});
  } else {
    if (static_cast<int>(c.box.size()) != 2 * sys.n) {
      throw InvalidArgument("--box takes lo1,hi1,...,lon,hin");
    }
    for (int d = 0; d < sys.n; ++d) {
      box.sides.emplace_back(c.box[static_cast<std::size_t>(2 * d)],
                             c.box[static_cast<std::size_t>(2 * d + 1)]);
    }
  }
  const auto r = validate_lagrangian(sys, box);
  const nlohmann::json result = {{"superlinear", check_json(r.superlinear)},
                                 {"gradient_bound", check_json(r.gradient_bound)},
                                 {"strong_convexity", check_json(r.strong_convexity)},
                                 {"all_pass", r.all_pass()}};
  out.write_json("lagrangian.json", result);
  return result;
}

}  // namespace detail

/// Runs one subcommand. The JSON summary goes to `out`, errors to `err`.
inline int run(const RunConfig& config, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  nlohmann::json manifest = {{"spec_version", kManifestVersion},
                             {"tool", "subot"},
                             {"version", kToolVersion},
                             {"config", to_json(config)}};
  std::unique_ptr<detail::Outputs> outputs;
  auto finish = [&](const nlohmann::json& status) {
    if (!outputs) return;
    manifest["status"] = status;
    manifest["artifacts"] = outputs->artifacts();
    std::ofstream f(outputs->path("manifest.json"));
    f << manifest.dump(2) << '\n';
  };

  ControlSystem sys;
  try {
    detail::check_config(config);
    sys = make_system(config.system);
    outputs = std::make_unique<detail::Outputs>(config.out_dir);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitBadConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitBadConfig;
  }

  try {
    nlohmann::json result;
    const std::string& cmd = config.command;
    if (cmd == "distance") {
      result = detail::run_distance(config, sys, *outputs);
    } else if (cmd == "flow") {
      result = detail::run_flow(config, sys, *outputs);
    } else if (cmd == "transport") {
      result = detail::run_transport(config, sys, *outputs);
    } else if (cmd == "interpolate") {
      result = detail::run_interpolate(config, sys, *outputs);
    } else if (cmd == "pmp-check") {
      result = detail::run_pmp_check(config, sys, *outputs);
    } else if (cmd == "brackets") {
      result = detail::run_brackets(config, sys, *outputs);
    } else if (cmd == "validate-lagrangian") {
      result = detail::run_validate_lagrangian(config, sys, *outputs);
    } else {
      throw InvalidArgument("unknown subcommand '" + cmd + "'");
    }
    out << result.dump() << '\n';
    finish("ok");
    return kExitOk;
  } catch (const NumericalFailure& e) {
    nlohmann::json diag = {{"error", "numerical_failure"}, {"message", e.what()}};
    if (const auto* nc = dynamic_cast<const NoConvergence*>(&e)) {
      diag["kind"] = "no_convergence";
      diag["best_boundary_error"] = nc->best_error();
    } else if (const auto* bu = dynamic_cast<const FlowBlowUp*>(&e)) {
      diag["kind"] = "flow_blow_up";
      diag["time"] = bu->time();
    } else {
      diag["kind"] = "infeasible";
    }
    outputs->write_json("diagnostic.json", diag);
    err << diag.dump() << '\n';
    finish("numerical_failure");
    return kExitNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    finish("bad_config");
    return kExitBadConfig;
  }
}

}  // namespace subot::cli

#endif  // SUBOT_CLI_HPP_

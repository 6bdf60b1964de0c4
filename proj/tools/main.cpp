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

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "subot/cli.hpp"
#include "subot/io.hpp"

namespace {

// "1,2,3" -> vector; CLI11 would otherwise split on spaces only.
void add_list(CLI::App* app, const std::string& name, std::vector<double>& target,
              const std::string& help) {
  app->add_option_function<std::string>(
      name, [&target](const std::string& text) { target = subot::io::parse_list(text); }, help);
}

void add_common(CLI::App* app, subot::cli::RunConfig& c) {
  app->add_option("--system", c.system, "grushin | heisenberg | euclidean2 | euclidean3")
      ->capture_default_str();
  app->add_option("--out", c.out_dir, "Output directory for artifacts and manifest.json")
      ->capture_default_str();
  app->add_option("--step", c.step, "RK4 step for Hamiltonian flows")->capture_default_str();
}

void add_shooting(CLI::App* app, subot::cli::RunConfig& c) {
  app->add_option("--tol", c.tol, "Boundary tolerance for shooting")->capture_default_str();
  app->add_option("--starts", c.starts, "Multistart seeds for shooting")->capture_default_str();
  app->add_option("--backend", c.backend, "Cost backend: auto | closed-form | shooting")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  subot::cli::RunConfig c;
  CLI::App app{"Optimal transport on sub-Riemannian control systems"};
  app.set_version_flag("--version", subot::cli::kToolVersion);
  app.require_subcommand(1);

  auto* distance = app.add_subcommand("distance", "Squared distance d^2 between two points");
  add_common(distance, c);
  add_shooting(distance, c);
  add_list(distance, "--from", c.from, "Start point x1,x2[,x3]");
  add_list(distance, "--to", c.to, "End point");
  distance->add_option("--table", c.table,
                       "Distance table from --from over a lattice lo:hi:count,... (CSV)");

  auto* flow = app.add_subcommand("flow", "Integrate the Hamiltonian flow; writes flow.csv");
  add_common(flow, c);
  add_list(flow, "--from", c.from, "Initial point");
  add_list(flow, "--p0", c.p0, "Initial covector");
  flow->add_option("--t-final", c.t_final, "Final time")->capture_default_str();

  auto* transport = app.add_subcommand(
      "transport", "Discrete Kantorovich problem; writes plan.csv, duals.json, transport.json");
  add_common(transport, c);
  add_shooting(transport, c);
  transport->add_option("--mu", c.mu_path, "Source measure (CSV x1..xn,weight or JSON)");
  transport->add_option("--nu", c.nu_path, "Target measure");

  auto* interp = app.add_subcommand(
      "interpolate", "Displacement interpolation; writes frames.csv and interpolation.svg");
  add_common(interp, c);
  add_shooting(interp, c);
  interp->add_option("--mu", c.mu_path, "Source measure (default: built-in 10-point cloud)");
  interp->add_option("--nu", c.nu_path, "Target measure");
  add_list(interp, "--delta-target", c.delta_target, "Point mass target instead of --nu");
  add_list(interp, "--times", c.times, "Frame times in [0,1], e.g. 0,0.5,1");
  add_list(interp, "--grid", c.grid, "Potential grid lo1,hi1,...,lon,hin,h (or just h)");
  interp->add_option("--path-samples", c.path_samples, "Polyline samples per point in the SVG")
      ->capture_default_str();

  auto* pmp = app.add_subcommand("pmp-check", "Maximum-principle residuals along an extremal");
  add_common(pmp, c);
  add_shooting(pmp, c);
  add_list(pmp, "--from", c.from, "Initial point");
  add_list(pmp, "--p0", c.p0, "Initial covector (or give --to to shoot for it)");
  add_list(pmp, "--to", c.to, "Target point");
  pmp->add_option("--t-final", c.t_final, "Final time")->capture_default_str();
  pmp->add_option("--control-points", c.control_points, "Control grid points per axis")
      ->capture_default_str();
  pmp->add_option("--control-radius", c.control_radius, "Control grid half-width")
      ->capture_default_str();
  pmp->add_option("--form", c.pmp_form, "maximized | bolza-min")->capture_default_str();

  auto* brackets = app.add_subcommand("brackets", "Fields, Lie brackets and 2-generation");
  add_common(brackets, c);
  add_list(brackets, "--at", c.at, "Base point (default: origin)");
  brackets->add_option("--samples", c.samples, "Also test this many random points in [-1,1]^n")
      ->capture_default_str();
  brackets->add_option("--seed", c.seed, "Seed for --samples")->capture_default_str();

  auto* lagr = app.add_subcommand("validate-lagrangian", "Sampled checks on the Lagrangian");
  add_common(lagr, c);
  add_list(lagr, "--box", c.box, "Sampling box lo1,hi1,... (default [-1,1]^n)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return subot::cli::kExitBadConfig;
  } catch (const subot::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return subot::cli::kExitBadConfig;
  }
  c.command = app.get_subcommands().front()->get_name();
  return subot::cli::run(c);
}

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

// Text formats: measures in and CSV / SVG artifacts out. Numbers are written
// with 17 significant digits so every value round-trips.

#ifndef SUBOT_IO_HPP_
#define SUBOT_IO_HPP_

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "subot/core.hpp"
#include "subot/ot.hpp"
#include "subot/trajectory.hpp"

namespace subot::io {

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

/// Parses "1,2.5,-3" into a vector. Throws InvalidArgument on junk.
inline std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& raw : split(text, ',')) {
    const std::string tok = trim(raw);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (tok.empty() || used != tok.size()) {
      throw InvalidArgument("not a number: '" + tok + "' in '" + text + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw InvalidArgument("empty number list");
  return out;
}

/// Measure CSV: header x1,...,xn,weight then one row per support point.
inline DiscreteMeasure read_measure_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("measure csv: missing header");
  const auto header = split(trim(line), ',');
  if (header.size() < 2 || trim(header.back()) != "weight") {
    throw InvalidArgument("measure csv: header must be x1,...,xn,weight");
  }
  for (std::size_t d = 0; d + 1 < header.size(); ++d) {
    if (trim(header[d]) != "x" + std::to_string(d + 1)) {
      throw InvalidArgument("measure csv: header must be x1,...,xn,weight");
    }
  }
  const std::size_t n = header.size() - 1;
  DiscreteMeasure m;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto vals = parse_list(line);
    if (vals.size() != n + 1) {
      throw InvalidArgument("measure csv: row " + std::to_string(row) + " has " +
                            std::to_string(vals.size()) + " fields, expected " +
                            std::to_string(n + 1));
    }
    m.points.push_back(to_vec(std::vector<double>(vals.begin(), vals.end() - 1)));
    m.weights.push_back(vals.back());
  }
  m.validate();
  return m;
}

/// Measure JSON: {"points": [[...], ...], "weights": [...]}.
inline DiscreteMeasure measure_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("points") || !j.contains("weights")) {
    throw InvalidArgument("measure json: need \"points\" and \"weights\"");
  }
  DiscreteMeasure m;
  try {
    for (const auto& p : j.at("points")) {
      m.points.push_back(to_vec(p.get<std::vector<double>>()));
    }
    m.weights = j.at("weights").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("measure json: ") + e.what());
  }
  m.validate();
  return m;
}

/// Reads a measure by extension: .json, anything else as CSV.
inline DiscreteMeasure read_measure(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open measure file '" + path + "'");
  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument("measure json '" + path + "': " + e.what());
    }
    return measure_from_json(j);
  }
  return read_measure_csv(in);
}

inline void write_measure_csv(std::ostream& out, const DiscreteMeasure& m) {
  for (int d = 0; d < m.dim(); ++d) out << 'x' << d + 1 << ',';
  out << "weight\n";
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (Eigen::Index d = 0; d < m.points[i].size(); ++d) {
      out << format_double(m.points[i][d]) << ',';
    }
    out << format_double(m.weights[i]) << '\n';
  }
}

/// Sparse plan triplets i,j,mass for entries above `tol`.
inline void write_plan_csv(std::ostream& out, const TransportPlan& plan, double tol = 0.0) {
  out << "i,j,mass\n";
  for (Eigen::Index i = 0; i < plan.matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < plan.matrix.cols(); ++j) {
      if (plan.matrix(i, j) > tol) {
        out << i << ',' << j << ',' << format_double(plan.matrix(i, j)) << '\n';
      }
    }
  }
}

/// Frames CSV t,id,x1..xn, one row per (time, point).
inline void write_frames_csv(std::ostream& out, const std::vector<double>& times,
                             const std::vector<std::vector<Vec>>& clouds) {
  const Eigen::Index n = clouds.empty() || clouds[0].empty() ? 0 : clouds[0][0].size();
  out << "t,id";
  for (Eigen::Index d = 0; d < n; ++d) out << ",x" << d + 1;
  out << '\n';
  for (std::size_t m = 0; m < times.size(); ++m) {
    for (std::size_t i = 0; i < clouds[m].size(); ++i) {
      out << format_double(times[m]) << ',' << i;
      for (Eigen::Index d = 0; d < n; ++d) out << ',' << format_double(clouds[m][i][d]);
      out << '\n';
    }
  }
}

/// Trajectory CSV t,x1..xn,p1..pn,u1..uk,H.
inline void write_flow_csv(std::ostream& out, const Trajectory& traj) {
  const Eigen::Index n = traj.states.empty() ? 0 : traj.states[0].size();
  const Eigen::Index k = traj.controls.empty() ? 0 : traj.controls[0].size();
  out << 't';
  for (Eigen::Index d = 0; d < n; ++d) out << ",x" << d + 1;
  for (Eigen::Index d = 0; d < n; ++d) out << ",p" << d + 1;
  for (Eigen::Index d = 0; d < k; ++d) out << ",u" << d + 1;
  out << ",H\n";
  for (std::size_t m = 0; m < traj.size(); ++m) {
    out << format_double(traj.times[m]);
    for (Eigen::Index d = 0; d < n; ++d) out << ',' << format_double(traj.states[m][d]);
    for (Eigen::Index d = 0; d < n; ++d) out << ',' << format_double(traj.covectors[m][d]);
    for (Eigen::Index d = 0; d < k; ++d) out << ',' << format_double(traj.controls[m][d]);
    out << ',' << format_double(traj.energy[m]) << '\n';
  }
}

/// SVG overlay of 2-D paths: one polyline per path, a hollow marker at each
/// start and a filled marker at each end. Only the first two coordinates are
/// drawn. The viewBox is the data bounds grown by 5% on each side.
inline void write_paths_svg(std::ostream& out, const std::vector<std::vector<Vec>>& paths,
                            const std::string& title = {}) {
  double lo_x = kInf, lo_y = kInf, hi_x = -kInf, hi_y = -kInf;
  for (const auto& path : paths) {
    for (const Vec& p : path) {
      lo_x = std::min(lo_x, p[0]);
      hi_x = std::max(hi_x, p[0]);
      lo_y = std::min(lo_y, p[1]);
      hi_y = std::max(hi_y, p[1]);
    }
  }
  if (!std::isfinite(lo_x)) lo_x = lo_y = -1.0, hi_x = hi_y = 1.0;
  double w = hi_x - lo_x;
  double h = hi_y - lo_y;
  const double span = std::max({w, h, 1e-9});
  if (w < 1e-3 * span) w = 1e-3 * span;
  if (h < 1e-3 * span) h = 1e-3 * span;
  const double x0 = lo_x - 0.05 * w;
  const double y0 = lo_y - 0.05 * h;
  const double vw = 1.1 * w;
  const double vh = 1.1 * h;
  const double stroke = 0.004 * std::max(vw, vh);
  const double r = 2.0 * stroke;

  // y grows downward in SVG; flip so the plot reads like the plane.
  auto X = [&](double x) { return format_double(x); };
  auto Y = [&](double y) { return format_double(y0 + vh - (y - y0)); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << format_double(x0) << ' '
      << format_double(y0) << ' ' << format_double(vw) << ' ' << format_double(vh)
      << "\" width=\"640\" height=\"" << static_cast<int>(640.0 * vh / vw) << "\">\n";
  if (!title.empty()) out << "  <title>" << title << "</title>\n";
  out << "  <rect x=\"" << format_double(x0) << "\" y=\"" << format_double(y0)
      << "\" width=\"" << format_double(vw) << "\" height=\"" << format_double(vh)
      << "\" fill=\"white\"/>\n";
  for (const auto& path : paths) {
    if (path.empty()) continue;
    out << "  <polyline fill=\"none\" stroke=\"#1f4e79\" stroke-width=\"" << format_double(stroke)
        << "\" points=\"";
    for (std::size_t m = 0; m < path.size(); ++m) {
      if (m) out << ' ';
      out << X(path[m][0]) << ',' << Y(path[m][1]);
    }
    out << "\"/>\n";
    out << "  <circle cx=\"" << X(path.front()[0]) << "\" cy=\"" << Y(path.front()[1])
        << "\" r=\"" << format_double(r) << "\" fill=\"white\" stroke=\"#1f4e79\" stroke-width=\""
        << format_double(stroke) << "\"/>\n";
    out << "  <circle cx=\"" << X(path.back()[0]) << "\" cy=\"" << Y(path.back()[1])
        << "\" r=\"" << format_double(r) << "\" fill=\"#c0392b\"/>\n";
  }
  out << "</svg>\n";
}

}  // namespace subot::io

#endif  // SUBOT_IO_HPP_

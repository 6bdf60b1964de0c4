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

#ifndef SUBOT_TRAJECTORY_HPP_
#define SUBOT_TRAJECTORY_HPP_

#include <cstddef>
#include <vector>

#include "subot/core.hpp"

namespace subot {

/// A covector p attached to a base point x, i.e. a point of T*M.
struct PhasePoint {
  Vec x;
  Vec p;

  bool finite() const { return x.allFinite() && p.allFinite(); }
};

/// Time-sampled extremal. All arrays share one length; times start at 0 and
/// increase strictly.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> covectors;
  std::vector<Vec> controls;
  std::vector<double> energy;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }

  PhasePoint front() const { return {states.front(), covectors.front()}; }
  PhasePoint back() const { return {states.back(), covectors.back()}; }

  bool has_covectors() const {
    return !covectors.empty() && covectors.size() == states.size();
  }
};

}  // namespace subot

#endif  // SUBOT_TRAJECTORY_HPP_

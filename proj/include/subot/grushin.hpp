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

// Closed forms for the Grushin plane, H = 1/2 (p1^2 + x1^2 p2^2).
//
// The normal geodesic leaving (0, delta) with covector (a, b) is
//   x1(t) = (a/b) sin(bt),  x2(t) = delta + a^2/(4b^2) (2bt - sin 2bt),
// degenerating to x1 = at, x2 = delta when b = 0. It minimizes length on
// |t| <= pi/|b|.

#ifndef SUBOT_GRUSHIN_HPP_
#define SUBOT_GRUSHIN_HPP_

#include <algorithm>
#include <cmath>

#include "subot/core.hpp"

namespace subot::grushin {

/// Below this |b| the geodesic is evaluated from its Taylor series.
inline constexpr double kSeriesThreshold = 1e-4;

/// s - sin(s) without cancellation for small s.
inline double s_minus_sin(double s) {
  if (std::abs(s) > 0.5) return s - std::sin(s);
  // s^3/3! - s^5/5! + ... ; 12 terms reach machine precision for |s| <= 0.5.
  const double s2 = s * s;
  double term = s * s2 / 6.0;
  double sum = term;
  for (int k = 2; k < 12; ++k) {
    term *= -s2 / static_cast<double>((2 * k) * (2 * k + 1));
    sum += term;
  }
  return sum;
}

/// Geodesic point at time t from (0, delta) with initial covector (a, b).
inline Vec geodesic(double a, double b, double delta, double t) {
  if (std::abs(b) < kSeriesThreshold) {
    const double bt2 = (b * t) * (b * t);
    const double t3 = t * t * t;
    // Fifth order in b.
    const double x1 = a * t * (1.0 - bt2 / 6.0 + bt2 * bt2 / 120.0);
    const double x2 = delta + a * a * b * t3 * (1.0 / 3.0 - bt2 / 15.0 +
                                                2.0 * bt2 * bt2 / 315.0);
    return make_vec({x1, x2});
  }
  const double x1 = (a / b) * std::sin(b * t);
  const double x2 = delta + a * a / (4.0 * b * b) * s_minus_sin(2.0 * b * t);
  return make_vec({x1, x2});
}

/// f(b) = (2b - sin 2b) / (4 sin^2 b) on (-pi, pi): odd, increasing, and
/// unbounded at the ends. f(b) = (x2 - delta) / x1^2 at the endpoint.
inline double ratio_function(double b) {
  if (std::abs(b) < 1e-3) {
    const double b2 = b * b;
    return b / 3.0 + 2.0 * b * b2 / 45.0 + 2.0 * b * b2 * b2 / 315.0;
  }
  const double s = std::sin(b);
  return s_minus_sin(2.0 * b) / (4.0 * s * s);
}

/// Inverse of ratio_function by bisection, carried to full double precision
/// (well past the 1e-12 bracket the distance needs).
inline double inverse_ratio(double r) {
  if (r == 0.0) return 0.0;
  if (std::isinf(r)) return r > 0 ? kPi : -kPi;
  double lo = -kPi;
  double hi = kPi;
  for (int it = 0;
       it < 400 && hi - lo > 2e-16 * std::max(std::abs(lo), std::abs(hi));
       ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ratio_function(mid) < r) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Initial covector (a, b) of the minimizing unit-time geodesic from (0, delta)
/// to `target`. On the axis x1 = 0 the limiting b = +-pi geodesic is used with
/// a > 0; the sign of b follows x2 - delta.
struct Covector {
  double a = 0.0;
  double b = 0.0;
};

inline Covector covector_to(const Vec& target, double delta) {
  const double x1 = target[0];
  const double dx2 = target[1] - delta;
  if (x1 == 0.0) {
    if (dx2 == 0.0) return {};
    return {std::sqrt(2.0 * kPi * std::abs(dx2)), dx2 > 0 ? kPi : -kPi};
  }
  const double b = inverse_ratio(dx2 / (x1 * x1));
  double a;
  if (std::abs(b) < 0.5 * kPi) {
    a = (std::abs(b) < 1e-300) ? x1 : b * x1 / std::sin(b);
  } else {
    // x1 = (a/b) sin b loses precision near |b| = pi; use the x2 relation.
    a = std::copysign(std::sqrt(4.0 * b * b * dx2 / s_minus_sin(2.0 * b)), x1);
  }
  return {a, b};
}

/// Sub-Riemannian distance from (0, delta) to `target`; it equals |a| for the
/// minimizing covector since d = sqrt(2H) and H = a^2/2 on the axis.
inline double distance_from_axis(const Vec& target, double delta) {
  if (target.size() != 2) throw InvalidArgument("grushin: target must be 2-D");
  return std::abs(covector_to(target, delta).a);
}

}  // namespace subot::grushin

#endif  // SUBOT_GRUSHIN_HPP_

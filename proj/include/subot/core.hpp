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

#ifndef SUBOT_CORE_HPP_
#define SUBOT_CORE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <iterator>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace subot {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments: shapes, ranges, unknown names.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed: blow-up, non-convergence, infeasibility.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class UnknownSystem : public InvalidArgument {
 public:
  explicit UnknownSystem(const std::string& name)
      : InvalidArgument("unknown control system '" + name + "'") {}
};

class FlowBlowUp : public NumericalFailure {
 public:
  FlowBlowUp(double time, const std::string& what)
      : NumericalFailure(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

class NoConvergence : public NumericalFailure {
 public:
  NoConvergence(double best_error, const std::string& what)
      : NumericalFailure(what), best_error_(best_error) {}
  double best_error() const { return best_error_; }

 private:
  double best_error_;
};

class InfeasibleProblem : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

inline Vec make_vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

inline Vec to_vec(const std::vector<double>& values) {
  return Eigen::Map<const Vec>(values.data(),
                               static_cast<Eigen::Index>(values.size()));
}

inline std::vector<double> to_std(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

/// Central-difference Jacobian of a vector map.
inline Mat central_jacobian(const std::function<Vec(const Vec&)>& fn,
                            const Vec& x, double rel_step = 1e-6) {
  const Vec f0 = fn(x);
  Mat jac(f0.size(), x.size());
  Vec probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = rel_step * (1.0 + std::abs(x[j]));
    probe[j] = x[j] + h;
    const Vec fp = fn(probe);
    probe[j] = x[j] - h;
    const Vec fm = fn(probe);
    probe[j] = x[j];
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

/// Radical-inverse low-discrepancy sequence (Halton) in [0,1)^dim.
inline std::vector<double> halton_point(std::size_t index, int dim) {
  static constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19,
                                    23, 29, 31, 37, 41, 43, 47, 53};
  if (dim > static_cast<int>(std::size(kPrimes))) {
    throw InvalidArgument("halton_point: dimension too large");
  }
  std::vector<double> out(static_cast<std::size_t>(dim));
  for (int d = 0; d < dim; ++d) {
    const int base = kPrimes[d];
    double f = 1.0;
    double r = 0.0;
    std::size_t i = index + 1;
    while (i > 0) {
      f /= base;
      r += f * static_cast<double>(i % static_cast<std::size_t>(base));
      i /= static_cast<std::size_t>(base);
    }
    out[static_cast<std::size_t>(d)] = r;
  }
  return out;
}

/// Runs body(i) for i in [0, count) across hardware threads. Each index is
/// processed exactly once; callers write results into per-index slots.
inline void parallel_for(std::size_t count,
                         const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(
      count, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace subot

#endif  // SUBOT_CORE_HPP_

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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "subot/ot.hpp"

namespace subot {
namespace {

DiscreteMeasure random_measure(std::mt19937_64& rng, std::size_t size, int dim) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DiscreteMeasure m;
  double total = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    Vec p(dim);
    for (int d = 0; d < dim; ++d) p[d] = u(rng);
    m.points.push_back(p);
    m.weights.push_back(0.05 + u(rng));
    total += m.weights.back();
  }
  for (double& w : m.weights) w /= total;
  // Push the rounding residue into the last weight so the sum is 1.
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

DiscreteMeasure uniform_of_size(std::size_t n) {
  std::vector<Vec> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back(make_vec({static_cast<double>(i)}));
  return DiscreteMeasure::uniform(pts);
}

Mat c01() { return (Mat(2, 2) << 0.0, 1.0, 1.0, 0.0).finished(); }

TEST(Measure, Validation) {
  EXPECT_NO_THROW(uniform_of_size(3).validate());
  DiscreteMeasure bad{{make_vec({0.0}), make_vec({1.0})}, {0.5, 0.6}};
  EXPECT_THROW(bad.validate(), InvalidArgument);
  DiscreteMeasure neg{{make_vec({0.0}), make_vec({1.0})}, {1.5, -0.5}};
  EXPECT_THROW(neg.validate(), InvalidArgument);
  DiscreteMeasure ragged{{make_vec({0.0}), make_vec({1.0, 2.0})}, {0.5, 0.5}};
  EXPECT_THROW(ragged.validate(), InvalidArgument);
}

TEST(CostMatrix, EuclideanUnitPair) {
  const auto m = DiscreteMeasure::uniform({make_vec({0.0, 0.0}), make_vec({1.0, 0.0})});
  const Mat c = cost_matrix(CostBackend::kClosedForm, euclidean_system(2), m, m);
  EXPECT_EQ(c, c01());
}

TEST(CostMatrix, GrushinBothBackends) {
  const auto sys = grushin_system();
  const auto o = DiscreteMeasure::dirac(make_vec({0.0, 0.0}));
  const auto up = DiscreteMeasure::dirac(make_vec({0.0, 1.0}));
  const auto right = DiscreteMeasure::dirac(make_vec({1.0, 0.0}));
  EXPECT_NEAR(cost_matrix(CostBackend::kClosedForm, sys, o, up)(0, 0), 2.0 * kPi, 1e-12);
  EXPECT_NEAR(cost_matrix(CostBackend::kShooting, sys, o, up)(0, 0), 2.0 * kPi, 1e-6);
  EXPECT_NEAR(cost_matrix(CostBackend::kClosedForm, sys, o, right)(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(cost_matrix(CostBackend::kShooting, sys, o, right)(0, 0), 1.0, 1e-8);
}

TEST(CostMatrix, ClosedFormCoverage) {
  const auto h = heisenberg_system();
  EXPECT_FALSE(has_closed_form(h, Vec::Zero(3), make_vec({0.0, 0.0, 1.0})));
  const auto m = DiscreteMeasure::dirac(Vec::Zero(3));
  const auto n = DiscreteMeasure::dirac(make_vec({0.0, 0.0, 1.0}));
  EXPECT_THROW(cost_matrix(CostBackend::kClosedForm, h, m, n), InvalidArgument);
  const auto g = grushin_system();
  EXPECT_THROW(pair_cost(CostBackend::kClosedForm, g, make_vec({0.5, 0.0}), make_vec({1.0, 0.0})),
               InvalidArgument);
}

TEST(CostMatrix, ShootingFailureNamesThePair) {
  const auto sys = grushin_system();
  ConnectOptions hopeless;
  hopeless.starts = 1;
  hopeless.max_iterations = 0;
  const auto m = DiscreteMeasure::dirac(make_vec({0.0, 0.0}));
  const auto n = DiscreteMeasure::uniform({make_vec({0.0, 0.0}), make_vec({0.7, 0.9})});
  try {
    cost_matrix(CostBackend::kShooting, sys, m, n, hopeless);
    FAIL() << "expected NoConvergence";
  } catch (const NoConvergence& e) {
    EXPECT_NE(std::string(e.what()).find("(0, 1)"), std::string::npos) << e.what();
  }
}

TEST(Kantorovich, IdentityPlan) {
  const auto mu = uniform_of_size(2);
  const auto [plan, duals] = solve_kantorovich(c01(), mu, mu);
  EXPECT_NEAR(plan.value, 0.0, 1e-15);
  EXPECT_NEAR(plan.matrix(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(plan.matrix(1, 1), 0.5, 1e-15);
  EXPECT_EQ(plan.matrix(0, 1), 0.0);
}

TEST(Kantorovich, DiracSourceUsesTheOnlyPlan) {
  std::mt19937_64 rng(41);
  const auto nu = random_measure(rng, 5, 1);
  const auto mu = DiscreteMeasure::dirac(make_vec({0.0}));
  const Mat c = random_cost(rng, 1, 5);
  const auto [plan, duals] = solve_kantorovich(c, mu, nu);
  double expected = 0.0;
  for (Eigen::Index j = 0; j < 5; ++j) {
    EXPECT_NEAR(plan.matrix(0, j), nu.weights[static_cast<std::size_t>(j)], 1e-15);
    expected += nu.weights[static_cast<std::size_t>(j)] * c(0, j);
  }
  EXPECT_NEAR(plan.value, expected, 1e-12);
}

TEST(Kantorovich, TwoByTwoAgainstItsPlanFamily) {
  const Mat c = (Mat(2, 2) << 1.0, 2.0, 3.0, 1.0).finished();
  const auto mu = uniform_of_size(2);
  const auto [plan, duals] = solve_kantorovich(c, mu, mu);
  // Feasible plans are [[s, 1/2 - s], [1/2 - s, s]] for s in [0, 1/2].
  double best = kInf;
  for (int i = 0; i <= 1000; ++i) {
    const double s = 0.5 * i / 1000.0;
    best = std::min(best, s * 1.0 + (0.5 - s) * 2.0 + (0.5 - s) * 3.0 + s * 1.0);
  }
  EXPECT_NEAR(plan.value, 1.0, 1e-15);
  EXPECT_NEAR(best, plan.value, 1e-12);
  EXPECT_NEAR(plan.matrix(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(duals.f[0] + duals.g[0], 1.0, 1e-12);
  EXPECT_NEAR(duals.f[1] + duals.g[1], 1.0, 1e-12);
}

TEST(Kantorovich, Errors) {
  const auto mu = uniform_of_size(2);
  DiscreteMeasure heavy{{make_vec({0.0}), make_vec({1.0})}, {0.5, 0.7}};
  EXPECT_THROW(solve_kantorovich(c01(), mu, heavy), InvalidArgument);
  EXPECT_THROW(solve_kantorovich(Mat::Zero(3, 2), mu, mu), InvalidArgument);
  const Mat blocked = (Mat(2, 2) << kInf, kInf, 0.0, 0.0).finished();
  EXPECT_THROW(solve_kantorovich(blocked, mu, mu), InfeasibleProblem);
}

TEST(Kantorovich, InfiniteEntriesAvoided) {
  const Mat c = (Mat(2, 2) << kInf, 1.0, 2.0, kInf).finished();
  const auto mu = uniform_of_size(2);
  const auto [plan, duals] = solve_kantorovich(c, mu, mu);
  EXPECT_NEAR(plan.value, 1.5, 1e-15);
  EXPECT_EQ(plan.matrix(0, 0), 0.0);
}

TEST(Kantorovich, StrongDualityMarginalsFeasibility) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> size(1, 64);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = static_cast<std::size_t>(size(rng));
    const auto n = static_cast<std::size_t>(size(rng));
    const auto mu = random_measure(rng, m, 2);
    const auto nu = random_measure(rng, n, 2);
    const Mat c = random_cost(rng, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    const auto [plan, duals] = solve_kantorovich(c, mu, nu);
    const double dual = duals.value(mu, nu);
    EXPECT_LE(std::abs(plan.value - dual), 1e-9 * (1.0 + std::abs(plan.value)));
    EXPECT_GE(plan.matrix.minCoeff(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      EXPECT_NEAR(plan.matrix.row(static_cast<Eigen::Index>(i)).sum(), mu.weights[i], 1e-10);
    }
    for (std::size_t j = 0; j < n; ++j) {
      EXPECT_NEAR(plan.matrix.col(static_cast<Eigen::Index>(j)).sum(), nu.weights[j], 1e-10);
    }
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      for (Eigen::Index j = 0; j < c.cols(); ++j) {
        EXPECT_LE(duals.f[i] + duals.g[j], c(i, j) + 1e-9);
      }
    }
    EXPECT_TRUE(support_slackness(plan, duals, c).empty());
  }
}

TEST(Kantorovich, EqualsBestPermutation) {
  std::mt19937_64 rng(43);
  for (std::size_t n = 1; n <= 6; ++n) {
    const auto mu = uniform_of_size(n);
    for (int trial = 0; trial < 40; ++trial) {
      const Mat c = random_cost(rng, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      std::vector<int> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      double best = kInf;
      do {
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) v += c(static_cast<Eigen::Index>(i), perm[i]);
        best = std::min(best, v / static_cast<double>(n));
      } while (std::next_permutation(perm.begin(), perm.end()));
      EXPECT_NEAR(solve_kantorovich(c, mu, mu).first.value, best, 1e-12);
    }
  }
}

TEST(Kantorovich, Deterministic) {
  std::mt19937_64 rng(44);
  const auto mu = random_measure(rng, 20, 2);
  const auto nu = random_measure(rng, 17, 2);
  const Mat c = random_cost(rng, 20, 17);
  const auto a = solve_kantorovich(c, mu, nu);
  const auto b = solve_kantorovich(c, mu, nu);
  EXPECT_EQ(a.first.matrix, b.first.matrix);
  EXPECT_EQ(a.second.f, b.second.f);
  EXPECT_EQ(a.second.g, b.second.g);
}

TEST(Transforms, Examples) {
  EXPECT_EQ(c1_transform(make_vec({0.0, 0.0}), c01()), make_vec({0.0, 0.0}));
  EXPECT_EQ(c1_transform(make_vec({-1.0, -1.0}), c01()), make_vec({1.0, 1.0}));
  const Mat row = (Mat(1, 3) << 2.0, 5.0, -1.0).finished();
  EXPECT_EQ(c1_transform(make_vec({0.5}), row), make_vec({1.5, 4.5, -1.5}));

  EXPECT_EQ(c2_transform(make_vec({0.0, 0.0}), c01()), make_vec({0.0, 0.0}));
  EXPECT_EQ(c2_transform(make_vec({1.0, 1.0}), c01()), make_vec({-1.0, -1.0}));
  const Mat col = (Mat(3, 1) << 2.0, 5.0, -1.0).finished();
  EXPECT_EQ(c2_transform(make_vec({0.5}), col), make_vec({1.5, 4.5, -1.5}));
}

TEST(Transforms, CConcavity) {
  EXPECT_TRUE(is_c_concave(make_vec({0.0, 0.0}), c01()));
  EXPECT_FALSE(is_c_concave(make_vec({10.0, 0.0}), c01()));
  EXPECT_EQ(c1_transform(make_vec({10.0, 0.0}), c01()), make_vec({-10.0, -9.0}));
  std::mt19937_64 rng(45);
  for (int trial = 0; trial < 50; ++trial) {
    const Mat c = random_cost(rng, 7, 9);
    const Vec g = 5.0 * Vec::Random(9);
    EXPECT_TRUE(is_c_concave(c2_transform(g, c), c));
  }
}

TEST(Transforms, IdempotenceAndDualBound) {
  std::mt19937_64 rng(46);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Mat c = random_cost(rng, 8, 6);
    Vec f(8);
    for (int i = 0; i < 8; ++i) f[i] = u(rng);
    const Vec g = c1_transform(f, c);
    EXPECT_LE((c1_transform(c2_transform(g, c), c) - g).cwiseAbs().maxCoeff(), 1e-12);
    for (Eigen::Index i = 0; i < 8; ++i) {
      for (Eigen::Index j = 0; j < 6; ++j) EXPECT_LE(f[i] + g[j], c(i, j) + 1e-12);
    }
    const auto mu = random_measure(rng, 8, 1);
    const auto nu = random_measure(rng, 6, 1);
    const double optimum = solve_kantorovich(c, mu, nu).first.value;
    EXPECT_LE((DualPotentials{f, g}.value(mu, nu)), optimum + 1e-9);
  }
}

TEST(Slackness, Examples) {
  const auto mu = uniform_of_size(2);
  const DualPotentials zero{Vec::Zero(2), Vec::Zero(2)};
  TransportPlan diag{Mat::Identity(2, 2) * 0.5, 0.0};
  EXPECT_TRUE(support_slackness(diag, zero, c01()).empty());
  TransportPlan anti{(Mat(2, 2) << 0.0, 0.5, 0.5, 0.0).finished(), 1.0};
  const auto v = support_slackness(anti, zero, c01());
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0], std::make_pair(std::size_t{0}, std::size_t{1}));
  EXPECT_EQ(v[1], std::make_pair(std::size_t{1}, std::size_t{0}));
}

TEST(CenterDuals, StaysOptimalAndLoosensInactiveConstraints) {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 20; ++trial) {
    const auto mu = random_measure(rng, 12, 2);
    const auto nu = random_measure(rng, 9, 2);
    const Mat c = random_cost(rng, 12, 9);
    const auto [plan, duals] = solve_kantorovich(c, mu, nu);
    const auto centered = center_duals(plan, duals, c);
    EXPECT_NEAR(centered.value(mu, nu), plan.value, 1e-9 * (1.0 + plan.value));
    EXPECT_TRUE(support_slackness(plan, centered, c).empty());
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      for (Eigen::Index j = 0; j < c.cols(); ++j) {
        EXPECT_LE(centered.f[i] + centered.g[j], c(i, j) + 1e-9);
      }
    }
  }
}

TEST(CenterDuals, TranslateKeepsFullSlack) {
  // x_i = i/2 sent to x_i + 3/4: the best duals leave every unused pair with
  // slack |x_i - x_j|^2 >= 1/4.
  std::vector<Vec> src, dst;
  for (int i = 0; i < 6; ++i) {
    src.push_back(make_vec({0.5 * i}));
    dst.push_back(make_vec({0.5 * i + 0.75}));
  }
  const auto mu = DiscreteMeasure::uniform(src);
  const auto nu = DiscreteMeasure::uniform(dst);
  const Mat c = cost_matrix(CostBackend::kClosedForm, euclidean_system(1), mu, nu);
  const auto [plan, duals] = solve_kantorovich(c, mu, nu);
  const auto centered = center_duals(plan, duals, c);
  for (Eigen::Index i = 0; i < 6; ++i) {
    for (Eigen::Index j = 0; j < 6; ++j) {
      const double slack = c(i, j) - centered.f[i] - centered.g[j];
      if (i == j) {
        EXPECT_NEAR(slack, 0.0, 1e-12);
      } else {
        EXPECT_GE(slack, 0.25 - 1e-9);
      }
    }
  }
}

}  // namespace
}  // namespace subot

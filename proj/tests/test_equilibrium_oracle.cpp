// Copyright 2026 The hetlearn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "hetlearn/equilibrium_oracle.hpp"

namespace hetlearn {
namespace {

// Independent policy evaluation by fixed-point iteration, for comparing with
// the LU solve.
Vector IterativeEvaluation(const StochasticGame& g, int agent,
                           const std::vector<std::array<MixedStrategy, 2>>& policy) {
  Vector u = Vector::Zero(g.num_states);
  for (int it = 0; it < 5000; ++it) {
    Vector next(g.num_states);
    for (int s = 0; s < g.num_states; ++s) {
      const Vector& x = policy[s][0];
      const Vector& y = policy[s][1];
      double total = 0.0;
      for (int a1 = 0; a1 < g.num_actions[0]; ++a1)
        for (int a2 = 0; a2 < g.num_actions[1]; ++a2) {
          const double w = x(a1) * y(a2);
          const double r = agent == 0 ? g.rewards[0][s](a1, a2) : g.rewards[1][s](a2, a1);
          total += w * (r + g.gamma * g.Transition(s, a1, a2).dot(u));
        }
      next(s) = total;
    }
    u = next;
  }
  return u;
}

TEST(ShapleyTest, NoDiscountIsStageMinimax) {
  const auto g = GenerateRandomZeroSumGame(4, 3, {{-1.0, 1.0}}, 11, 0.0);
  const auto sol = ShapleyIterate(g);
  EXPECT_EQ(sol.iterations, 1);
  for (int s = 0; s < 4; ++s) {
    EXPECT_NEAR(sol.v_star[0](s), MinimaxValue(g.rewards[0][s]).value, 1e-12);
  }
}

TEST(ShapleyTest, MatchingPenniesSingleState) {
  StochasticGame g;
  g.num_states = 1;
  g.num_actions = {2, 2};
  Matrix r(2, 2);
  r << 1, -1, -1, 1;
  g.rewards[0] = {r};
  g.rewards[1] = {-r.transpose()};
  g.kernel = {Matrix::Ones(4, 1)};
  for (double gamma : {0.0, 0.3, 0.9, 0.99}) {
    g.gamma = gamma;
    EXPECT_NEAR(ShapleyIterate(g).v_star[0](0), 0.0, 1e-9);
  }
}

TEST(ShapleyTest, PresetProtocolGameAgainstPolicyEvaluation) {
  const auto g = GenerateRandomZeroSumGame(2, 2, {{0.0, 1.0}, {0.0, 0.2}}, 20240601);
  const double tol = 1e-9;
  const auto sol = ShapleyIterate(g, tol);
  EXPECT_LE(sol.residual, tol);
  const auto exact = PolicyEvaluation(g, sol.pi_star);
  for (int i = 0; i < 2; ++i) {
    EXPECT_LE((exact[i] - sol.v_star[i]).cwiseAbs().maxCoeff(), 1e-7);
    EXPECT_LE((IterativeEvaluation(g, i, sol.pi_star) - exact[i]).cwiseAbs().maxCoeff(), 1e-12);
  }
  // Bellman fixed point.
  const auto q = GlobalQFromValues(g, 0, sol.v_star[0]);
  for (int s = 0; s < 2; ++s) {
    EXPECT_NEAR(MinimaxValue(q[s]).value, sol.v_star[0](s), 1e-9);
    EXPECT_LE((q[s] - sol.q_star[0][s]).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(ShapleyTest, LargerGamesAndDiscounts) {
  for (int seed = 0; seed < 10; ++seed) {
    const auto g = GenerateRandomZeroSumGame(3 + seed % 3, 2 + seed % 3, {{-1.0, 1.0}}, seed,
                                             0.1 + 0.08 * seed);
    const auto sol = ShapleyIterate(g);
    const auto exact = PolicyEvaluation(g, sol.pi_star);
    EXPECT_LE((exact[0] - sol.v_star[0]).cwiseAbs().maxCoeff(), 1e-7);
    EXPECT_LE((exact[1] + exact[0]).cwiseAbs().maxCoeff(), 1e-12);
    for (int s = 0; s < g.num_states; ++s) {
      EXPECT_NEAR(MinimaxValue(sol.q_star[1][s]).value, sol.v_star[1](s), 1e-8);
    }
  }
}

TEST(ShapleyTest, RejectsGeneralSum) {
  auto g = GenerateRandomZeroSumGame(2, 2, {{0.0, 1.0}}, 3);
  g.rewards[1][0](0, 0) += 0.5;
  EXPECT_THROW(ShapleyIterate(g), DomainError);
}

TEST(GlobalQTest, Examples) {
  const auto g = GenerateRandomZeroSumGame(3, 2, {{-1.0, 1.0}}, 4, 0.6);
  const auto zero = GlobalQFromValues(g, 0, Vector::Zero(3));
  auto flat = g;
  flat.gamma = 0.0;
  const auto undiscounted = GlobalQFromValues(flat, 1, Vector::Constant(3, 9.0));
  for (int s = 0; s < 3; ++s) {
    EXPECT_EQ(zero[s], g.rewards[0][s]);
    EXPECT_EQ(undiscounted[s], g.rewards[1][s]);
  }
  const auto q = GlobalQFromValues(g, 1, Vector::Constant(3, 2.0));
  EXPECT_NEAR(q[1](1, 0), g.rewards[1][1](1, 0) + 0.6 * 2.0, 1e-15);
}

TEST(BoundsTest, ValueError) {
  EXPECT_EQ(ValueErrorBound(1.0, 0.3, 0.0, 0.0, 2, 2), 0.0);
  const double d3 = std::pow(0.92, 0.96);
  const double expected1 = 1.7 / (0.7 * 0.4) * (2 * 0.002 * std::log(2.0));
  const double expected3 =
      (2 * d3 + 0.6 - 0.9 * d3) / (0.7 * (d3 - 0.6)) * (2 * 0.002 * std::log(2.0));
  EXPECT_NEAR(ValueErrorBound(1.0, 0.3, 0.002, 0.002, 2, 2), expected1, 1e-15);
  EXPECT_NEAR(ValueErrorBound(d3, 0.3, 0.002, 0.002, 2, 2), expected3, 1e-15);
  // Published rounded figures.
  EXPECT_NEAR(ValueErrorBound(1.0, 0.3, 0.002, 0.002, 2, 2), 0.016838, 2e-5);
  EXPECT_NEAR(ValueErrorBound(d3, 0.3, 0.002, 0.002, 2, 2), 0.019813, 2e-5);
  EXPECT_THROW(ValueErrorBound(0.5, 0.3, 0.002, 0.002, 2, 2), DomainError);
  EXPECT_THROW(ValueErrorBound(0.0, 0.0, 0.002, 0.002, 2, 2), DomainError);
}

TEST(BoundsTest, PayoffGap) {
  for (const auto& b : PayoffGapBounds(0.7, 0.0)) {
    EXPECT_EQ(b.upper, 0.0);
    EXPECT_EQ(b.lower, 0.0);
  }
  for (const auto& b : PayoffGapBounds(1.0, 0.1)) {
    EXPECT_NEAR(b.upper, 0.2, 1e-15);
    EXPECT_NEAR(b.lower, -0.4, 1e-15);
  }
  const auto half = PayoffGapBounds(0.5, 1.0);
  EXPECT_DOUBLE_EQ(half[0].upper, 2.0);
  EXPECT_DOUBLE_EQ(half[0].lower, -6.0);
  EXPECT_DOUBLE_EQ(half[1].upper, 4.0);
  EXPECT_DOUBLE_EQ(half[1].lower, -4.0);
}

TEST(BoundsTest, StationaryOpponent) {
  EXPECT_EQ(StationaryOpponentBound(0.3, 0.0, 2), 0.0);
  EXPECT_NEAR(StationaryOpponentBound(0.0, 0.01, 3), 2 * 0.01 * std::log(3.0), 1e-15);
  EXPECT_NEAR(StationaryOpponentBound(0.3, 0.002, 2), 1.7 / (0.7 * 0.4) * 0.002 * std::log(2.0), 1e-15);
  EXPECT_NEAR(StationaryOpponentBound(0.3, 0.002, 2), 0.008419, 2e-5);
  EXPECT_THROW(StationaryOpponentBound(0.5, 0.002, 2), DomainError);
}

TEST(InducedGameTest, MatchesBestDeterministicPolicy) {
  const auto g = GenerateRandomZeroSumGame(3, 3, {{0.0, 1.0}}, 8, 0.5);
  std::vector<MixedStrategy> opp;
  for (int s = 0; s < 3; ++s) {
    Vector y(3);
    y << 0.2 + 0.1 * s, 0.5, 0.3 - 0.1 * s;
    opp.push_back(y);
  }
  const auto induced = InducedSingleAgentGame(g, 0, opp);
  EXPECT_EQ(induced.num_actions[1], 1);
  const double v = ShapleyIterate(induced, 1e-12).v_star[0].sum();
  // Brute force over the 27 deterministic stationary policies.
  double best = -1e300;
  for (int code = 0; code < 27; ++code) {
    std::vector<std::array<MixedStrategy, 2>> policy;
    for (int s = 0, c = code; s < 3; ++s, c /= 3) policy.push_back({PureStrategy(3, c % 3), opp[s]});
    best = std::max(best, PolicyEvaluation(g, policy)[0].sum());
  }
  EXPECT_NEAR(v, best, 1e-9);
}

TEST(InducedGameTest, SecondAgentView) {
  const auto g = GenerateRandomZeroSumGame(2, 2, {{0.0, 1.0}}, 9, 0.3);
  const std::vector<MixedStrategy> opp = {PureStrategy(2, 0), PureStrategy(2, 1)};
  const auto induced = InducedSingleAgentGame(g, 1, opp);
  EXPECT_EQ(induced.num_actions[0], 2);
  for (int a = 0; a < 2; ++a) {
    EXPECT_EQ(induced.rewards[0][0](a, 0), g.rewards[1][0](a, 0));
    EXPECT_EQ(induced.rewards[0][1](a, 0), g.rewards[1][1](a, 1));
  }
}

}  // namespace
}  // namespace hetlearn

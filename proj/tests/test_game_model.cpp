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

#include <cstdint>
#include <vector>

#include "hetlearn/game_model.hpp"
#include "hetlearn/rng.hpp"

namespace hetlearn {
namespace {

TEST(RngTest, MixMatchesReferenceValues) {
  EXPECT_EQ(Mix64(0), 0u);
  EXPECT_EQ(Mix64(1), 0x5692161d100b05e5ULL);
  // First output of the classic splitmix64 generator seeded with 0.
  EXPECT_EQ(DeriveSeed(0, 0), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(DeriveSeed(20240601, 3), 0xb16bf47a170c3f3eULL);
}

TEST(RngTest, CounterStreamIsReproducible) {
  CounterRng rng(7);
  EXPECT_EQ(rng.NextU64(), 0x63cbe1e459320dd7ULL);
  EXPECT_EQ(rng.NextU64(), 0x044c3cd7f43c661cULL);
  EXPECT_EQ(rng.NextU64(), 0xe6984080bab12a02ULL);
  EXPECT_EQ(rng.counter(), 3u);
}

TEST(RngTest, DerivedStreamsAreDistinct) {
  std::vector<std::uint64_t> seen;
  for (std::uint64_t id = 0; id < 1000; ++id) seen.push_back(DeriveSeed(42, id));
  std::sort(seen.begin(), seen.end());
  EXPECT_EQ(std::adjacent_find(seen.begin(), seen.end()), seen.end());
}

TEST(RngTest, UniformStaysInRange) {
  CounterRng rng(3);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.Uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.005);
}

TEST(RngTest, CategoricalSkipsZeroMass) {
  CounterRng rng(11);
  const std::vector<double> p = {0.0, 1.0, 0.0};
  for (int i = 0; i < 100; ++i) EXPECT_EQ(rng.Categorical(p), 1);
}

Matrix Mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.begin()->size()));
  int r = 0;
  for (const auto& row : rows) {
    int c = 0;
    for (double x : row) m(r, c++) = x;
    ++r;
  }
  return m;
}

TEST(MatrixGameTest, ExactZeroSum) {
  const Matrix r = Mat({{1, -1}, {-1, 1}});
  const auto rep = ValidateMatrixGame({r, -r.transpose()});
  EXPECT_EQ(rep.deviation, 0.0);
  EXPECT_EQ(rep.r_min, 0.0);
  EXPECT_EQ(rep.r_max, 0.0);
}

TEST(MatrixGameTest, IdentityAgainstZero) {
  const auto rep = ValidateMatrixGame({Mat({{1, 0}, {0, 1}}), Mat({{0, 0}, {0, 0}})});
  EXPECT_EQ(rep.deviation, 1.0);
  EXPECT_EQ(rep.r_min, 0.0);
  EXPECT_EQ(rep.r_max, 1.0);
}

TEST(MatrixGameTest, ShapeMismatchIsStructural) {
  EXPECT_THROW(ValidateMatrixGame({Matrix::Zero(2, 3), Matrix::Zero(2, 3)}), StructuralError);
  EXPECT_THROW(ValidateMatrixGame({Matrix(), Matrix()}), StructuralError);
}

TEST(MatrixGameTest, JsonRoundTrip) {
  const MatrixGame g{Mat({{1, 2, 3}, {4, 5, 6}}), Mat({{0, 1}, {2, 3}, {4, 5}})};
  const MatrixGame back = MatrixGameFromJson(MatrixGameToJson(g));
  EXPECT_EQ(back.r1, g.r1);
  EXPECT_EQ(back.r2, g.r2);
}

StochasticGame SingleStateGame() {
  StochasticGame m;
  m.num_states = 1;
  m.num_actions = {2, 2};
  m.gamma = 0.5;
  const Matrix r = Mat({{1, -1}, {-1, 1}});
  m.rewards[0] = {r};
  m.rewards[1] = {-r.transpose()};
  m.kernel = {Matrix::Ones(4, 1)};
  return m;
}

TEST(StochasticGameTest, SingleStateIsValid) {
  const auto rep = ValidateStochasticGame(SingleStateGame());
  EXPECT_TRUE(rep.is_zero_sum);
  EXPECT_TRUE(rep.kernel_ok);
}

TEST(StochasticGameTest, KernelRowOffByTenPercent) {
  StochasticGame m = SingleStateGame();
  m.kernel[0](2, 0) = 0.9;
  EXPECT_THROW(ValidateStochasticGame(m), KernelError);
}

TEST(StochasticGameTest, NegativeProbability) {
  StochasticGame m = SingleStateGame();
  m.num_states = 2;
  m.rewards[0].push_back(m.rewards[0][0]);
  m.rewards[1].push_back(m.rewards[1][0]);
  m.kernel = {Matrix::Constant(4, 2, 0.5), Matrix::Constant(4, 2, 0.5)};
  m.kernel[1](0, 0) = -0.5;
  m.kernel[1](0, 1) = 1.5;
  EXPECT_THROW(ValidateStochasticGame(m), KernelError);
}

TEST(StochasticGameTest, DetectsGeneralSum) {
  StochasticGame m = SingleStateGame();
  m.rewards[0][0](0, 0) = 1.0;
  m.rewards[1][0](0, 0) = 0.0;
  EXPECT_FALSE(ValidateStochasticGame(m).is_zero_sum);
}

TEST(StochasticGameTest, DiscountOutsideUnitInterval) {
  StochasticGame m = SingleStateGame();
  m.gamma = 1.0;
  EXPECT_THROW(ValidateStochasticGame(m), DomainError);
}

TEST(StochasticGameTest, JointIndexConvention) {
  StochasticGame m = SingleStateGame();
  m.num_actions = {2, 3};
  EXPECT_EQ(m.JointIndex(1, 2), 5);
  EXPECT_EQ(m.JointIndexFor(0, 1, 2), 5);
  EXPECT_EQ(m.JointIndexFor(1, 2, 1), 5);
}

// Two states, two actions each; `p[s][a1][a2]` is the probability of moving
// to the other state.
StochasticGame TwoStateGame(const double p[2][2][2]) {
  StochasticGame m;
  m.num_states = 2;
  m.num_actions = {2, 2};
  m.gamma = 0.3;
  for (int s = 0; s < 2; ++s) {
    m.rewards[0].push_back(Matrix::Zero(2, 2));
    m.rewards[1].push_back(Matrix::Zero(2, 2));
    Matrix k(4, 2);
    for (int a1 = 0; a1 < 2; ++a1)
      for (int a2 = 0; a2 < 2; ++a2) {
        k(a1 * 2 + a2, 1 - s) = p[s][a1][a2];
        k(a1 * 2 + a2, s) = 1.0 - p[s][a1][a2];
      }
    m.kernel.push_back(k);
  }
  return m;
}

constexpr std::array<ResponseMode, 2> kBothBest = {ResponseMode::kBest, ResponseMode::kBest};
constexpr std::array<ResponseMode, 2> kBothSmoothed = {ResponseMode::kSmoothed,
                                                       ResponseMode::kSmoothed};
constexpr std::array<ResponseMode, 2> kFirstBest = {ResponseMode::kBest, ResponseMode::kSmoothed};

TEST(ReachabilityTest, PositiveKernelGivesCompleteGraph) {
  const double p[2][2][2] = {{{0.5, 0.5}, {0.5, 0.5}}, {{0.5, 0.5}, {0.5, 0.5}}};
  for (const auto& modes : {kBothBest, kBothSmoothed, kFirstBest}) {
    const auto g = BuildReachabilityGraph(TwoStateGame(p), modes);
    for (int s = 0; s < 2; ++s)
      for (int t = 0; t < 2; ++t) EXPECT_TRUE(g.HasEdge(s, t));
  }
}

TEST(ReachabilityTest, BothSmoothedNeedsOneProfile) {
  const double p[2][2][2] = {{{0, 0}, {0, 1}}, {{0, 0}, {0, 0}}};
  const auto g = BuildReachabilityGraph(TwoStateGame(p), kBothSmoothed);
  EXPECT_TRUE(g.HasEdge(0, 1));
  EXPECT_FALSE(g.HasEdge(1, 0));
}

TEST(ReachabilityTest, BothBestNeedsEveryProfile) {
  const double p[2][2][2] = {{{1, 1}, {1, 0}}, {{1, 1}, {1, 1}}};
  const auto g = BuildReachabilityGraph(TwoStateGame(p), kBothBest);
  EXPECT_FALSE(g.HasEdge(0, 1));
  EXPECT_TRUE(g.HasEdge(1, 0));
}

TEST(ReachabilityTest, MixedModesQuantifyPerAgent) {
  // Agent 1 best-responds: every own action needs some opponent action.
  const double ok[2][2][2] = {{{1, 0}, {0, 1}}, {{0, 0}, {0, 0}}};
  EXPECT_TRUE(BuildReachabilityGraph(TwoStateGame(ok), kFirstBest).HasEdge(0, 1));
  const double missing[2][2][2] = {{{1, 1}, {0, 0}}, {{0, 0}, {0, 0}}};
  EXPECT_FALSE(BuildReachabilityGraph(TwoStateGame(missing), kFirstBest).HasEdge(0, 1));
}

ReachabilityGraph Graph(int n, std::vector<std::pair<int, int>> edges) {
  ReachabilityGraph g;
  g.adjacency.assign(n, std::vector<bool>(n, false));
  for (auto [a, b] : edges) g.adjacency[a][b] = true;
  return g;
}

TEST(ConnectivityTest, Examples) {
  EXPECT_TRUE(IsStronglyConnected(Graph(2, {{0, 1}, {1, 0}})));
  EXPECT_FALSE(IsStronglyConnected(Graph(2, {{0, 1}})));
  EXPECT_TRUE(IsStronglyConnected(Graph(1, {})));
}

TEST(ConnectivityTest, ComponentLabels) {
  // 0 <-> 1 -> 2 <-> 3
  const auto comp = StronglyConnectedComponents(Graph(4, {{0, 1}, {1, 0}, {1, 2}, {2, 3}, {3, 2}}));
  EXPECT_EQ(comp[0], comp[1]);
  EXPECT_EQ(comp[2], comp[3]);
  EXPECT_NE(comp[0], comp[2]);
}

TEST(GeneratorTest, PresetProtocolShape) {
  const auto m = GenerateRandomZeroSumGame(2, 2, {{0.0, 1.0}, {0.0, 0.2}}, 99);
  const auto rep = ValidateStochasticGame(m);
  EXPECT_TRUE(rep.is_zero_sum);
  EXPECT_DOUBLE_EQ(m.gamma, 0.3);
  for (int s = 0; s < 2; ++s) EXPECT_GT(m.kernel[s].minCoeff(), 0.0);
  EXPECT_GE(m.rewards[0][0].minCoeff(), 0.0);
  EXPECT_LE(m.rewards[0][0].maxCoeff(), 1.0);
  EXPECT_GE(m.rewards[0][1].minCoeff(), 0.0);
  EXPECT_LE(m.rewards[0][1].maxCoeff(), 0.2);
}

TEST(GeneratorTest, SameSeedSameGame) {
  const auto a = GenerateRandomZeroSumGame(3, 2, {{-1.0, 1.0}}, 5);
  const auto b = GenerateRandomZeroSumGame(3, 2, {{-1.0, 1.0}}, 5);
  EXPECT_EQ(StochasticGameToJson(a).dump(), StochasticGameToJson(b).dump());
  const auto c = GenerateRandomZeroSumGame(3, 2, {{-1.0, 1.0}}, 6);
  EXPECT_NE(StochasticGameToJson(a).dump(), StochasticGameToJson(c).dump());
}

TEST(GeneratorTest, DegenerateRange) {
  const auto m = GenerateRandomZeroSumGame(2, 3, {{0.25, 0.25}}, 1);
  for (int s = 0; s < 2; ++s) EXPECT_TRUE((m.rewards[0][s].array() == 0.25).all());
}

TEST(GeneratorTest, RangeCountMustMatch) {
  EXPECT_THROW(GenerateRandomZeroSumGame(3, 2, {{0, 1}, {0, 1}}, 1), StructuralError);
}

TEST(StochasticGameTest, JsonRoundTrip) {
  const auto m = GenerateRandomZeroSumGame(3, 2, {{-1.0, 1.0}}, 17, 0.4);
  const auto back = StochasticGameFromJson(StochasticGameToJson(m));
  EXPECT_EQ(back.num_states, 3);
  EXPECT_EQ(back.gamma, 0.4);
  for (int s = 0; s < 3; ++s) {
    EXPECT_EQ(back.rewards[0][s], m.rewards[0][s]);
    EXPECT_EQ(back.rewards[1][s], m.rewards[1][s]);
    EXPECT_EQ(back.kernel[s], m.kernel[s]);
  }
}

}  // namespace
}  // namespace hetlearn

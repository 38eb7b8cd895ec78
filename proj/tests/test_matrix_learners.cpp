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

#include "hetlearn/matrix_learners.hpp"

namespace hetlearn {
namespace {

Vector Vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

TEST(StepScheduleTest, PowerForms) {
  const StepSchedule a(1.0, 0.96);
  const StepSchedule b(0.92, 0.96);
  for (std::int64_t k : {0, 1, 5, 1000, 123456}) {
    EXPECT_DOUBLE_EQ(a(k), std::pow(static_cast<double>(k + 1), -0.96));
    EXPECT_DOUBLE_EQ(b(k), std::min(1.0, std::pow(0.92 * static_cast<double>(k + 1), -0.96)));
  }
  EXPECT_EQ(b(0), 1.0);
  EXPECT_TRUE(a.sum_diverges());
  EXPECT_TRUE(a.square_summable());
}

TEST(StepScheduleTest, RejectsSlowExponents) {
  EXPECT_THROW(StepSchedule(1.0, 0.5), DomainError);
  EXPECT_THROW(StepSchedule(1.0, 1.2), DomainError);
  EXPECT_THROW(StepSchedule(0.0, 0.9), DomainError);
}

TEST(StepScheduleTest, LimitRatio) {
  EXPECT_NEAR(LimitRatio(StepSchedule(1.0, 0.96), StepSchedule(0.92, 0.96)),
              std::pow(0.92, 0.96), 1e-15);
  EXPECT_EQ(LimitRatio(StepSchedule(1.0, 0.96), StepSchedule(1.0, 0.9)), 0.0);
  EXPECT_TRUE(std::isinf(LimitRatio(StepSchedule(1.0, 0.9), StepSchedule(1.0, 0.96))));
  // The numeric ratio approaches the limit.
  const StepSchedule x(1.0, 0.96), y(0.92, 0.96);
  EXPECT_NEAR(x(1000000) / y(1000000), LimitRatio(x, y), 1e-5);
}

TEST(AgentConfigTest, SmoothedResponseRequirement) {
  EXPECT_NO_THROW((AgentConfigMG{1.0, 0.0, true, {}}.Validate()));
  EXPECT_THROW((AgentConfigMG{0.0, 0.0, true, {}}.Validate()), DomainError);
  EXPECT_THROW((AgentConfigMG{0.5, 0.0, true, {}}.Validate()), DomainError);
  EXPECT_THROW((AgentConfigMG{1.0, 0.0, false, {}}.Validate()), DomainError);
  EXPECT_NO_THROW((AgentConfigMG{0.0, 0.01, false, {}}.Validate()));
  EXPECT_THROW((AgentConfigMG{1.5, 0.1, true, {}}.Validate()), DomainError);
}

TEST(SelectActionTest, ArgmaxWithoutRandomness) {
  CounterRng rng(1);
  EXPECT_EQ(SelectAction(Vec({5, 0}), 0.0, rng), 0);
  EXPECT_EQ(SelectAction(Vec({1, 3, 3}), 0.0, rng), 1);
  EXPECT_EQ(rng.counter(), 0u);
  const AgentConfigMG cfg{1.0, 0.0, true, {}};
  EXPECT_EQ(SelectAction(AgentStateMG{Vec({5, 0}), 0}, cfg, true, rng), 0);
  EXPECT_THROW(SelectAction(AgentStateMG{Vec({5, 0}), 0}, cfg, false, rng), DomainError);
}

TEST(SelectActionTest, EvenDrawsPassChiSquare) {
  CounterRng rng(2);
  int counts[2] = {0, 0};
  const int n = 10000;
  for (int i = 0; i < n; ++i) ++counts[SelectAction(Vec({0, 0}), 1.0, rng)];
  const double e = n / 2.0;
  const double chi2 = (counts[0] - e) * (counts[0] - e) / e + (counts[1] - e) * (counts[1] - e) / e;
  // 1 degree of freedom, p = 0.01.
  EXPECT_LT(chi2, 6.635);
}

TEST(SelectActionTest, ThreeWayFrequencies) {
  CounterRng rng(3);
  const Vector q = Vec({0.2, -0.1, 0.0});
  const Vector p = SmoothedBestResponse(q, 0.3);
  std::vector<int> counts(3, 0);
  const int n = 20000;
  for (int i = 0; i < n; ++i) ++counts[SelectAction(q, 0.3, rng)];
  double chi2 = 0.0;
  for (int a = 0; a < 3; ++a) chi2 += std::pow(counts[a] - n * p(a), 2) / (n * p(a));
  // 2 degrees of freedom, p = 0.01.
  EXPECT_LT(chi2, 9.210);
}

TEST(MatrixLearnerUpdateTest, BeliefBranch) {
  Matrix r(2, 2);
  r << 2, 0, -2, 0;
  const AgentConfigMG cfg{1.0, 0.0, true, StepSchedule(1.0, 1.0)};
  // alpha(1) = 1/2.
  const auto next = MatrixLearnerUpdate({Vec({0, 0}), 1}, cfg, &r, {0, 0, 7.0});
  EXPECT_DOUBLE_EQ(next.q(0), 1.0);
  EXPECT_DOUBLE_EQ(next.q(1), -1.0);
  EXPECT_EQ(next.k, 2);
}

TEST(MatrixLearnerUpdateTest, BeliefBranchNeedsPayoff) {
  const AgentConfigMG cfg{1.0, 0.0, true, StepSchedule(1.0, 1.0)};
  EXPECT_THROW(MatrixLearnerUpdate({Vec({0, 0}), 0}, cfg, nullptr, {0, 1, 0.0}), StructuralError);
}

TEST(MatrixLearnerUpdateTest, PayoffBranchArithmetic) {
  const Vector q = Vec({1, 1});
  const Vector step = PayoffBasedStep(q, 0.5, 0, 0.1);
  EXPECT_DOUBLE_EQ(step(0), 0.2);
  EXPECT_EQ(step(1), 0.0);
  // alpha(k) = 0.1 at k = 9 for 1/(k+1).
  const AgentConfigMG cfg{0.0, 0.5, false, StepSchedule(1.0, 1.0)};
  const auto next = MatrixLearnerUpdate({q, 9}, cfg, nullptr, {0, std::nullopt, 3.0});
  EXPECT_NEAR(next.q(0), 1.4, 1e-15);
  EXPECT_EQ(next.q(1), 1.0);
}

TEST(MatrixLearnerUpdateTest, PayoffBranchCap) {
  // sbr(q)(0) = 0.1 with tau = 1; alpha = 0.5 gives alpha / sbr = 5.
  const Vector q = Vec({std::log(0.1 / 0.9), 0.0});
  EXPECT_NEAR(SmoothedBestResponse(q, 1.0)(0), 0.1, 1e-15);
  const AgentConfigMG cfg{0.0, 1.0, false, StepSchedule(1.0, 1.0)};
  const auto next = MatrixLearnerUpdate({q, 1}, cfg, nullptr, {0, std::nullopt, 2.5});
  EXPECT_EQ(next.q(0), 2.5);
  EXPECT_EQ(next.q(1), 0.0);
}

TEST(MatrixLearnerUpdateTest, UnobservedOpponentFallsBackToPayoffs) {
  Matrix r = Matrix::Identity(2, 2);
  const AgentConfigMG cfg{0.5, 1.0, true, StepSchedule(1.0, 1.0)};
  const auto next = MatrixLearnerUpdate({Vec({0, 0}), 3}, cfg, &r, {1, std::nullopt, 1.0});
  EXPECT_EQ(next.q(0), 0.0);
  EXPECT_DOUBLE_EQ(next.q(1), 0.5);
}

TEST(MatrixLearnerUpdateTest, OneCoordinateWithinUnitStep) {
  CounterRng rng(4);
  for (int t = 0; t < 1000; ++t) {
    const Vector q = Vec({rng.Uniform(-1, 1), rng.Uniform(-1, 1), rng.Uniform(-1, 1)});
    const int played = static_cast<int>(rng.NextU64() % 3);
    const Vector step = PayoffBasedStep(q, rng.Uniform(0.001, 1.0), played, rng.Uniform01());
    EXPECT_GE(step.minCoeff(), 0.0);
    EXPECT_LE(step.maxCoeff(), 1.0);
    EXPECT_EQ((step.array() != 0.0).count() <= 1, true);
    EXPECT_EQ(step.sum(), step(played));
  }
}

// Frozen q, fixed opponent mixture: the mean increment on each action is
// alpha (E[r | a] - q(a)).
TEST(MatrixLearnerUpdateTest, PayoffBranchIsUnbiased) {
  Matrix r(3, 2);
  r << 1.0, -0.5, 0.2, 0.4, -0.3, 0.9;
  const Vector opponent = Vec({0.3, 0.7});
  const Vector q = Vec({0.1, -0.1, 0.05});
  const double tau = 0.5;
  const double alpha = 0.05;
  const Vector p = SmoothedBestResponse(q, tau);
  ASSERT_LT(alpha, p.minCoeff());
  const AgentConfigMG cfg{0.0, tau, false, StepSchedule(1.0, 1.0)};
  const std::int64_t k = 19;  // alpha(19) = 0.05
  CounterRng rng(5);
  const int n = 100000;
  Vector sum = Vector::Zero(3), sum_sq = Vector::Zero(3);
  for (int i = 0; i < n; ++i) {
    const int a = SelectAction(q, tau, rng);
    const int b = rng.Categorical(std::span<const double>(opponent.data(), 2));
    const auto next = MatrixLearnerUpdate({q, k}, cfg, nullptr, {a, std::nullopt, r(a, b)});
    const Vector inc = next.q - q;
    sum += inc;
    sum_sq += inc.cwiseProduct(inc);
  }
  const Vector expected = alpha * (r * opponent - q);
  for (int a = 0; a < 3; ++a) {
    const double mean = sum(a) / n;
    const double se = std::sqrt((sum_sq(a) / n - mean * mean) / n);
    EXPECT_LE(std::abs(mean - expected(a)), 3.0 * se) << "action " << a;
  }
}

TEST(MatrixLearnerUpdateTest, Deterministic) {
  Matrix r(2, 2);
  r << 1, -1, -1, 1;
  const AgentConfigMG cfg{0.5, 0.1, true, StepSchedule(1.0, 0.9)};
  auto run = [&] {
    CounterRng rng(6);
    AgentStateMG st = InitialStateMG(2);
    for (int i = 0; i < 500; ++i) {
      const int a = SelectAction(st.q, cfg.tau, rng);
      const int b = static_cast<int>(rng.NextU64() % 2);
      const bool seen = rng.Bernoulli(cfg.theta);
      st = MatrixLearnerUpdate(st, cfg, &r, {a, seen ? std::optional<int>(b) : std::nullopt, r(a, b)});
    }
    return st.q;
  };
  EXPECT_EQ(run(), run());
}

TEST(MatrixLearnerUpdateTest, EstimatesStayBounded) {
  Matrix r(2, 3);
  r << 0.8, -0.3, 0.1, -0.6, 0.2, 0.5;
  const AgentConfigMG cfg{0.3, 0.05, true, StepSchedule(1.0, 0.7)};
  CounterRng rng(7);
  AgentStateMG st = InitialStateMG(2);
  for (int i = 0; i < 20000; ++i) {
    const int a = SelectAction(st.q, cfg.tau, rng);
    const int b = static_cast<int>(rng.NextU64() % 3);
    const bool seen = rng.Bernoulli(cfg.theta);
    st = MatrixLearnerUpdate(st, cfg, &r, {a, seen ? std::optional<int>(b) : std::nullopt, r(a, b)});
    ASSERT_LE(st.q.cwiseAbs().maxCoeff(), 0.8 + 1e-12);
  }
}

TEST(EmpiricalAverageTest, Examples) {
  EmpiricalAverage even = EmpiricalAverage::Uniform(2);
  EXPECT_EQ(EmpiricalAverageStep(even, 0, 1.0).pi, Vec({1, 0}));
  EXPECT_EQ(EmpiricalAverageStep({Vec({1, 0}), 0}, 0, 0.37).pi, Vec({1, 0}));
  const auto moved = EmpiricalAverageStep(even, 1, 0.2);
  EXPECT_DOUBLE_EQ(moved.pi(0), 0.4);
  EXPECT_DOUBLE_EQ(moved.pi(1), 0.6);
  EXPECT_EQ(moved.k, 1);
  EXPECT_THROW(EmpiricalAverageStep(even, 2, 0.2), StructuralError);
  EXPECT_THROW(EmpiricalAverageStep(even, 0, 0.0), DomainError);
}

}  // namespace
}  // namespace hetlearn

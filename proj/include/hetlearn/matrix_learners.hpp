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

#ifndef HETLEARN_MATRIX_LEARNERS_HPP_
#define HETLEARN_MATRIX_LEARNERS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "hetlearn/errors.hpp"
#include "hetlearn/game_model.hpp"
#include "hetlearn/response_kernel.hpp"
#include "hetlearn/rng.hpp"

namespace hetlearn {

// value(k) = 1 / (scale * (k + 1))^exponent, clipped to at most 1.
class StepSchedule {
 public:
  StepSchedule() = default;
  StepSchedule(double scale, double exponent) : scale_(scale), exponent_(exponent) {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
      throw DomainError("step schedule scale must be positive");
    }
    if (!(exponent > 0.5 && exponent <= 1.0)) {
      throw DomainError("step schedule exponent must lie in (0.5, 1], got " +
                        std::to_string(exponent));
    }
  }

  double operator()(std::int64_t k) const {
    const double v = std::pow(scale_ * static_cast<double>(k + 1), -exponent_);
    return std::min(1.0, v);
  }

  double scale() const { return scale_; }
  double exponent() const { return exponent_; }
  // Both always hold for exponents in (0.5, 1]; exposed for reporting.
  bool sum_diverges() const { return exponent_ <= 1.0; }
  bool square_summable() const { return exponent_ > 0.5; }

  friend bool operator==(const StepSchedule&, const StepSchedule&) = default;

 private:
  double scale_ = 1.0;
  double exponent_ = 1.0;
};

inline StepSchedule MakePowerSchedule(double scale, double exponent) {
  return StepSchedule(scale, exponent);
}

// lim_k a(k) / b(k). Equal exponents give (scale_b / scale_a)^exponent;
// otherwise the limit is 0 or infinity.
inline double LimitRatio(const StepSchedule& a, const StepSchedule& b) {
  if (a.exponent() == b.exponent()) return std::pow(b.scale() / a.scale(), a.exponent());
  return a.exponent() > b.exponent() ? 0.0 : std::numeric_limits<double>::infinity();
}

struct AgentConfigMG {
  double theta = 1.0;
  double tau = 0.0;
  bool knows_payoff = true;
  StepSchedule alpha;

  // Throws DomainError when the configuration can reach the payoff-based
  // branch with tau = 0, where a smoothed best response is undefined.
  void Validate() const {
    if (!(theta >= 0.0 && theta <= 1.0)) throw DomainError("theta must lie in [0, 1]");
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw DomainError("tau must be non-negative");
    if ((theta < 1.0 || !knows_payoff) && tau == 0.0) {
      throw DomainError(
          "an agent that may learn from its own payoffs (theta < 1 or unknown payoff) "
          "plays a smoothed best response and needs tau > 0");
    }
  }
};

struct AgentStateMG {
  Vector q;
  std::int64_t k = 0;
};

inline AgentStateMG InitialStateMG(int n_actions, double q0 = 0.0) {
  return {Vector::Constant(n_actions, q0), 0};
}

struct StageObservation {
  int own_action = 0;
  std::optional<int> opponent_action;
  double reward = 0.0;

  bool opponent_observed() const { return opponent_action.has_value(); }
};

// Argmax (lowest index) when tau = 0, otherwise a draw from the smoothed best
// response. No randomness is consumed when tau = 0.
inline int SelectAction(const VectorRef& q, double tau, CounterRng& rng) {
  if (tau == 0.0) return BestResponse(q);
  const Vector p = SmoothedBestResponse(q, tau);
  return rng.Categorical(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
}

inline int SelectAction(const AgentStateMG& state, const AgentConfigMG& cfg, bool will_observe,
                        CounterRng& rng) {
  if (cfg.tau == 0.0 && !(will_observe && cfg.knows_payoff)) {
    throw DomainError("payoff-based play requires tau > 0");
  }
  return SelectAction(state.q, cfg.tau, rng);
}

// Step vector for the payoff-based branch: only the played action moves, with
// step min(1, alpha / p(played)) so that the expected increment is unbiased.
inline Vector PayoffBasedStep(const VectorRef& q, double tau, int played, double alpha) {
  Vector step = Vector::Zero(q.size());
  const double p = SmoothedBestResponse(q, tau)(played);
  step(played) = p > 0.0 ? std::min(1.0, alpha / p) : 1.0;
  return step;
}

// q + step .* (target - q).
inline Vector LocalQUpdate(const VectorRef& q, const VectorRef& target, const VectorRef& step) {
  return q + step.cwiseProduct(target - q);
}

// One stage of the matrix-game learner. `payoff` (own actions x opponent
// actions) is read only when the opponent's action was observed and the agent
// knows its payoff.
inline AgentStateMG MatrixLearnerUpdate(const AgentStateMG& state, const AgentConfigMG& cfg,
                                  const Matrix* payoff, const StageObservation& obs) {
  const int n = static_cast<int>(state.q.size());
  if (obs.own_action < 0 || obs.own_action >= n) {
    throw StructuralError("own action out of range");
  }
  const double alpha = cfg.alpha(state.k);
  AgentStateMG next{state.q, state.k + 1};
  if (obs.opponent_observed() && cfg.knows_payoff) {
    if (payoff == nullptr) throw StructuralError("belief-based update needs the payoff matrix");
    const int opp = *obs.opponent_action;
    if (payoff->rows() != n || opp < 0 || opp >= payoff->cols()) {
      throw StructuralError("opponent action or payoff shape out of range");
    }
    next.q = state.q + alpha * (payoff->col(opp) - state.q);
  } else {
    const Vector step = PayoffBasedStep(state.q, cfg.tau, obs.own_action, alpha);
    next.q = LocalQUpdate(state.q, Vector::Constant(n, obs.reward), step);
  }
  return next;
}

// Weighted empirical average of an agent's play. Its step is the opponent's
// step size, so pi tracks what the opponent's estimates are averaging over.
struct EmpiricalAverage {
  MixedStrategy pi;
  std::int64_t k = 0;

  static EmpiricalAverage Uniform(int n) { return {hetlearn::Uniform(n), 0}; }

  void Step(int action, double alpha_opponent) {
    pi *= 1.0 - alpha_opponent;
    pi(action) += alpha_opponent;
    ++k;
  }
};

inline EmpiricalAverage EmpiricalAverageStep(EmpiricalAverage avg, int action,
                                             double alpha_opponent) {
  if (!(alpha_opponent > 0.0 && alpha_opponent <= 1.0)) {
    throw DomainError("empirical-average step must lie in (0, 1]");
  }
  if (action < 0 || action >= avg.pi.size()) throw StructuralError("action out of range");
  avg.Step(action, alpha_opponent);
  return avg;
}

}  // namespace hetlearn

#endif  // HETLEARN_MATRIX_LEARNERS_HPP_

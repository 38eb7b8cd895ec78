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

#ifndef HETLEARN_SG_LEARNERS_HPP_
#define HETLEARN_SG_LEARNERS_HPP_

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hetlearn/errors.hpp"
#include "hetlearn/game_model.hpp"
#include "hetlearn/matrix_learners.hpp"
#include "hetlearn/response_kernel.hpp"
#include "hetlearn/rng.hpp"

namespace hetlearn {

struct AgentConfigSG {
  double theta = 1.0;
  double tau = 0.0;
  // Knows its own reward function and the transition kernel.
  bool knows_model = true;
  StepSchedule alpha;
  StepSchedule beta;

  void Validate() const {
    AgentConfigMG{theta, tau, knows_model, alpha}.Validate();
  }
};

// What the agent remembers about the stage it just played; consumed at the
// start of the next stage.
struct PendingStage {
  int state = 0;
  int own_action = 0;
  std::optional<int> opponent_action;
  double reward = 0.0;
};

struct AgentStateSG {
  std::vector<Vector> q;             // q[s] over own actions
  Vector v;                          // per-state value estimates
  std::vector<std::int64_t> visits;  // completed updates per state
  std::optional<PendingStage> pending;
  std::int64_t k = 0;                // stages played

  int num_states() const { return static_cast<int>(v.size()); }
};

inline AgentStateSG InitialStateSG(int n_states, int n_actions, double q0 = 0.0,
                                   double v0 = 0.0) {
  AgentStateSG st;
  st.q.assign(n_states, Vector::Constant(n_actions, q0));
  st.v = Vector::Constant(n_states, v0);
  st.visits.assign(n_states, 0);
  return st;
}

// r(s, ., a_opp) + gamma * sum_s' p(s' | s, ., a_opp) v(s'), from `agent`'s side.
inline Vector ModelBasedTarget(const StochasticGame& game, int agent, int s, int opponent_action,
                               const VectorRef& v) {
  const int n = game.num_actions[agent];
  Vector target(n);
  for (int a = 0; a < n; ++a) {
    const int row = game.JointIndexFor(agent, a, opponent_action);
    target(a) = game.rewards[agent][s](a, opponent_action) +
                game.gamma * game.kernel[s].row(row).dot(v);
  }
  return target;
}

inline double PayoffBasedTarget(double reward, double gamma, double v_next) {
  return reward + gamma * v_next;
}

// (1 - beta) v + beta mu^T q.
inline double ValueUpdate(double v, const VectorRef& mu, const VectorRef& q, double beta) {
  return v + beta * (mu.dot(q) - v);
}

// Distribution whose inner product with q enters the value update: the full
// smoothed best response for tau > 0, the played action otherwise.
inline MixedStrategy ValueWeights(const VectorRef& q, double tau, int played) {
  if (tau > 0.0) return SmoothedBestResponse(q, tau);
  return PureStrategy(static_cast<int>(q.size()), played);
}

// Records the outcome of the stage just played. The opponent action is kept
// only when it was observed.
inline void RecordOutcome(AgentStateSG& st, int state, int own_action,
                          std::optional<int> opponent_action, double reward) {
  st.pending = PendingStage{state, own_action, opponent_action, reward};
  ++st.k;
}

// Delayed update for the previous stage, run once the current state is known.
//
// At s = previous state and t = visits[s]: q(s) moves toward the model-based
// target if the opponent was observed and the model is known, else toward
// r + gamma v(current_state) on the played coordinate only; v(s) moves toward
// mu^T q_old(s); visits[s] increments. No-op when nothing is pending.
//
// The game is read for gamma always and for rewards and kernel only on the
// model-based branch.
inline void ApplyPendingUpdate(AgentStateSG& st, const AgentConfigSG& cfg, int agent,
                               const StochasticGame& game, int current_state) {
  const int n_states = st.num_states();
  if (current_state < 0 || current_state >= n_states) {
    throw StructuralError("current state out of range");
  }
  const std::int64_t processed = std::accumulate(st.visits.begin(), st.visits.end(),
                                                 std::int64_t{0});
  if (processed + (st.pending ? 1 : 0) != st.k) {
    throw StructuralError("stage record does not match the stage counter");
  }
  if (!st.pending) return;
  const PendingStage& p = *st.pending;
  if (p.state < 0 || p.state >= n_states || p.own_action < 0 ||
      p.own_action >= st.q[p.state].size() ||
      (p.opponent_action &&
       (*p.opponent_action < 0 || *p.opponent_action >= game.num_actions[1 - agent]))) {
    throw StructuralError("inconsistent record of the previous stage");
  }
  const int s = p.state;
  const std::int64_t t = st.visits[s];
  const Vector q_old = st.q[s];
  const double alpha = cfg.alpha(t);
  if (p.opponent_action && cfg.knows_model) {
    st.q[s] = q_old + alpha * (ModelBasedTarget(game, agent, s, *p.opponent_action, st.v) - q_old);
  } else {
    const double target = PayoffBasedTarget(p.reward, game.gamma, st.v(current_state));
    const Vector step = PayoffBasedStep(q_old, cfg.tau, p.own_action, alpha);
    st.q[s] = LocalQUpdate(q_old, Vector::Constant(q_old.size(), target), step);
  }
  st.v(s) = ValueUpdate(st.v(s), ValueWeights(q_old, cfg.tau, p.own_action), q_old, cfg.beta(t));
  ++st.visits[s];
  st.pending.reset();
}

// One stage: the delayed update, then action selection at `current_state`.
inline int StochasticLearnerStage(AgentStateSG& st, const AgentConfigSG& cfg, int agent,
                        const StochasticGame& game, int current_state, CounterRng& rng) {
  ApplyPendingUpdate(st, cfg, agent, game, current_state);
  return SelectAction(st.q[current_state], cfg.tau, rng);
}

}  // namespace hetlearn

#endif  // HETLEARN_SG_LEARNERS_HPP_

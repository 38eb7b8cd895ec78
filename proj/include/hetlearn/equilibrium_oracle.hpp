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

#ifndef HETLEARN_EQUILIBRIUM_ORACLE_HPP_
#define HETLEARN_EQUILIBRIUM_ORACLE_HPP_

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "hetlearn/errors.hpp"
#include "hetlearn/game_model.hpp"
#include "hetlearn/response_kernel.hpp"

namespace hetlearn {

// Q^i(s, a) = r^i(s, a) + gamma * sum_s' p(s' | s, a) v(s') for every state,
// as own actions x opponent actions.
inline std::vector<Matrix> GlobalQFromValues(const StochasticGame& game, int agent,
                                             const VectorRef& v) {
  if (v.size() != game.num_states) throw StructuralError("value vector has wrong length");
  const int n_own = game.num_actions[agent];
  const int n_opp = game.num_actions[1 - agent];
  std::vector<Matrix> q(game.num_states);
  for (int s = 0; s < game.num_states; ++s) {
    const Vector continuation = game.kernel[s] * v;
    q[s] = game.rewards[agent][s];
    for (int a = 0; a < n_own; ++a)
      for (int b = 0; b < n_opp; ++b) {
        q[s](a, b) += game.gamma * continuation(game.JointIndexFor(agent, a, b));
      }
  }
  return q;
}

struct EquilibriumSolution {
  std::array<std::vector<Matrix>, 2> q_star;  // per agent, per state: own x opponent
  std::array<Vector, 2> v_star;
  std::vector<std::array<MixedStrategy, 2>> pi_star;  // per state
  int iterations = 0;
  // Bound on ||v - v*||_inf implied by the last contraction step.
  double residual = 0.0;
};

// Value iteration v <- val(r + gamma P v). Stops once a step moves v by at
// most tol (1 - gamma) / (2 gamma), which puts v within tol / 2 of the fixed
// point.
inline EquilibriumSolution ShapleyIterate(const StochasticGame& game, double tol = 1e-9,
                                          int max_iterations = 100000) {
  if (!ValidateStochasticGame(game).is_zero_sum) {
    throw DomainError("value iteration needs a zero-sum stochastic game");
  }
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  const double gamma = game.gamma;
  const double threshold =
      gamma == 0.0 ? std::numeric_limits<double>::infinity() : tol * (1.0 - gamma) / (2.0 * gamma);
  EquilibriumSolution sol;
  Vector v = Vector::Zero(game.num_states);
  double prev_change = std::numeric_limits<double>::infinity();
  while (true) {
    const std::vector<Matrix> q = GlobalQFromValues(game, 0, v);
    Vector next(game.num_states);
    for (int s = 0; s < game.num_states; ++s) next(s) = MinimaxValue(q[s]).value;
    const double change = (next - v).cwiseAbs().maxCoeff();
    ++sol.iterations;
    if (std::isfinite(prev_change) && change > gamma * prev_change + 1e-12) {
      throw NumericalError("value iteration failed to contract", change);
    }
    prev_change = change;
    v = next;
    sol.residual = gamma == 0.0 ? 0.0 : gamma / (1.0 - gamma) * change;
    if (change <= threshold) break;
    if (sol.iterations >= max_iterations) {
      throw NumericalError("value iteration hit the iteration limit", sol.residual);
    }
  }
  sol.q_star[0] = GlobalQFromValues(game, 0, v);
  sol.q_star[1] = GlobalQFromValues(game, 1, -v);
  sol.v_star = {v, -v};
  for (int s = 0; s < game.num_states; ++s) {
    const ValueCertificate c = MinimaxValue(sol.q_star[0][s]);
    sol.pi_star.push_back({c.maximizer, c.minimizer});
  }
  return sol;
}

// Discounted values of both agents under fixed Markov strategies, by solving
// (I - gamma P_pi) U = r_pi with a dense LU.
inline std::array<Vector, 2> PolicyEvaluation(
    const StochasticGame& game, const std::vector<std::array<MixedStrategy, 2>>& policy) {
  const int n = game.num_states;
  if (policy.size() != static_cast<std::size_t>(n)) {
    throw StructuralError("need one strategy pair per state");
  }
  Matrix p_pi = Matrix::Zero(n, n);
  Matrix r_pi = Matrix::Zero(n, 2);
  for (int s = 0; s < n; ++s) {
    const MixedStrategy& x = policy[s][0];
    const MixedStrategy& y = policy[s][1];
    if (x.size() != game.num_actions[0] || y.size() != game.num_actions[1]) {
      throw StructuralError("strategy has wrong length");
    }
    for (int a1 = 0; a1 < game.num_actions[0]; ++a1)
      for (int a2 = 0; a2 < game.num_actions[1]; ++a2) {
        const double w = x(a1) * y(a2);
        p_pi.row(s) += w * game.Transition(s, a1, a2);
        r_pi(s, 0) += w * game.rewards[0][s](a1, a2);
        r_pi(s, 1) += w * game.rewards[1][s](a2, a1);
      }
  }
  const Matrix lhs = Matrix::Identity(n, n) - game.gamma * p_pi;
  const Matrix u = lhs.partialPivLu().solve(r_pi);
  return {u.col(0), u.col(1)};
}

// Asymptotic bound on |v_t - v*| for the stochastic-game learners; valid for
// gamma in [0, d/2).
inline double ValueErrorBound(double d, double gamma, double tau1, double tau2, int n1, int n2) {
  if (!(d > 0.0 && d <= 1.0)) throw DomainError("step-size ratio d must lie in (0, 1]");
  if (!(gamma >= 0.0 && gamma < d / 2.0)) {
    throw DomainError("the bound needs gamma in [0, d/2)");
  }
  const double entropy_scale = tau1 * std::log(static_cast<double>(n1)) +
                               tau2 * std::log(static_cast<double>(n2));
  return (2.0 * d + 2.0 * gamma - 3.0 * gamma * d) / ((1.0 - gamma) * (d - 2.0 * gamma)) *
         entropy_scale;
}

struct ValueBand {
  double upper = 0.0;
  double lower = 0.0;
};

// Limits of u^i(pi^i, pi^j) - reg_val^i in near zero-sum matrix games, with
// step-size weights (d^1, d^2) = (1, d).
inline std::array<ValueBand, 2> PayoffGapBounds(double d, double deviation) {
  if (!(d > 0.0 && d <= 1.0)) throw DomainError("step-size ratio d must lie in (0, 1]");
  const std::array<double, 2> weight = {1.0, d};
  std::array<ValueBand, 2> out;
  for (int i = 0; i < 2; ++i) {
    out[i].upper = 2.0 / weight[i] * deviation;
    out[i].lower = -2.0 * (1.0 + 1.0 / weight[1 - i]) * deviation;
  }
  return out;
}

// Suboptimality bound for one stochastic-game learner against a stationary
// opponent; needs gamma < 1/2.
inline double StationaryOpponentBound(double gamma, double tau, int n_actions) {
  if (!(gamma >= 0.0 && gamma < 0.5)) throw DomainError("the bound needs gamma in [0, 1/2)");
  return (2.0 - gamma) * tau * std::log(static_cast<double>(n_actions)) /
         ((1.0 - gamma) * (1.0 - 2.0 * gamma));
}

// Single-agent game seen by `agent` when the opponent plays the fixed Markov
// strategy `opponent` (one mixed strategy per state): the opponent gets one
// dummy action, and rewards and transitions are averaged under its strategy.
inline StochasticGame InducedSingleAgentGame(const StochasticGame& game, int agent,
                                             const std::vector<MixedStrategy>& opponent) {
  const int n_own = game.num_actions[agent];
  StochasticGame out;
  out.num_states = game.num_states;
  out.num_actions = {n_own, 1};
  out.gamma = game.gamma;
  for (int s = 0; s < game.num_states; ++s) {
    const MixedStrategy& y = opponent.at(s);
    if (y.size() != game.num_actions[1 - agent]) {
      throw StructuralError("opponent strategy has wrong length");
    }
    Matrix r = game.rewards[agent][s] * y;
    Matrix block = Matrix::Zero(n_own, game.num_states);
    for (int a = 0; a < n_own; ++a)
      for (int b = 0; b < y.size(); ++b) {
        block.row(a) += y(b) * game.kernel[s].row(game.JointIndexFor(agent, a, b));
      }
    out.rewards[0].push_back(r);
    out.rewards[1].push_back(-r.transpose());
    out.kernel.push_back(block);
  }
  return out;
}

}  // namespace hetlearn

#endif  // HETLEARN_EQUILIBRIUM_ORACLE_HPP_

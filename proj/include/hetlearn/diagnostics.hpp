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

#ifndef HETLEARN_DIAGNOSTICS_HPP_
#define HETLEARN_DIAGNOSTICS_HPP_

#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Dense>

#include "hetlearn/errors.hpp"
#include "hetlearn/game_model.hpp"
#include "hetlearn/response_kernel.hpp"

namespace hetlearn {

inline constexpr double kDefaultLambda = 1.001;

// ||q - R pi||_2.
inline double TrackingError(const VectorRef& q, const MatrixRef& r, const VectorRef& pi) {
  return (q - r * pi).norm();
}

// Strategy the agent's response rule assigns to q: the lowest-index argmax
// for tau = 0, the smoothed best response otherwise.
inline MixedStrategy ResponseStrategy(const VectorRef& q, double tau) {
  if (tau == 0.0) return PureStrategy(static_cast<int>(q.size()), BestResponse(q));
  return SmoothedBestResponse(q, tau);
}

// mu^T q + tau_i H(mu) - tau_j H(pi_j) - reg_val.
inline double Delta(const VectorRef& mu, const VectorRef& q, const VectorRef& pi_j, double tau_i,
                    double tau_j, double reg_val) {
  return mu.dot(q) + tau_i * Entropy(mu) - tau_j * Entropy(pi_j) - reg_val;
}

// Regularized payoff u^i(x, y) = x^T R y + tau_i H(x) - tau_j H(y).
inline double RegularizedPayoff(const MatrixRef& r, const VectorRef& x, const VectorRef& y,
                                double tau_i, double tau_j) {
  return x.dot(r * y) + tau_i * Entropy(x) - tau_j * Entropy(y);
}

// lambda * ||R1 + R2^T||_max - (reg_val1 + reg_val2).
inline double StageConstantC(double deviation, double reg_val1, double reg_val2, double lambda) {
  if (!(lambda > 1.0)) throw DomainError("lambda must exceed 1");
  return lambda * deviation - (reg_val1 + reg_val2);
}

inline double StageConstantC(const MatrixGame& g, std::array<double, 2> taus,
                             double lambda = kDefaultLambda) {
  if (!(lambda > 1.0)) throw DomainError("lambda must exceed 1");
  const double deviation = ValidateMatrixGame(g).deviation;
  const double v1 = RegularizedValue(g.r1, taus[0], taus[1]).value;
  const double v2 = RegularizedValue(g.r2, taus[1], taus[0]).value;
  return StageConstantC(deviation, v1, v2, lambda);
}

// max_mu {mu^T q + tau_i H(mu)} - tau_j H(pi_j) + ||q - R pi_j||_2 - reg_val.
inline double LyapunovTerm(const VectorRef& q, const VectorRef& pi_j, const MatrixRef& r,
                           double tau_i, double tau_j, double reg_val) {
  return SoftMax(q, tau_i) - tau_j * Entropy(pi_j) + TrackingError(q, r, pi_j) - reg_val;
}

// Everything the Lyapunov function needs about a game, computed once.
struct LyapunovContext {
  std::array<double, 2> reg_val = {0.0, 0.0};
  double c = 0.0;
};

inline LyapunovContext MakeLyapunovContext(const MatrixGame& g, std::array<double, 2> taus,
                                           double lambda = kDefaultLambda) {
  const double deviation = ValidateMatrixGame(g).deviation;
  LyapunovContext ctx;
  ctx.reg_val[0] = RegularizedValue(g.r1, taus[0], taus[1]).value;
  ctx.reg_val[1] = RegularizedValue(g.r2, taus[1], taus[0]).value;
  ctx.c = StageConstantC(deviation, ctx.reg_val[0], ctx.reg_val[1], lambda);
  return ctx;
}

// (L1 + d L2 - c)_+ + sum_i ||q_i - R_i pi_j||_2.
inline double LyapunovV(const VectorRef& q1, const VectorRef& pi2, const VectorRef& q2,
                        const VectorRef& pi1, const MatrixGame& g, std::array<double, 2> taus,
                        double d, const LyapunovContext& ctx) {
  if (!(d > 0.0 && d <= 1.0)) throw DomainError("step-size ratio d must lie in (0, 1]");
  const double l1 = LyapunovTerm(q1, pi2, g.r1, taus[0], taus[1], ctx.reg_val[0]);
  const double l2 = LyapunovTerm(q2, pi1, g.r2, taus[1], taus[0], ctx.reg_val[1]);
  return std::max(0.0, l1 + d * l2 - ctx.c) + TrackingError(q1, g.r1, pi2) +
         TrackingError(q2, g.r2, pi1);
}

inline double LyapunovV(const VectorRef& q1, const VectorRef& pi2, const VectorRef& q2,
                        const VectorRef& pi1, const MatrixGame& g, std::array<double, 2> taus,
                        double d, double lambda = kDefaultLambda) {
  return LyapunovV(q1, pi2, q2, pi1, g, taus, d, MakeLyapunovContext(g, taus, lambda));
}

}  // namespace hetlearn

#endif  // HETLEARN_DIAGNOSTICS_HPP_

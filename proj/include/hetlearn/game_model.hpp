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

#ifndef HETLEARN_GAME_MODEL_HPP_
#define HETLEARN_GAME_MODEL_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hetlearn/errors.hpp"
#include "hetlearn/rng.hpp"

namespace hetlearn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kZeroSumTolerance = 1e-12;
inline constexpr double kKernelTolerance = 1e-12;
// Generated kernel rows with any entry below this are redrawn.
inline constexpr double kDirichletFloor = 1e-6;

// Two-agent matrix game. r1 is |A1| x |A2| (agent 1's payoffs), r2 is
// |A2| x |A1| (agent 2's payoffs, indexed own action first).
struct MatrixGame {
  Matrix r1;
  Matrix r2;

  int num_actions(int agent) const {
    return agent == 0 ? static_cast<int>(r1.rows()) : static_cast<int>(r2.rows());
  }
  const Matrix& payoff(int agent) const { return agent == 0 ? r1 : r2; }
};

struct MatrixGameReport {
  // max |R1 + R2^T|; zero iff the game is exactly zero-sum.
  double deviation = 0.0;
  // Extreme entries of R1 + R2^T.
  double r_min = 0.0;
  double r_max = 0.0;
};

inline MatrixGameReport ValidateMatrixGame(const MatrixGame& g) {
  if (g.r1.size() == 0 || g.r2.size() == 0) {
    throw StructuralError("matrix game has an empty payoff matrix");
  }
  if (g.r2.rows() != g.r1.cols() || g.r2.cols() != g.r1.rows()) {
    throw StructuralError("R2 must be " + std::to_string(g.r1.cols()) + "x" +
                          std::to_string(g.r1.rows()) + ", got " +
                          std::to_string(g.r2.rows()) + "x" +
                          std::to_string(g.r2.cols()));
  }
  if (!g.r1.allFinite() || !g.r2.allFinite()) {
    throw StructuralError("matrix game has non-finite payoffs");
  }
  const Matrix sum = g.r1 + g.r2.transpose();
  MatrixGameReport report;
  report.deviation = sum.cwiseAbs().maxCoeff();
  report.r_min = sum.minCoeff();
  report.r_max = sum.maxCoeff();
  return report;
}

// Two-agent stochastic game with a common action set per agent at every state.
//
//   rewards[i][s]  agent i's stage payoffs, own actions x opponent actions
//   kernel[s]      (|A1| * |A2|) x |S|; row a1 * |A2| + a2 is p(. | s, a1, a2)
struct StochasticGame {
  int num_states = 0;
  std::array<int, 2> num_actions = {0, 0};
  std::array<std::vector<Matrix>, 2> rewards;
  std::vector<Matrix> kernel;
  double gamma = 0.0;

  int JointIndex(int a1, int a2) const { return a1 * num_actions[1] + a2; }

  // Joint index from agent `agent`'s perspective (own action first).
  int JointIndexFor(int agent, int own, int opp) const {
    return agent == 0 ? JointIndex(own, opp) : JointIndex(opp, own);
  }

  double Reward(int agent, int s, int own, int opp) const {
    return rewards[agent][s](own, opp);
  }

  auto Transition(int s, int a1, int a2) const {
    return kernel[s].row(JointIndex(a1, a2));
  }

  MatrixGame StageGame(int s) const { return {rewards[0][s], rewards[1][s]}; }
};

struct StochasticGameReport {
  bool is_zero_sum = false;
  bool kernel_ok = false;
};

// Dimensions only; stochasticity of the kernel is checked by
// ValidateStochasticGame.
inline void CheckStochasticGameShape(const StochasticGame& m) {
  if (m.num_states < 1) throw StructuralError("stochastic game needs at least one state");
  if (m.num_actions[0] < 1 || m.num_actions[1] < 1) {
    throw StructuralError("every agent needs at least one action");
  }
  if (!(m.gamma >= 0.0 && m.gamma < 1.0)) {
    throw DomainError("discount factor must lie in [0, 1)");
  }
  const auto s_count = static_cast<std::size_t>(m.num_states);
  if (m.rewards[0].size() != s_count || m.rewards[1].size() != s_count ||
      m.kernel.size() != s_count) {
    throw StructuralError("rewards and kernel must have one entry per state");
  }
  for (int s = 0; s < m.num_states; ++s) {
    for (int i = 0; i < 2; ++i) {
      const Matrix& r = m.rewards[i][s];
      if (r.rows() != m.num_actions[i] || r.cols() != m.num_actions[1 - i]) {
        throw StructuralError("reward matrix of agent " + std::to_string(i + 1) +
                              " at state " + std::to_string(s) + " has wrong shape");
      }
      if (!r.allFinite()) throw StructuralError("non-finite reward");
    }
    if (m.kernel[s].rows() != m.num_actions[0] * m.num_actions[1] ||
        m.kernel[s].cols() != m.num_states) {
      throw StructuralError("kernel block at state " + std::to_string(s) +
                            " has wrong shape");
    }
  }
}

inline StochasticGameReport ValidateStochasticGame(const StochasticGame& m) {
  CheckStochasticGameShape(m);
  StochasticGameReport report;
  for (int s = 0; s < m.num_states; ++s) {
    const Matrix& block = m.kernel[s];
    for (int row = 0; row < block.rows(); ++row) {
      if ((block.row(row).array() < 0.0).any() || !block.row(row).allFinite()) {
        throw KernelError("negative or non-finite transition probability at state " +
                          std::to_string(s));
      }
      const double total = block.row(row).sum();
      if (std::abs(total - 1.0) > kKernelTolerance) {
        throw KernelError("transition row at state " + std::to_string(s) +
                          " sums to " + std::to_string(total));
      }
    }
  }
  report.kernel_ok = true;
  report.is_zero_sum = true;
  for (int s = 0; s < m.num_states && report.is_zero_sum; ++s) {
    const double dev =
        (m.rewards[0][s] + m.rewards[1][s].transpose()).cwiseAbs().maxCoeff();
    report.is_zero_sum = dev <= kZeroSumTolerance;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Reachability under the agents' response modes.

enum class ResponseMode { kBest, kSmoothed };

// Directed graph on the states; adjacency[s][t] marks an edge s -> t.
struct ReachabilityGraph {
  std::vector<std::vector<bool>> adjacency;

  int num_vertices() const { return static_cast<int>(adjacency.size()); }
  bool HasEdge(int s, int t) const { return adjacency[s][t]; }
};

// An edge s -> s' exists iff p(s'|s, a) > 0 for
//   both agents best-responding:   every joint action;
//   only agent i best-responding:  every a^i and at least one a^j;
//   both smoothed:                 at least one joint action.
inline ReachabilityGraph BuildReachabilityGraph(const StochasticGame& m,
                                                std::array<ResponseMode, 2> modes) {
  CheckStochasticGameShape(m);
  const int n1 = m.num_actions[0];
  const int n2 = m.num_actions[1];
  ReachabilityGraph g;
  g.adjacency.assign(m.num_states, std::vector<bool>(m.num_states, false));
  const bool best1 = modes[0] == ResponseMode::kBest;
  const bool best2 = modes[1] == ResponseMode::kBest;
  for (int s = 0; s < m.num_states; ++s) {
    for (int t = 0; t < m.num_states; ++t) {
      auto positive = [&](int a1, int a2) { return m.kernel[s](m.JointIndex(a1, a2), t) > 0.0; };
      bool edge = false;
      if (best1 && best2) {
        edge = true;
        for (int a1 = 0; a1 < n1 && edge; ++a1)
          for (int a2 = 0; a2 < n2 && edge; ++a2) edge = positive(a1, a2);
      } else if (best1 || best2) {
        // The best responder's actions are quantified universally.
        const int best = best1 ? 0 : 1;
        const int n_best = m.num_actions[best];
        const int n_other = m.num_actions[1 - best];
        edge = true;
        for (int a = 0; a < n_best && edge; ++a) {
          bool some = false;
          for (int b = 0; b < n_other && !some; ++b) {
            some = best == 0 ? positive(a, b) : positive(b, a);
          }
          edge = some;
        }
      } else {
        for (int a1 = 0; a1 < n1 && !edge; ++a1)
          for (int a2 = 0; a2 < n2 && !edge; ++a2) edge = positive(a1, a2);
      }
      g.adjacency[s][t] = edge;
    }
  }
  return g;
}

// Tarjan's algorithm, iterative. Returns the component index of each vertex.
inline std::vector<int> StronglyConnectedComponents(const ReachabilityGraph& g) {
  const int n = g.num_vertices();
  std::vector<int> index(n, -1), low(n, 0), component(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<int> stack;
  int next_index = 0;
  int next_component = 0;

  struct Frame {
    int v;
    int next_neighbor;
  };
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    std::vector<Frame> call_stack{{root, 0}};
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call_stack.empty()) {
      Frame& frame = call_stack.back();
      const int v = frame.v;
      if (frame.next_neighbor < n) {
        const int w = frame.next_neighbor++;
        if (!g.adjacency[v][w]) continue;
        if (index[w] == -1) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = true;
          call_stack.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          component[w] = next_component;
        } while (w != v);
        ++next_component;
      }
      call_stack.pop_back();
      if (!call_stack.empty()) {
        const int parent = call_stack.back().v;
        low[parent] = std::min(low[parent], low[v]);
      }
    }
  }
  return component;
}

inline bool IsStronglyConnected(const ReachabilityGraph& g) {
  const auto component = StronglyConnectedComponents(g);
  return std::all_of(component.begin(), component.end(),
                     [](int c) { return c == 0; });
}

// ---------------------------------------------------------------------------
// Random zero-sum stochastic games.

struct RewardRange {
  double lo = 0.0;
  double hi = 1.0;
};

// Draw order: all rewards r1(s, a1, a2) in (s, a1, a2) order, then kernel rows
// in the same order. Each kernel row is Dir(1) (normalized exponentials) and is
// redrawn while any entry is below kDirichletFloor. r2 = -r1^T.
inline StochasticGame GenerateRandomZeroSumGame(int n_states, int n_actions,
                                                 const std::vector<RewardRange>& ranges,
                                                 std::uint64_t seed, double gamma = 0.3) {
  if (n_states < 1 || n_actions < 1) {
    throw StructuralError("need at least one state and one action");
  }
  if (ranges.size() != 1 && ranges.size() != static_cast<std::size_t>(n_states)) {
    throw StructuralError("give one reward range, or one per state");
  }
  for (const auto& r : ranges) {
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi) {
      throw DomainError("reward ranges must be finite with lo <= hi");
    }
  }
  CounterRng rng(seed);
  StochasticGame m;
  m.num_states = n_states;
  m.num_actions = {n_actions, n_actions};
  m.gamma = gamma;
  for (int s = 0; s < n_states; ++s) {
    const RewardRange& range = ranges.size() == 1 ? ranges[0] : ranges[s];
    Matrix r(n_actions, n_actions);
    for (int a1 = 0; a1 < n_actions; ++a1)
      for (int a2 = 0; a2 < n_actions; ++a2) {
        r(a1, a2) = range.lo == range.hi ? range.lo : rng.Uniform(range.lo, range.hi);
      }
    m.rewards[0].push_back(r);
    m.rewards[1].push_back(-r.transpose());
  }
  for (int s = 0; s < n_states; ++s) {
    Matrix block(n_actions * n_actions, n_states);
    for (int row = 0; row < block.rows(); ++row) {
      while (true) {
        for (int t = 0; t < n_states; ++t) block(row, t) = rng.Exponential();
        block.row(row) /= block.row(row).sum();
        if (block.row(row).minCoeff() >= kDirichletFloor) break;
      }
    }
    m.kernel.push_back(block);
  }
  return m;
}

// ---------------------------------------------------------------------------
// JSON.

namespace detail {

inline nlohmann::json MatrixToJson(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix MatrixFromJson(const nlohmann::json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw StructuralError("expected a non-empty nested array");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (j[r].size() != static_cast<std::size_t>(cols)) {
      throw StructuralError("ragged nested array");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

inline nlohmann::json VectorToJson(const Vector& v) {
  nlohmann::json out = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Vector VectorFromJson(const nlohmann::json& j) {
  if (!j.is_array()) throw StructuralError("expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

}  // namespace detail

inline nlohmann::json MatrixGameToJson(const MatrixGame& g) {
  return {{"R1", detail::MatrixToJson(g.r1)}, {"R2", detail::MatrixToJson(g.r2)}};
}

inline MatrixGame MatrixGameFromJson(const nlohmann::json& j) {
  MatrixGame g{detail::MatrixFromJson(j.at("R1")), detail::MatrixFromJson(j.at("R2"))};
  ValidateMatrixGame(g);
  return g;
}

// {states, actions: [n1, n2], rewards[s][a1][a2] (agent 1), rewards2[s][a2][a1]
// (agent 2, written only when the game is not exactly zero-sum),
// kernel[s][a1][a2][s'], gamma}
inline nlohmann::json StochasticGameToJson(const StochasticGame& m) {
  nlohmann::json rewards = nlohmann::json::array();
  nlohmann::json kernel = nlohmann::json::array();
  bool zero_sum = true;
  for (int s = 0; s < m.num_states; ++s) {
    rewards.push_back(detail::MatrixToJson(m.rewards[0][s]));
    if ((m.rewards[0][s] + m.rewards[1][s].transpose()).cwiseAbs().maxCoeff() != 0.0) {
      zero_sum = false;
    }
    nlohmann::json per_a1 = nlohmann::json::array();
    for (int a1 = 0; a1 < m.num_actions[0]; ++a1) {
      nlohmann::json per_a2 = nlohmann::json::array();
      for (int a2 = 0; a2 < m.num_actions[1]; ++a2) {
        per_a2.push_back(detail::VectorToJson(m.Transition(s, a1, a2).transpose()));
      }
      per_a1.push_back(std::move(per_a2));
    }
    kernel.push_back(std::move(per_a1));
  }
  nlohmann::json j = {{"states", m.num_states},
                      {"actions", {m.num_actions[0], m.num_actions[1]}},
                      {"rewards", rewards},
                      {"kernel", kernel},
                      {"gamma", m.gamma}};
  if (!zero_sum) {
    nlohmann::json rewards2 = nlohmann::json::array();
    for (int s = 0; s < m.num_states; ++s) rewards2.push_back(detail::MatrixToJson(m.rewards[1][s]));
    j["rewards2"] = rewards2;
  }
  return j;
}

inline StochasticGame StochasticGameFromJson(const nlohmann::json& j) {
  StochasticGame m;
  m.num_states = j.at("states").get<int>();
  m.num_actions = {j.at("actions").at(0).get<int>(), j.at("actions").at(1).get<int>()};
  m.gamma = j.at("gamma").get<double>();
  const auto& rewards = j.at("rewards");
  const auto& kernel = j.at("kernel");
  if (rewards.size() != static_cast<std::size_t>(m.num_states) ||
      kernel.size() != static_cast<std::size_t>(m.num_states)) {
    throw StructuralError("rewards/kernel must have one entry per state");
  }
  for (int s = 0; s < m.num_states; ++s) {
    m.rewards[0].push_back(detail::MatrixFromJson(rewards[s]));
    if (j.contains("rewards2")) {
      m.rewards[1].push_back(detail::MatrixFromJson(j["rewards2"].at(s)));
    } else {
      m.rewards[1].push_back(-m.rewards[0].back().transpose());
    }
    Matrix block(m.num_actions[0] * m.num_actions[1], m.num_states);
    const auto& ks = kernel[s];
    if (ks.size() != static_cast<std::size_t>(m.num_actions[0])) {
      throw StructuralError("kernel has wrong shape");
    }
    for (int a1 = 0; a1 < m.num_actions[0]; ++a1) {
      if (ks[a1].size() != static_cast<std::size_t>(m.num_actions[1])) {
        throw StructuralError("kernel has wrong shape");
      }
      for (int a2 = 0; a2 < m.num_actions[1]; ++a2) {
        const Vector row = detail::VectorFromJson(ks[a1][a2]);
        if (row.size() != m.num_states) throw StructuralError("kernel has wrong shape");
        block.row(m.JointIndex(a1, a2)) = row.transpose();
      }
    }
    m.kernel.push_back(block);
  }
  CheckStochasticGameShape(m);
  return m;
}

}  // namespace hetlearn

#endif  // HETLEARN_GAME_MODEL_HPP_

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

#ifndef HETLEARN_SIM_HARNESS_HPP_
#define HETLEARN_SIM_HARNESS_HPP_

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hetlearn/diagnostics.hpp"
#include "hetlearn/equilibrium_oracle.hpp"
#include "hetlearn/errors.hpp"
#include "hetlearn/game_model.hpp"
#include "hetlearn/matrix_learners.hpp"
#include "hetlearn/response_kernel.hpp"
#include "hetlearn/rng.hpp"
#include "hetlearn/sg_learners.hpp"

namespace hetlearn {

// ---------------------------------------------------------------------------
// Configuration.

struct AgentSpec {
  double theta = 1.0;
  double tau = 0.0;
  // Knows its payoff matrix (matrix games) or its rewards and the kernel
  // (stochastic games).
  bool knows_model = true;
  StepSchedule alpha{1.0, 0.96};
  StepSchedule beta{1.0, 1.0};
  // Non-empty: the agent does not learn and plays these strategies (one per
  // state; a single entry for matrix games). alpha still weights the
  // opponent's empirical average.
  std::vector<MixedStrategy> fixed_strategy;

  bool stationary() const { return !fixed_strategy.empty(); }
  AgentConfigMG ToMG() const { return {theta, tau, knows_model, alpha}; }
  AgentConfigSG ToSG() const { return {theta, tau, knows_model, alpha, beta}; }
  // Entropy weight in the agent's payoff; zero for stationary agents.
  double effective_tau() const { return stationary() ? 0.0 : tau; }
};

// Full, Temporal, None by how often the opponent's actions are seen.
inline std::string AccessLabel(const AgentSpec& a) {
  if (a.stationary()) return "Stationary";
  if (!a.knows_model || a.theta == 0.0) return "None";
  if (a.theta == 1.0) return "Full";
  return "Temporal";
}

struct ScenarioConfig {
  std::string name = "custom";
  std::optional<MatrixGame> matrix_game;
  std::optional<StochasticGame> stochastic_game;
  // How the game was specified (generator parameters or file name); echoed
  // into run.json.
  nlohmann::json game_source;
  std::array<AgentSpec, 2> agents;
  std::int64_t horizon = 1'000'000;
  int n_trials = 30;
  std::uint64_t base_seed = 0;
  std::int64_t log_interval = 1000;
  double lambda = kDefaultLambda;
  bool diagnostics_enabled = true;
  double q0 = 0.0;
  double v0 = 0.0;

  bool is_stochastic() const { return stochastic_game.has_value(); }
  int num_states() const { return is_stochastic() ? stochastic_game->num_states : 1; }
  int num_actions(int agent) const {
    return is_stochastic() ? stochastic_game->num_actions[agent]
                           : matrix_game->num_actions(agent);
  }
};

// lim alpha1 / alpha2 and the normalized ratio d in (0, 1]. The slower agent
// gets weight 1 and the faster one weight d.
struct StepRatio {
  double raw = 1.0;
  double d = 1.0;
  std::array<double, 2> weights = {1.0, 1.0};
  bool defined = true;
};

inline StepRatio ComputeStepRatio(const StepSchedule& alpha1, const StepSchedule& alpha2) {
  StepRatio r;
  r.raw = LimitRatio(alpha1, alpha2);
  if (r.raw == 0.0 || !std::isfinite(r.raw)) {
    r.defined = false;
    r.d = 0.0;
    return r;
  }
  r.d = std::min(r.raw, 1.0 / r.raw);
  r.weights = r.raw <= 1.0 ? std::array<double, 2>{1.0, r.d} : std::array<double, 2>{r.d, 1.0};
  return r;
}

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  std::optional<bool> strongly_connected;
  StepRatio ratio;

  bool ok() const { return errors.empty(); }
};

inline ValidationReport ValidateScenario(const ScenarioConfig& cfg) {
  ValidationReport rep;
  auto guard = [&rep](auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      rep.errors.emplace_back(e.what());
    }
  };
  if (cfg.matrix_game.has_value() == cfg.stochastic_game.has_value()) {
    rep.errors.emplace_back("exactly one of a matrix game or a stochastic game is required");
    return rep;
  }
  if (cfg.horizon < 1) rep.errors.emplace_back("horizon must be at least 1");
  if (cfg.n_trials < 1) rep.errors.emplace_back("n_trials must be at least 1");
  if (cfg.log_interval < 1) rep.errors.emplace_back("log_interval must be at least 1");
  if (!(cfg.lambda > 1.0)) rep.errors.emplace_back("lambda must exceed 1");
  bool game_ok = true;
  guard([&] {
    try {
      if (cfg.is_stochastic()) {
        ValidateStochasticGame(*cfg.stochastic_game);
      } else {
        ValidateMatrixGame(*cfg.matrix_game);
      }
    } catch (...) {
      game_ok = false;
      throw;
    }
  });
  for (int i = 0; i < 2; ++i) {
    const AgentSpec& a = cfg.agents[i];
    const std::string who = "agent " + std::to_string(i + 1) + ": ";
    if (a.stationary()) {
      if (!game_ok) continue;
      const std::size_t want = static_cast<std::size_t>(cfg.num_states());
      if (a.fixed_strategy.size() != want) {
        rep.errors.push_back(who + "fixed strategy needs one entry per state");
        continue;
      }
      for (const auto& p : a.fixed_strategy) {
        if (p.size() != cfg.num_actions(i) || !IsMixedStrategy(p, 1e-9)) {
          rep.errors.push_back(who + "fixed strategy is not a probability vector over its actions");
          break;
        }
      }
      continue;
    }
    try {
      a.ToSG().Validate();
    } catch (const std::exception& e) {
      rep.errors.push_back(who + e.what() + " (smoothed-response requirement)");
    }
  }
  if (cfg.agents[0].stationary() && cfg.agents[1].stationary()) {
    rep.errors.emplace_back("at least one agent must learn");
  }
  rep.ratio = ComputeStepRatio(cfg.agents[0].alpha, cfg.agents[1].alpha);
  if (!rep.ratio.defined && !cfg.agents[0].stationary() && !cfg.agents[1].stationary()) {
    rep.warnings.emplace_back(
        "step-size ratio alpha1/alpha2 does not converge to a positive limit; "
        "Lyapunov values and ratio-dependent bounds are not reported");
  }
  if (cfg.is_stochastic() && game_ok) {
    std::array<ResponseMode, 2> modes;
    for (int i = 0; i < 2; ++i) {
      modes[i] = cfg.agents[i].effective_tau() == 0.0 && !cfg.agents[i].stationary()
                     ? ResponseMode::kBest
                     : ResponseMode::kSmoothed;
    }
    rep.strongly_connected = IsStronglyConnected(BuildReachabilityGraph(*cfg.stochastic_game, modes));
    if (!*rep.strongly_connected) {
      rep.errors.emplace_back(
          "state reachability graph under the configured response modes is not strongly "
          "connected; some states may be visited only finitely often");
    }
    for (int i = 0; i < 2; ++i) {
      const AgentSpec& a = cfg.agents[i];
      if (!a.stationary() && !(a.beta.exponent() > a.alpha.exponent() ||
                               (a.beta.exponent() == a.alpha.exponent() &&
                                a.beta.scale() > a.alpha.scale()))) {
        rep.warnings.push_back("agent " + std::to_string(i + 1) +
                               ": beta does not decay faster than alpha; the value "
                               "estimates may not run on a slower timescale");
      }
    }
  }
  return rep;
}

inline void RequireValid(const ScenarioConfig& cfg) {
  const ValidationReport rep = ValidateScenario(cfg);
  if (rep.ok()) return;
  std::string msg = "invalid scenario:";
  for (const auto& e : rep.errors) msg += "\n  " + e;
  throw DomainError(msg);
}

// ---------------------------------------------------------------------------
// Presets: a generated 2-state, 2-action zero-sum game with gamma = 0.3 and
// tau = 0.002 for both agents.

inline constexpr std::uint64_t kPresetGameSeed = 20240601;

inline nlohmann::json PresetGameSource(std::uint64_t game_seed = kPresetGameSeed) {
  return {{"random",
           {{"states", 2},
            {"actions", 2},
            {"reward_ranges", {{0.0, 1.0}, {0.0, 0.2}}},
            {"seed", game_seed},
            {"gamma", 0.3}}}};
}

inline StochasticGame GameFromGenerator(const nlohmann::json& spec) {
  std::vector<RewardRange> ranges;
  for (const auto& r : spec.at("reward_ranges")) {
    ranges.push_back({r.at(0).get<double>(), r.at(1).get<double>()});
  }
  return GenerateRandomZeroSumGame(spec.at("states").get<int>(), spec.at("actions").get<int>(),
                                   ranges, spec.at("seed").get<std::uint64_t>(),
                                   spec.value("gamma", 0.3));
}

// 1: Full vs None. 2: Full vs Temporal (theta = 0.5). 3: Full vs Full with
// alpha2 = 1 / (0.92 (k + 1))^0.96 and beta2 = 1 / (0.96 (k + 1)).
inline ScenarioConfig PresetScenario(int which, std::uint64_t game_seed = kPresetGameSeed) {
  if (which < 1 || which > 3) throw StructuralError("presets are scenario1..scenario3");
  ScenarioConfig cfg;
  cfg.name = "scenario" + std::to_string(which);
  cfg.game_source = PresetGameSource(game_seed);
  cfg.stochastic_game = GameFromGenerator(cfg.game_source.at("random"));
  AgentSpec full;
  full.theta = 1.0;
  full.tau = 0.002;
  full.knows_model = true;
  full.alpha = StepSchedule(1.0, 0.96);
  full.beta = StepSchedule(1.0, 1.0);
  AgentSpec second = full;
  if (which == 1) {
    second.theta = 0.0;
    second.knows_model = false;
  } else if (which == 2) {
    second.theta = 0.5;
  } else {
    second.alpha = StepSchedule(0.92, 0.96);
    second.beta = StepSchedule(0.96, 1.0);
  }
  cfg.agents = {full, second};
  return cfg;
}

// ---------------------------------------------------------------------------
// Config JSON.

inline nlohmann::json ScheduleToJson(const StepSchedule& s) {
  return {{"scale", s.scale()}, {"exponent", s.exponent()}};
}

inline StepSchedule ScheduleFromJson(const nlohmann::json& j, StepSchedule fallback) {
  if (j.is_null()) return fallback;
  return StepSchedule(j.value("scale", 1.0), j.value("exponent", fallback.exponent()));
}

inline nlohmann::json AgentToJson(const AgentSpec& a) {
  nlohmann::json j = {{"theta", a.theta},
                      {"tau", a.tau},
                      {"knows_model", a.knows_model},
                      {"alpha", ScheduleToJson(a.alpha)},
                      {"beta", ScheduleToJson(a.beta)}};
  if (a.stationary()) {
    nlohmann::json f = nlohmann::json::array();
    for (const auto& p : a.fixed_strategy) f.push_back(detail::VectorToJson(p));
    j["fixed_strategy"] = f;
  }
  return j;
}

inline AgentSpec AgentFromJson(const nlohmann::json& j) {
  AgentSpec a;
  a.theta = j.value("theta", 1.0);
  a.tau = j.value("tau", 0.0);
  a.knows_model = j.contains("knows_payoff") ? j["knows_payoff"].get<bool>()
                                              : j.value("knows_model", true);
  a.alpha = ScheduleFromJson(j.value("alpha", nlohmann::json()), a.alpha);
  a.beta = ScheduleFromJson(j.value("beta", nlohmann::json()), a.beta);
  if (j.contains("fixed_strategy")) {
    for (const auto& p : j["fixed_strategy"]) a.fixed_strategy.push_back(detail::VectorFromJson(p));
  }
  return a;
}

// Relative game_file paths resolve against `base_dir`.
inline ScenarioConfig ScenarioFromJson(const nlohmann::json& j, const std::string& base_dir = "") {
  ScenarioConfig cfg;
  cfg.name = j.value("name", std::string("custom"));
  nlohmann::json game;
  if (j.contains("game_file")) {
    std::string path = j["game_file"].get<std::string>();
    if (!base_dir.empty() && !path.empty() && path[0] != '/') path = base_dir + "/" + path;
    std::ifstream in(path);
    if (!in) throw StructuralError("cannot open game file " + path);
    try {
      game = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw StructuralError("game file " + path + ": " + e.what());
    }
    cfg.game_source = {{"game_file", j["game_file"]}};
  } else if (j.contains("game")) {
    game = j["game"];
    if (game.contains("random")) cfg.game_source = game;
  } else {
    throw StructuralError("scenario needs a game or a game_file");
  }
  if (game.contains("random")) {
    cfg.stochastic_game = GameFromGenerator(game["random"]);
  } else if (game.contains("R1")) {
    cfg.matrix_game = MatrixGameFromJson(game);
  } else {
    cfg.stochastic_game = StochasticGameFromJson(game);
  }
  if (j.contains("gamma") && cfg.stochastic_game) cfg.stochastic_game->gamma = j["gamma"].get<double>();
  if (j.contains("game_source")) cfg.game_source = j["game_source"];
  const auto& agents = j.at("agents");
  if (!agents.is_array() || agents.size() != 2) throw StructuralError("need exactly two agents");
  cfg.agents = {AgentFromJson(agents[0]), AgentFromJson(agents[1])};
  cfg.horizon = j.value("horizon", cfg.horizon);
  cfg.n_trials = j.value("n_trials", cfg.n_trials);
  cfg.base_seed = j.value("base_seed", cfg.base_seed);
  cfg.log_interval = j.value("log_interval", cfg.log_interval);
  cfg.lambda = j.value("lambda", cfg.lambda);
  cfg.diagnostics_enabled = j.value("diagnostics", cfg.diagnostics_enabled);
  cfg.q0 = j.value("q0", cfg.q0);
  cfg.v0 = j.value("v0", cfg.v0);
  return cfg;
}

inline ScenarioConfig LoadScenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StructuralError("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError("config " + path + ": " + e.what());
  }
  const auto slash = path.find_last_of('/');
  return ScenarioFromJson(j, slash == std::string::npos ? "" : path.substr(0, slash));
}

// Resolved configuration with the game written out in full.
inline nlohmann::json ScenarioToJson(const ScenarioConfig& cfg) {
  nlohmann::json j;
  j["name"] = cfg.name;
  j["game"] = cfg.is_stochastic() ? StochasticGameToJson(*cfg.stochastic_game)
                                  : MatrixGameToJson(*cfg.matrix_game);
  if (!cfg.game_source.is_null()) j["game_source"] = cfg.game_source;
  j["agents"] = {AgentToJson(cfg.agents[0]), AgentToJson(cfg.agents[1])};
  j["horizon"] = cfg.horizon;
  j["n_trials"] = cfg.n_trials;
  j["base_seed"] = cfg.base_seed;
  j["log_interval"] = cfg.log_interval;
  j["lambda"] = cfg.lambda;
  j["diagnostics"] = cfg.diagnostics_enabled;
  j["q0"] = cfg.q0;
  j["v0"] = cfg.v0;
  return j;
}

// ---------------------------------------------------------------------------
// Traces.

// One row per (logged stage, state, agent). Matrix games have no state.
// Unset optionals are written as empty CSV fields.
struct TraceRow {
  std::int64_t k = 0;
  std::optional<int> state;
  int agent = 1;  // 1 or 2
  double v_est_mean = 0.0;
  std::optional<double> v_est_std;
  std::optional<double> v_star;
  std::optional<double> bound_lo;
  std::optional<double> bound_hi;
  std::optional<double> delta;
  std::optional<double> tracking_err;
  std::optional<double> lyapunov;

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

// Learner internals at the end of a trial, indexed by agent.
struct FinalStates {
  std::array<std::vector<Vector>, 2> q;            // per state
  std::array<Vector, 2> v;                         // empty for matrix games
  std::array<std::vector<std::int64_t>, 2> visits;  // empty for matrix games
  std::array<std::vector<MixedStrategy>, 2> pi;    // empirical averages per state
};

struct TrialTrace {
  int trial_id = 0;
  std::vector<TraceRow> rows;
  FinalStates final_states;

  std::int64_t num_samples() const {
    std::int64_t n = 0;
    std::optional<std::int64_t> last;
    for (const auto& r : rows) {
      if (r.k != last) {
        ++n;
        last = r.k;
      }
    }
    return n;
  }
};

// Quantities shared by every trial of a run.
struct RunContext {
  StepRatio ratio;
  std::array<std::vector<std::optional<double>>, 2> v_star;  // [agent][state]
  std::array<std::vector<std::optional<double>>, 2> bound_lo;
  std::array<std::vector<std::optional<double>>, 2> bound_hi;
  // Half-width of the value band for stochastic games, when it applies.
  std::optional<double> band;
  std::optional<LyapunovContext> lyapunov;  // matrix games with two learners
  std::optional<EquilibriumSolution> equilibrium;
};

inline RunContext MakeRunContext(const ScenarioConfig& cfg) {
  RequireValid(cfg);
  RunContext ctx;
  ctx.ratio = ComputeStepRatio(cfg.agents[0].alpha, cfg.agents[1].alpha);
  const int n_states = cfg.num_states();
  for (int i = 0; i < 2; ++i) {
    ctx.v_star[i].assign(n_states, std::nullopt);
    ctx.bound_lo[i].assign(n_states, std::nullopt);
    ctx.bound_hi[i].assign(n_states, std::nullopt);
  }
  const bool two_learners = !cfg.agents[0].stationary() && !cfg.agents[1].stationary();
  const std::array<double, 2> taus = {cfg.agents[0].effective_tau(), cfg.agents[1].effective_tau()};
  if (!cfg.is_stochastic()) {
    const MatrixGame& g = *cfg.matrix_game;
    if (two_learners) {
      ctx.lyapunov = MakeLyapunovContext(g, taus, cfg.lambda);
      std::optional<std::array<ValueBand, 2>> bands;
      if (ctx.ratio.defined) {
        const double dev = ValidateMatrixGame(g).deviation;
        bands = PayoffGapBounds(ctx.ratio.d, dev);
        if (ctx.ratio.raw > 1.0) std::swap((*bands)[0], (*bands)[1]);
      }
      for (int i = 0; i < 2; ++i) {
        ctx.v_star[i][0] = ctx.lyapunov->reg_val[i];
        if (bands) {
          ctx.bound_lo[i][0] = ctx.lyapunov->reg_val[i] + (*bands)[i].lower;
          ctx.bound_hi[i][0] = ctx.lyapunov->reg_val[i] + (*bands)[i].upper;
        }
      }
    } else {
      const int i = cfg.agents[0].stationary() ? 1 : 0;
      const Vector payoff = g.payoff(i) * cfg.agents[1 - i].fixed_strategy[0];
      ctx.v_star[i][0] = SoftMax(payoff, taus[i]);
    }
    return ctx;
  }
  const StochasticGame& game = *cfg.stochastic_game;
  if (two_learners) {
    if (!ValidateStochasticGame(game).is_zero_sum) return ctx;
    ctx.equilibrium = ShapleyIterate(game);
    if (ctx.ratio.defined && game.gamma < ctx.ratio.d / 2.0) {
      ctx.band = ValueErrorBound(ctx.ratio.d, game.gamma, taus[0], taus[1], game.num_actions[0],
                               game.num_actions[1]);
    }
    for (int i = 0; i < 2; ++i)
      for (int s = 0; s < n_states; ++s) ctx.v_star[i][s] = ctx.equilibrium->v_star[i](s);
  } else {
    const int i = cfg.agents[0].stationary() ? 1 : 0;
    const StochasticGame induced =
        InducedSingleAgentGame(game, i, cfg.agents[1 - i].fixed_strategy);
    ctx.equilibrium = ShapleyIterate(induced);
    if (game.gamma < 0.5) ctx.band = StationaryOpponentBound(game.gamma, taus[i], game.num_actions[i]);
    for (int s = 0; s < n_states; ++s) ctx.v_star[i][s] = ctx.equilibrium->v_star[0](s);
  }
  if (ctx.band) {
    for (int i = 0; i < 2; ++i)
      for (int s = 0; s < n_states; ++s) {
        if (!ctx.v_star[i][s]) continue;
        ctx.bound_lo[i][s] = *ctx.v_star[i][s] - *ctx.band;
        ctx.bound_hi[i][s] = *ctx.v_star[i][s] + *ctx.band;
      }
  }
  return ctx;
}

// Stream keys of one trial: environment, agent 1, agent 2.
inline std::array<std::uint64_t, 3> TrialStreamKeys(std::uint64_t base_seed, int trial_id) {
  const std::uint64_t trial_seed = DeriveSeed(base_seed, static_cast<std::uint64_t>(trial_id));
  return {DeriveSeed(trial_seed, 0), DeriveSeed(trial_seed, 1), DeriveSeed(trial_seed, 2)};
}

struct StageRecord {
  std::int64_t k = 0;
  int state = 0;
  std::array<bool, 2> observed = {false, false};
  std::array<int, 2> actions = {0, 0};
  std::array<double, 2> rewards = {0.0, 0.0};
  int next_state = 0;
};

inline int SampleFixed(const MixedStrategy& p, CounterRng& rng) {
  return rng.Categorical(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
}

// Repeated matrix game. Each Step() draws both observation flags, lets both
// agents choose from their stage-k states, then applies both updates.
class MatrixTrialRunner {
 public:
  MatrixTrialRunner(const ScenarioConfig& cfg, int trial_id)
      : cfg_(cfg), game_(*cfg.matrix_game), env_(0), rngs_{CounterRng(0), CounterRng(0)} {
    const auto keys = TrialStreamKeys(cfg.base_seed, trial_id);
    env_ = CounterRng(keys[0]);
    rngs_ = {CounterRng(keys[1]), CounterRng(keys[2])};
    for (int i = 0; i < 2; ++i) {
      agents_[i] = InitialStateMG(game_.num_actions(i), cfg.q0);
      averages_[i] = EmpiricalAverage::Uniform(game_.num_actions(i));
      configs_[i] = cfg.agents[i].ToMG();
    }
  }

  StageRecord Step() {
    StageRecord rec;
    rec.k = k_;
    for (int i = 0; i < 2; ++i) rec.observed[i] = env_.Bernoulli(cfg_.agents[i].theta);
    for (int i = 0; i < 2; ++i) {
      rec.actions[i] = cfg_.agents[i].stationary()
                           ? SampleFixed(cfg_.agents[i].fixed_strategy[0], rngs_[i])
                           : SelectAction(agents_[i], configs_[i], rec.observed[i], rngs_[i]);
    }
    rec.rewards[0] = game_.r1(rec.actions[0], rec.actions[1]);
    rec.rewards[1] = game_.r2(rec.actions[1], rec.actions[0]);
    for (int i = 0; i < 2; ++i) {
      if (cfg_.agents[i].stationary()) continue;
      StageObservation obs;
      obs.own_action = rec.actions[i];
      obs.reward = rec.rewards[i];
      if (rec.observed[i]) obs.opponent_action = rec.actions[1 - i];
      agents_[i] = MatrixLearnerUpdate(agents_[i], configs_[i], &game_.payoff(i), obs);
    }
    for (int i = 0; i < 2; ++i) {
      averages_[i].Step(rec.actions[i], cfg_.agents[1 - i].alpha(k_));
    }
    ++k_;
    return rec;
  }

  std::int64_t stage() const { return k_; }
  const AgentStateMG& agent(int i) const { return agents_[i]; }
  const EmpiricalAverage& average(int i) const { return averages_[i]; }
  const CounterRng& rng(int i) const { return rngs_[i]; }

 private:
  const ScenarioConfig& cfg_;
  const MatrixGame& game_;
  CounterRng env_;
  std::array<CounterRng, 2> rngs_;
  std::array<AgentStateMG, 2> agents_;
  std::array<EmpiricalAverage, 2> averages_;
  std::array<AgentConfigMG, 2> configs_;
  std::int64_t k_ = 0;
};

// Stochastic game started at state 0. Each Step() draws both observation
// flags, lets both agents choose at the current state, resolves rewards and
// the next state, then runs both agents' delayed updates for this stage. The
// update needs only the next state, so running it here instead of at the
// start of the next stage changes nothing and keeps logged states current.
class StochasticTrialRunner {
 public:
  StochasticTrialRunner(const ScenarioConfig& cfg, int trial_id)
      : cfg_(cfg), game_(*cfg.stochastic_game), env_(0), rngs_{CounterRng(0), CounterRng(0)} {
    const auto keys = TrialStreamKeys(cfg.base_seed, trial_id);
    env_ = CounterRng(keys[0]);
    rngs_ = {CounterRng(keys[1]), CounterRng(keys[2])};
    plays_.assign(game_.num_states, 0);
    for (int i = 0; i < 2; ++i) {
      agents_[i] = InitialStateSG(game_.num_states, game_.num_actions[i], cfg.q0, cfg.v0);
      averages_[i].assign(game_.num_states, EmpiricalAverage::Uniform(game_.num_actions[i]));
      configs_[i] = cfg.agents[i].ToSG();
    }
  }

  StageRecord Step() {
    StageRecord rec;
    rec.k = k_;
    rec.state = state_;
    for (int i = 0; i < 2; ++i) rec.observed[i] = env_.Bernoulli(cfg_.agents[i].theta);
    for (int i = 0; i < 2; ++i) {
      rec.actions[i] =
          cfg_.agents[i].stationary()
              ? SampleFixed(cfg_.agents[i].fixed_strategy[state_], rngs_[i])
              : StochasticLearnerStage(agents_[i], configs_[i], i, game_, state_, rngs_[i]);
    }
    const std::int64_t t = plays_[state_];
    for (int i = 0; i < 2; ++i) {
      averages_[i][state_].Step(rec.actions[i], cfg_.agents[1 - i].alpha(t));
    }
    ++plays_[state_];
    rec.rewards[0] = game_.rewards[0][state_](rec.actions[0], rec.actions[1]);
    rec.rewards[1] = game_.rewards[1][state_](rec.actions[1], rec.actions[0]);
    const auto row = game_.Transition(state_, rec.actions[0], rec.actions[1]);
    rec.next_state = env_.Categorical(
        std::span<const double>(row.data(), static_cast<std::size_t>(game_.num_states)));
    for (int i = 0; i < 2; ++i) {
      if (cfg_.agents[i].stationary()) continue;
      std::optional<int> opp;
      if (rec.observed[i]) opp = rec.actions[1 - i];
      RecordOutcome(agents_[i], state_, rec.actions[i], opp, rec.rewards[i]);
      ApplyPendingUpdate(agents_[i], configs_[i], i, game_, rec.next_state);
    }
    state_ = rec.next_state;
    ++k_;
    return rec;
  }

  std::int64_t stage() const { return k_; }
  int state() const { return state_; }
  const AgentStateSG& agent(int i) const { return agents_[i]; }
  const EmpiricalAverage& average(int i, int s) const { return averages_[i][s]; }
  const CounterRng& rng(int i) const { return rngs_[i]; }

 private:
  const ScenarioConfig& cfg_;
  const StochasticGame& game_;
  CounterRng env_;
  std::array<CounterRng, 2> rngs_;
  std::array<AgentStateSG, 2> agents_;
  std::array<std::vector<EmpiricalAverage>, 2> averages_;
  std::array<AgentConfigSG, 2> configs_;
  std::vector<std::int64_t> plays_;
  int state_ = 0;
  std::int64_t k_ = 0;
};

namespace detail {

inline bool IsLogStage(std::int64_t completed, std::int64_t horizon, std::int64_t interval) {
  return completed % interval == 0 || completed == horizon;
}

inline void AppendMatrixSample(const ScenarioConfig& cfg, const RunContext& ctx,
                               const MatrixTrialRunner& run, std::vector<TraceRow>& rows) {
  const MatrixGame& g = *cfg.matrix_game;
  const std::array<double, 2> taus = {cfg.agents[0].effective_tau(), cfg.agents[1].effective_tau()};
  std::optional<double> lyap;
  if (cfg.diagnostics_enabled && ctx.lyapunov && ctx.ratio.defined) {
    const auto& w = ctx.ratio.weights;
    const double l1 = LyapunovTerm(run.agent(0).q, run.average(1).pi, g.r1, taus[0], taus[1],
                                   ctx.lyapunov->reg_val[0]);
    const double l2 = LyapunovTerm(run.agent(1).q, run.average(0).pi, g.r2, taus[1], taus[0],
                                   ctx.lyapunov->reg_val[1]);
    lyap = std::max(0.0, w[0] * l1 + w[1] * l2 - ctx.lyapunov->c) +
           TrackingError(run.agent(0).q, g.r1, run.average(1).pi) +
           TrackingError(run.agent(1).q, g.r2, run.average(0).pi);
  }
  for (int i = 0; i < 2; ++i) {
    const int j = 1 - i;
    TraceRow row;
    row.k = run.stage();
    row.agent = i + 1;
    row.v_est_mean =
        RegularizedPayoff(g.payoff(i), run.average(i).pi, run.average(j).pi, taus[i], taus[j]);
    row.v_star = ctx.v_star[i][0];
    row.bound_lo = ctx.bound_lo[i][0];
    row.bound_hi = ctx.bound_hi[i][0];
    if (cfg.diagnostics_enabled && !cfg.agents[i].stationary()) {
      const Vector& q = run.agent(i).q;
      row.tracking_err = TrackingError(q, g.payoff(i), run.average(j).pi);
      const double reg_val = ctx.lyapunov ? ctx.lyapunov->reg_val[i] : *ctx.v_star[i][0];
      row.delta = Delta(ResponseStrategy(q, taus[i]), q, run.average(j).pi, taus[i], taus[j], reg_val);
      row.lyapunov = lyap;
    }
    if (!std::isfinite(row.v_est_mean) || !run.agent(i).q.allFinite()) {
      throw NumericalError("non-finite iterate at trace row " + std::to_string(rows.size()), 0.0);
    }
    rows.push_back(row);
  }
}

inline void AppendStochasticSample(const ScenarioConfig& cfg, const RunContext& ctx,
                                   const StochasticTrialRunner& run, std::vector<TraceRow>& rows) {
  const StochasticGame& game = *cfg.stochastic_game;
  const std::array<double, 2> taus = {cfg.agents[0].effective_tau(), cfg.agents[1].effective_tau()};
  std::array<bool, 2> learner = {!cfg.agents[0].stationary(), !cfg.agents[1].stationary()};
  std::array<std::vector<Matrix>, 2> global_q;
  if (cfg.diagnostics_enabled) {
    for (int i = 0; i < 2; ++i) {
      if (learner[i]) global_q[i] = GlobalQFromValues(game, i, run.agent(i).v);
    }
  }
  for (int s = 0; s < game.num_states; ++s) {
    std::array<std::optional<double>, 2> delta, tracking, lterm;
    std::array<double, 2> reg_val = {0.0, 0.0};
    if (cfg.diagnostics_enabled) {
      for (int i = 0; i < 2; ++i) {
        if (!learner[i]) continue;
        const int j = 1 - i;
        const Vector& q = run.agent(i).q[s];
        const MixedStrategy& pi_j = run.average(j, s).pi;
        const Matrix& qs = global_q[i][s];
        reg_val[i] = RegularizedValue(qs, taus[i], taus[j]).value;
        delta[i] = Delta(ResponseStrategy(q, taus[i]), q, pi_j, taus[i], taus[j], reg_val[i]);
        tracking[i] = TrackingError(q, qs, pi_j);
        lterm[i] = LyapunovTerm(q, pi_j, qs, taus[i], taus[j], reg_val[i]);
      }
    }
    std::optional<double> lyap;
    if (cfg.diagnostics_enabled && learner[0] && learner[1] && ctx.ratio.defined) {
      const double dev = (global_q[0][s] + global_q[1][s].transpose()).cwiseAbs().maxCoeff();
      const double c_bar = StageConstantC(dev, reg_val[0], reg_val[1], cfg.lambda);
      const auto& w = ctx.ratio.weights;
      lyap = std::max(0.0, w[0] * *lterm[0] + w[1] * *lterm[1] - c_bar) + *tracking[0] +
             *tracking[1];
    }
    for (int i = 0; i < 2; ++i) {
      TraceRow row;
      row.k = run.stage();
      row.state = s;
      row.agent = i + 1;
      row.v_est_mean = learner[i] ? run.agent(i).v(s) : 0.0;
      row.v_star = ctx.v_star[i][s];
      row.bound_lo = ctx.bound_lo[i][s];
      row.bound_hi = ctx.bound_hi[i][s];
      row.delta = delta[i];
      row.tracking_err = tracking[i];
      if (learner[i]) row.lyapunov = lyap;
      if (!std::isfinite(row.v_est_mean) || (learner[i] && !run.agent(i).q[s].allFinite())) {
        throw NumericalError("non-finite iterate at trace row " + std::to_string(rows.size()), 0.0);
      }
      rows.push_back(row);
    }
  }
}

}  // namespace detail

inline TrialTrace RunTrial(const ScenarioConfig& cfg, const RunContext& ctx, int trial_id) {
  TrialTrace trace;
  trace.trial_id = trial_id;
  if (!cfg.is_stochastic()) {
    MatrixTrialRunner run(cfg, trial_id);
    while (run.stage() < cfg.horizon) {
      run.Step();
      if (detail::IsLogStage(run.stage(), cfg.horizon, cfg.log_interval)) {
        detail::AppendMatrixSample(cfg, ctx, run, trace.rows);
      }
    }
    for (int i = 0; i < 2; ++i) {
      trace.final_states.q[i] = {run.agent(i).q};
      trace.final_states.pi[i] = {run.average(i).pi};
    }
    return trace;
  }
  StochasticTrialRunner run(cfg, trial_id);
  while (run.stage() < cfg.horizon) {
    run.Step();
    if (detail::IsLogStage(run.stage(), cfg.horizon, cfg.log_interval)) {
      detail::AppendStochasticSample(cfg, ctx, run, trace.rows);
    }
  }
  for (int i = 0; i < 2; ++i) {
    trace.final_states.q[i] = run.agent(i).q;
    trace.final_states.v[i] = run.agent(i).v;
    trace.final_states.visits[i] = run.agent(i).visits;
    for (int s = 0; s < cfg.num_states(); ++s) trace.final_states.pi[i].push_back(run.average(i, s).pi);
  }
  return trace;
}

inline TrialTrace RunTrial(const ScenarioConfig& cfg, int trial_id) {
  return RunTrial(cfg, MakeRunContext(cfg), trial_id);
}

// ---------------------------------------------------------------------------
// Experiments.

struct Aggregate {
  std::string name;
  int n_trials = 0;
  bool stochastic = false;
  std::array<std::string, 2> labels;
  StepRatio ratio;
  std::optional<double> band;
  std::vector<TraceRow> rows;
};

// Mean and unbiased standard deviation of v_est per row position; means of
// the diagnostics. Rows are combined in trial-id order, so the result does
// not depend on how trials were scheduled.
inline std::vector<TraceRow> AggregateRows(const std::vector<TrialTrace>& traces) {
  if (traces.empty()) throw StructuralError("nothing to aggregate");
  const std::size_t n_rows = traces.front().rows.size();
  for (const auto& t : traces) {
    if (t.rows.size() != n_rows) throw StructuralError("trial traces have different layouts");
  }
  const double n = static_cast<double>(traces.size());
  std::vector<TraceRow> out(n_rows);
  for (std::size_t r = 0; r < n_rows; ++r) {
    const TraceRow& first = traces.front().rows[r];
    TraceRow& row = out[r];
    row.k = first.k;
    row.state = first.state;
    row.agent = first.agent;
    row.v_star = first.v_star;
    row.bound_lo = first.bound_lo;
    row.bound_hi = first.bound_hi;
    double sum = 0.0;
    for (const auto& t : traces) sum += t.rows[r].v_est_mean;
    row.v_est_mean = sum / n;
    double ss = 0.0;
    for (const auto& t : traces) {
      const double dv = t.rows[r].v_est_mean - row.v_est_mean;
      ss += dv * dv;
    }
    row.v_est_std = traces.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    auto mean_of = [&](std::optional<double> TraceRow::*field) -> std::optional<double> {
      double total = 0.0;
      for (const auto& t : traces) {
        const auto& v = t.rows[r].*field;
        if (!v) return std::nullopt;
        total += *v;
      }
      return total / n;
    };
    row.delta = mean_of(&TraceRow::delta);
    row.tracking_err = mean_of(&TraceRow::tracking_err);
    row.lyapunov = mean_of(&TraceRow::lyapunov);
  }
  return out;
}

struct ExperimentResult {
  Aggregate aggregate;
  std::vector<TrialTrace> traces;  // ordered by trial id
};

// Runs cfg.n_trials trials on up to `parallelism` threads. Trial t uses seed
// DeriveSeed(base_seed, t). Throws NumericalError naming every aborted trial.
inline ExperimentResult RunExperimentWithTraces(const ScenarioConfig& cfg, int parallelism = 1) {
  const RunContext ctx = MakeRunContext(cfg);
  std::vector<TrialTrace> traces(cfg.n_trials);
  std::vector<std::string> failures(cfg.n_trials);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int t = next++; t < cfg.n_trials; t = next++) {
      try {
        traces[t] = RunTrial(cfg, ctx, t);
      } catch (const std::exception& e) {
        failures[t] = e.what();
      }
    }
  };
  const int threads = std::clamp(parallelism, 1, cfg.n_trials);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  std::string failed;
  for (int t = 0; t < cfg.n_trials; ++t) {
    if (!failures[t].empty()) failed += "\n  trial " + std::to_string(t) + ": " + failures[t];
  }
  if (!failed.empty()) throw NumericalError("aborted trials:" + failed, 0.0);
  ExperimentResult res;
  res.aggregate.name = cfg.name;
  res.aggregate.n_trials = cfg.n_trials;
  res.aggregate.stochastic = cfg.is_stochastic();
  res.aggregate.labels = {AccessLabel(cfg.agents[0]), AccessLabel(cfg.agents[1])};
  res.aggregate.ratio = ctx.ratio;
  res.aggregate.band = ctx.band;
  res.aggregate.rows = AggregateRows(traces);
  res.traces = std::move(traces);
  return res;
}

inline Aggregate RunExperiment(const ScenarioConfig& cfg, int parallelism = 1) {
  return RunExperimentWithTraces(cfg, parallelism).aggregate;
}

}  // namespace hetlearn

#endif  // HETLEARN_SIM_HARNESS_HPP_

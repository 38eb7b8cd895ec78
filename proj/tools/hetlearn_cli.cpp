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


// Command-line front end: gen, oracle, run, plot, validate.
//
// Exit codes: 0 success, 1 invalid input or usage, 2 runtime failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hetlearn/hetlearn.hpp"

namespace {

namespace fs = std::filesystem;
using hetlearn::ScenarioConfig;

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

void Emit(const nlohmann::json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    hetlearn::WriteJson(j, out);
  }
}

std::vector<hetlearn::RewardRange> ParseRanges(const std::string& text) {
  std::vector<hetlearn::RewardRange> ranges;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw hetlearn::StructuralError("reward range must be lo:hi");
    ranges.push_back({hetlearn::ParseDouble(item.substr(0, colon)),
                      hetlearn::ParseDouble(item.substr(colon + 1))});
  }
  return ranges;
}

// A game file may hold a bare game or a scenario with a "game" entry.
hetlearn::StochasticGame LoadStochasticGame(const std::string& path) {
  nlohmann::json j = hetlearn::ReadJson(path);
  if (j.contains("agents")) {
    ScenarioConfig cfg = hetlearn::LoadScenario(path);
    if (!cfg.is_stochastic()) throw hetlearn::StructuralError("scenario holds a matrix game");
    return *cfg.stochastic_game;
  }
  if (j.contains("random")) return hetlearn::GameFromGenerator(j["random"]);
  return hetlearn::StochasticGameFromJson(j);
}

nlohmann::json SolutionJson(const hetlearn::EquilibriumSolution& sol) {
  nlohmann::json j;
  for (int i = 0; i < 2; ++i) {
    j["v_star"].push_back(hetlearn::detail::VectorToJson(sol.v_star[i]));
    nlohmann::json q = nlohmann::json::array();
    for (const auto& m : sol.q_star[i]) q.push_back(hetlearn::detail::MatrixToJson(m));
    j["Q_star"].push_back(q);
  }
  for (const auto& pair : sol.pi_star) {
    j["pi_star"].push_back(
        {hetlearn::detail::VectorToJson(pair[0]), hetlearn::detail::VectorToJson(pair[1])});
  }
  j["iterations"] = sol.iterations;
  j["residual"] = sol.residual;
  return j;
}

void PrintReport(const hetlearn::ValidationReport& rep) {
  for (const auto& e : rep.errors) std::cout << "error: " << e << '\n';
  for (const auto& w : rep.warnings) std::cout << "warning: " << w << '\n';
  if (rep.strongly_connected) {
    std::cout << "reachability graph strongly connected: "
              << (*rep.strongly_connected ? "yes" : "no") << '\n';
  }
  if (rep.ratio.defined) {
    std::cout << "step-size ratio alpha1/alpha2 -> " << rep.ratio.raw << " (d = " << rep.ratio.d
              << ")\n";
  }
  std::cout << (rep.ok() ? "valid" : "invalid") << '\n';
}

struct RunFlags {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<std::int64_t> horizon;
  std::optional<std::int64_t> log_interval;
  int parallelism = 1;
  std::string out;
  bool log_x = false;
};

ScenarioConfig ResolveScenario(const RunFlags& f) {
  ScenarioConfig cfg;
  if (!f.preset.empty()) {
    const std::string prefix = "scenario";
    if (f.preset.rfind(prefix, 0) != 0 || f.preset.size() != prefix.size() + 1) {
      throw hetlearn::StructuralError("unknown preset " + f.preset);
    }
    cfg = hetlearn::PresetScenario(f.preset.back() - '0');
  } else if (!f.config.empty()) {
    cfg = hetlearn::LoadScenario(f.config);
  } else {
    throw hetlearn::StructuralError("give --config or --preset");
  }
  if (f.seed) cfg.base_seed = *f.seed;
  if (f.trials) cfg.n_trials = *f.trials;
  if (f.horizon) cfg.horizon = *f.horizon;
  if (f.log_interval) cfg.log_interval = *f.log_interval;
  return cfg;
}

int Run(const RunFlags& f) {
  const ScenarioConfig cfg = ResolveScenario(f);
  const hetlearn::ValidationReport rep = hetlearn::ValidateScenario(cfg);
  if (!rep.ok()) {
    PrintReport(rep);
    return kInvalid;
  }
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
  const auto res = hetlearn::RunExperimentWithTraces(cfg, f.parallelism);
  const fs::path out(f.out);
  hetlearn::WriteJson(hetlearn::RunSummaryJson(cfg, res.aggregate), (out / "run.json").string());
  for (const auto& t : res.traces) {
    hetlearn::WriteTraceCsv(t.rows,
                            (out / "trials" / ("trial_" + std::to_string(t.trial_id) + ".csv")).string());
  }
  hetlearn::WriteTraceCsv(res.aggregate.rows, (out / "aggregate.csv").string());
  hetlearn::PlotOptions opt;
  opt.log_x = f.log_x;
  hetlearn::RenderPlot(res.aggregate, (out / "plot.svg").string(), opt);
  std::cout << "wrote " << res.traces.size() << " trials to " << out.string() << '\n';
  return kOk;
}

// Rebuilds the aggregate of a finished run from its output directory.
hetlearn::Aggregate LoadRunAggregate(const fs::path& dir) {
  hetlearn::Aggregate agg;
  agg.rows = hetlearn::ReadTraceCsv((dir / "aggregate.csv").string());
  const fs::path summary = dir / "run.json";
  if (fs::exists(summary)) {
    const nlohmann::json j = hetlearn::ReadJson(summary.string());
    agg.name = j.value("name", std::string());
    agg.n_trials = j.value("n_trials", 0);
    if (j.contains("labels")) agg.labels = j["labels"].get<std::array<std::string, 2>>();
  }
  return agg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heterogeneous learning in zero-sum matrix and stochastic games"};
  app.require_subcommand(1);

  RunFlags flags;
  std::string out;
  std::uint64_t seed = 0;
  int states = 2, actions = 2;
  double gamma = 0.3;
  std::string ranges = "0:1,0:0.2";

  auto* gen = app.add_subcommand("gen", "Generate a random zero-sum stochastic game as JSON");
  gen->add_option("--seed", seed, "Generator seed");
  gen->add_option("--states", states, "Number of states")->check(CLI::PositiveNumber);
  gen->add_option("--actions", actions, "Actions per agent")->check(CLI::PositiveNumber);
  gen->add_option("--gamma", gamma, "Discount factor");
  gen->add_option("--reward-ranges", ranges, "lo:hi per state, comma separated (or one for all)");
  gen->add_option("--out", out, "Output file (default stdout)");

  std::string game_path;
  auto* oracle = app.add_subcommand("oracle", "Equilibrium values of a zero-sum stochastic game");
  oracle->add_option("--config", game_path, "Game or scenario JSON")->required();
  oracle->add_option("--out", out, "Output file (default stdout)");

  auto* run = app.add_subcommand("run", "Run a scenario and write traces, aggregate and plot");
  run->add_option("--config", flags.config, "Scenario JSON");
  run->add_option("--preset", flags.preset, "Built-in scenario: scenario1, scenario2, scenario3");
  run->add_option("--seed", flags.seed, "Base seed");
  run->add_option("--trials", flags.trials, "Number of trials")->check(CLI::PositiveNumber);
  run->add_option("--horizon", flags.horizon, "Stages per trial")->check(CLI::PositiveNumber);
  run->add_option("--log-interval", flags.log_interval, "Stages between trace samples")
      ->check(CLI::PositiveNumber);
  run->add_option("--parallelism", flags.parallelism, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--out", flags.out, "Output directory")->required();
  run->add_flag("--log-x", flags.log_x, "Logarithmic stage axis in the plot");

  std::string run_dir;
  bool plot_log_x = false;
  auto* plot = app.add_subcommand("plot", "Render plot.svg from a run directory");
  plot->add_option("--config", run_dir, "Run output directory")->required();
  plot->add_option("--out", out, "SVG path (default <dir>/plot.svg)");
  plot->add_flag("--log-x", plot_log_x, "Logarithmic stage axis");

  auto* validate = app.add_subcommand("validate", "Check a scenario against the learning assumptions");
  validate->add_option("--config", flags.config, "Scenario JSON");
  validate->add_option("--preset", flags.preset, "Built-in scenario");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kInvalid;
  }

  try {
    if (*gen) {
      const auto game = hetlearn::GenerateRandomZeroSumGame(states, actions, ParseRanges(ranges),
                                                            seed, gamma);
      Emit(hetlearn::StochasticGameToJson(game), out);
      return kOk;
    }
    if (*oracle) {
      const auto game = LoadStochasticGame(game_path);
      Emit(SolutionJson(hetlearn::ShapleyIterate(game)), out);
      return kOk;
    }
    if (*run) return Run(flags);
    if (*plot) {
      const fs::path dir(run_dir);
      hetlearn::PlotOptions opt;
      opt.log_x = plot_log_x;
      hetlearn::RenderPlot(LoadRunAggregate(dir),
                           out.empty() ? (dir / "plot.svg").string() : out, opt);
      return kOk;
    }
    if (*validate) {
      const auto rep = hetlearn::ValidateScenario(ResolveScenario(flags));
      PrintReport(rep);
      return rep.ok() ? kOk : kInvalid;
    }
  } catch (const hetlearn::StructuralError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const hetlearn::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const hetlearn::KernelError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed JSON input: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}

/*
 Copyright 2026 The smhe Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#ifndef SMHE_HARNESS_HPP
#define SMHE_HARNESS_HPP

#include "smhe/analysis.hpp"
#include "smhe/dynamics.hpp"
#include "smhe/io.hpp"
#include "smhe/mhe.hpp"
#include "smhe/observer.hpp"
#include "smhe/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace smhe {

inline constexpr int kConvergedBudget = -1;

struct DetectabilityFitSettings {
  Vector lower;
  Vector upper;
  int pairs = 40;
  int steps = 100;
  std::uint64_t seed = 7;
};

struct ExperimentConfig {
  std::string model = "batch_reactor";
  Matrix linear_A;  // only for model "linear"
  Matrix linear_C;
  double dt = kReactorSampling;
  int steps = 100;
  int horizon = 10;
  std::vector<int> budgets{0, 2, 5};
  bool include_converged = true;
  SolverConfig solver = SolverConfig::converged();

  Matrix Q;
  Matrix R;
  std::uint64_t seed = 42;

  Vector x0;
  Vector z0;
  Matrix observer_gain;

  Matrix prior_weight;
  std::optional<Matrix> disturbance_weight;  // defaults to Q^-1
  std::optional<Matrix> noise_weight;        // defaults to R^-1

  std::optional<BoxSet> state_set;
  std::optional<BoxSet> disturbance_set;
  std::optional<BoxSet> noise_set;

  std::optional<RgesConstants> observer_constants;         // fitted when absent
  std::optional<DetectabilityConstants> detectability;     // fitted when absent
  DetectabilityFitSettings detectability_fit;

  int aggregate_seeds = 20;
  int rmse_skip = 0;
  bool parallel = false;
  std::string output_dir = "out";

  int state_dim() const { return static_cast<int>(x0.size()); }
  void validate() const;

  static ExperimentConfig batch_reactor();
};

io::json to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const io::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Model, observer and cost assembled from a config.
struct Pipeline {
  ModelPtr model;
  ObserverSpec observer;
  CostPtr cost;
};

Pipeline build_pipeline(const ExperimentConfig& cfg);

/// Estimates of one iteration budget over the whole record.
struct EstimateRun {
  int budget = 0;  // kConvergedBudget for the converged baseline
  std::string label;
  std::vector<StateVector> estimates;      // t = 0..T
  std::vector<double> cost;                // suboptimal window cost per t
  std::vector<double> candidate_cost;      // candidate window cost per t
  std::vector<int> iterations;
  std::vector<std::vector<double>> traces;
  RmseReport rmse;
};

struct RunResult {
  std::uint64_t seed = 0;
  TrajectoryLog truth;
  ObserverLog observer;
  std::vector<EstimateRun> runs;
  std::vector<std::string> warnings;
  double seconds = 0.0;

  const EstimateRun& run(int budget) const;
};

std::string budget_label(int budget);

/// Runs the estimator for one budget given the shared truth and observer logs.
/// Throws NumericError with the time index if the cost audit fails.
EstimateRun run_budget(const Pipeline& pipeline, const ExperimentConfig& cfg, const TrajectoryLog& truth,
                       const ObserverLog& olog, int budget);

/// Simulates the truth, runs the observer, then every budget (plus the
/// converged baseline when enabled). Budgets run concurrently when cfg.parallel.
RunResult run_experiment(const ExperimentConfig& cfg);

struct SeedSummary {
  std::uint64_t seed = 0;
  std::vector<int> budgets;
  std::vector<double> rmse;  // aggregate, same order as budgets
  double max_gap_to_converged = 0.0;  // largest budget vs converged, max over t
  bool cost_ordering_holds = true;
};

SeedSummary summarize(const RunResult& r);

/// Seeds cfg.seed, cfg.seed + 1, ... run independently. The OpenMP version
/// distributes seeds over threads; the serial one is the reference.
std::vector<RunResult> run_seed_sweep(const ExperimentConfig& cfg, int seeds);
std::vector<RunResult> run_seed_sweep_serial(const ExperimentConfig& cfg, int seeds);

/// True when for every t the window costs are ordered by budget
/// (larger budget never costs more; converged is the largest).
bool cost_ordering_holds(const RunResult& r);

struct StabilityReport {
  RgesConstants observer;
  DetectabilityConstants detectability;
  CostBoundConstants cost_bounds;
  TheoremConstants theorem;
  double initial_gap = 0.0;
  // Indexed [run][budget position].
  std::vector<std::vector<EnvelopeReport>> lemma;
  std::vector<std::vector<EnvelopeReport>> envelope;
  bool lemma_holds = true;
  bool envelope_holds = true;
};

EnvelopeSample observer_sample(const RunResult& r);

/// Lemma/theorem bookkeeping over a set of runs sharing one config. Observer
/// and detectability constants come from the config or are fitted.
StabilityReport analyze_runs(const ExperimentConfig& cfg, const std::vector<RunResult>& runs);

struct FigureBundle {
  std::vector<std::filesystem::path> files;
  io::json summary;
};

/// Per-budget, converged and truth CSVs plus summary.json in cfg.output_dir.
FigureBundle reproduce_figure(const ExperimentConfig& cfg);

/// Command-line entry point. Exit codes: 0 success, 1 config/usage error,
/// 2 numeric failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace smhe

#endif  // SMHE_HARNESS_HPP

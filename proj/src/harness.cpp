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
#include "smhe/harness.hpp"

#include "smhe/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace smhe {

namespace {

using io::json;

// Runs body(i) for i in [0, count), across OpenMP threads when `parallel`.
// The first exception thrown by any iteration is rethrown afterwards.
template <class Body>
void for_each_index(int count, bool parallel, Body&& body) {
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int i = 0; i < count; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical(smhe_for_each_index)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

std::optional<Matrix> optional_matrix(const json& j, const char* key, const char* what) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return io::matrix_from_json(j.at(key), what);
}

std::optional<BoxSet> optional_box(const json& j, const char* key, Eigen::Index dim, const char* what) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return io::box_from_json(j.at(key), dim, what);
}

json optional_to_json(const std::optional<Matrix>& m) { return m ? io::to_json(*m) : json(nullptr); }
json optional_to_json(const std::optional<BoxSet>& b) { return b ? io::to_json(*b) : json(nullptr); }

std::string direction_name(Direction d) {
  switch (d) {
    case Direction::Gradient: return "gradient";
    case Direction::BarzilaiBorwein: return "barzilai-borwein";
    case Direction::GaussNewton: return "gauss-newton";
  }
  return "gauss-newton";
}

Direction direction_from_name(const std::string& s) {
  if (s == "gradient") return Direction::Gradient;
  if (s == "barzilai-borwein") return Direction::BarzilaiBorwein;
  if (s == "gauss-newton") return Direction::GaussNewton;
  throw ConfigError("solver.direction: unknown value '" + s + "'");
}

std::vector<int> ordered_budgets(const RunResult& r) {
  std::vector<int> b;
  for (const auto& run : r.runs) b.push_back(run.budget);
  // Converged baseline sorts last.
  std::sort(b.begin(), b.end(), [](int x, int y) {
    if (x == kConvergedBudget) return false;
    if (y == kConvergedBudget) return true;
    return x < y;
  });
  return b;
}

}  // namespace

ExperimentConfig ExperimentConfig::batch_reactor() {
  ExperimentConfig cfg;
  cfg.Q = 0.01 * Matrix::Identity(2, 2);
  cfg.R = Matrix::Constant(1, 1, 0.04);
  cfg.x0 = (Vector(2) << 5.0, 2.0).finished();
  cfg.z0 = batch_reactor_observer_initial_state();
  cfg.observer_gain = Matrix::Constant(2, 1, 0.5);
  cfg.prior_weight = Matrix::Identity(2, 2);
  cfg.detectability_fit.lower = Vector::Zero(2);
  cfg.detectability_fit.upper = (Vector(2) << 6.0, 4.0).finished();
  return cfg;
}

void ExperimentConfig::validate() const {
  if (model != "batch_reactor" && model != "linear") {
    throw ConfigError("unknown model id '" + model + "'");
  }
  const auto n = x0.size();
  if (n == 0) throw ConfigError("x0 is required");
  if (model == "batch_reactor" && n != 2) throw ConfigError("batch_reactor needs a 2-dimensional x0");
  if (model == "linear" && (linear_A.rows() != n || linear_C.cols() != n)) {
    throw ConfigError("linear model: A and C must match x0");
  }
  const Eigen::Index p = model == "linear" ? linear_C.rows() : 1;
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (steps < 0) throw ConfigError("steps must be nonnegative");
  if (horizon < 1) throw ConfigError("horizon must be at least 1");
  for (int b : budgets) {
    if (b < 0 && b != kConvergedBudget) throw ConfigError("budgets must be >= 0");
  }
  if (z0.size() != n) throw ConfigError("z0 dimension must match x0");
  if (Q.rows() != n || Q.cols() != n) throw ConfigError("noise.Q must be n x n");
  if (R.rows() != p || R.cols() != p) throw ConfigError("noise.R must be p x p");
  check_covariance(Q, "noise.Q");
  check_covariance(R, "noise.R");
  if (observer_gain.rows() != n || observer_gain.cols() != p) throw ConfigError("observer.gain must be n x p");
  if (prior_weight.rows() != n || prior_weight.cols() != n) throw ConfigError("cost.prior_weight must be n x n");
  if (aggregate_seeds < 0) throw ConfigError("aggregate_seeds must be nonnegative");
  if (rmse_skip < 0 || rmse_skip > steps) throw ConfigError("rmse_skip out of range");
  solver.validate();
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["model"] = c.model;
  if (c.model == "linear") {
    j["A"] = io::to_json(c.linear_A);
    j["C"] = io::to_json(c.linear_C);
  }
  j["dt"] = c.dt;
  j["steps"] = c.steps;
  j["horizon"] = c.horizon;
  j["budgets"] = c.budgets;
  j["include_converged"] = c.include_converged;
  j["noise"] = {{"Q", io::to_json(c.Q)}, {"R", io::to_json(c.R)}, {"seed", c.seed}};
  j["x0"] = io::to_json(c.x0);
  j["z0"] = io::to_json(c.z0);
  j["observer"] = {{"gain", io::to_json(c.observer_gain)}};
  j["cost"] = {{"prior_weight", io::to_json(c.prior_weight)},
               {"disturbance_weight", optional_to_json(c.disturbance_weight)},
               {"noise_weight", optional_to_json(c.noise_weight)}};
  j["sets"] = {{"state", optional_to_json(c.state_set)},
               {"disturbance", optional_to_json(c.disturbance_set)},
               {"noise", optional_to_json(c.noise_set)}};
  j["solver"] = {{"direction", direction_name(c.solver.direction)},
                 {"gradient_tol", c.solver.gradient_tol},
                 {"cost_change_tol", c.solver.cost_change_tol},
                 {"armijo_c", c.solver.armijo_c},
                 {"backtrack_factor", c.solver.backtrack_factor},
                 {"max_backtracks", c.solver.max_backtracks},
                 {"initial_step", c.solver.initial_step},
                 {"converged_iterations", c.solver.max_iterations}};
  j["stability"] = {
      {"observer", c.observer_constants ? io::to_json(*c.observer_constants) : json(nullptr)},
      {"detectability", c.detectability ? io::to_json(*c.detectability) : json(nullptr)},
      {"detectability_fit",
       {{"lower", io::to_json(c.detectability_fit.lower)},
        {"upper", io::to_json(c.detectability_fit.upper)},
        {"pairs", c.detectability_fit.pairs},
        {"steps", c.detectability_fit.steps},
        {"seed", c.detectability_fit.seed}}}};
  j["aggregate_seeds"] = c.aggregate_seeds;
  j["rmse_skip"] = c.rmse_skip;
  j["parallel"] = c.parallel;
  j["output_dir"] = c.output_dir;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c = ExperimentConfig::batch_reactor();
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    c.model = j.value("model", c.model);
    if (c.model == "linear") {
      c.linear_A = io::matrix_from_json(j.at("A"), "A");
      c.linear_C = io::matrix_from_json(j.at("C"), "C");
    }
    c.dt = j.value("dt", c.dt);
    c.steps = j.value("steps", c.steps);
    c.horizon = j.value("horizon", c.horizon);
    if (j.contains("budgets")) c.budgets = j.at("budgets").get<std::vector<int>>();
    c.include_converged = j.value("include_converged", c.include_converged);
    if (j.contains("noise")) {
      const json& n = j.at("noise");
      if (n.contains("Q")) c.Q = io::matrix_from_json(n.at("Q"), "noise.Q");
      if (n.contains("R")) c.R = io::matrix_from_json(n.at("R"), "noise.R");
      c.seed = n.value("seed", c.seed);
    }
    if (j.contains("x0")) c.x0 = io::vector_from_json(j.at("x0"), "x0");
    if (j.contains("z0")) c.z0 = io::vector_from_json(j.at("z0"), "z0");
    if (j.contains("observer") && j.at("observer").contains("gain")) {
      c.observer_gain = io::matrix_from_json(j.at("observer").at("gain"), "observer.gain");
    }
    if (j.contains("cost")) {
      const json& k = j.at("cost");
      if (k.contains("prior_weight")) c.prior_weight = io::matrix_from_json(k.at("prior_weight"), "cost.prior_weight");
      c.disturbance_weight = optional_matrix(k, "disturbance_weight", "cost.disturbance_weight");
      c.noise_weight = optional_matrix(k, "noise_weight", "cost.noise_weight");
    }
    if (j.contains("sets")) {
      const json& s = j.at("sets");
      const Eigen::Index n = c.x0.size();
      const Eigen::Index p = c.model == "linear" ? c.linear_C.rows() : 1;
      c.state_set = optional_box(s, "state", n, "sets.state");
      c.disturbance_set = optional_box(s, "disturbance", n, "sets.disturbance");
      c.noise_set = optional_box(s, "noise", p, "sets.noise");
    }
    if (j.contains("solver")) {
      const json& s = j.at("solver");
      c.solver.direction = direction_from_name(s.value("direction", direction_name(c.solver.direction)));
      c.solver.gradient_tol = s.value("gradient_tol", c.solver.gradient_tol);
      c.solver.cost_change_tol = s.value("cost_change_tol", c.solver.cost_change_tol);
      c.solver.armijo_c = s.value("armijo_c", c.solver.armijo_c);
      c.solver.backtrack_factor = s.value("backtrack_factor", c.solver.backtrack_factor);
      c.solver.max_backtracks = s.value("max_backtracks", c.solver.max_backtracks);
      c.solver.initial_step = s.value("initial_step", c.solver.initial_step);
      c.solver.max_iterations = s.value("converged_iterations", c.solver.max_iterations);
    }
    if (j.contains("stability")) {
      const json& s = j.at("stability");
      if (s.contains("observer") && !s.at("observer").is_null()) {
        c.observer_constants = io::rges_from_json(s.at("observer"));
      }
      if (s.contains("detectability") && !s.at("detectability").is_null()) {
        c.detectability = io::detectability_from_json(s.at("detectability"));
      }
      if (s.contains("detectability_fit")) {
        const json& f = s.at("detectability_fit");
        if (f.contains("lower")) c.detectability_fit.lower = io::vector_from_json(f.at("lower"), "detectability_fit.lower");
        if (f.contains("upper")) c.detectability_fit.upper = io::vector_from_json(f.at("upper"), "detectability_fit.upper");
        c.detectability_fit.pairs = f.value("pairs", c.detectability_fit.pairs);
        c.detectability_fit.steps = f.value("steps", c.detectability_fit.steps);
        c.detectability_fit.seed = f.value("seed", c.detectability_fit.seed);
      }
    }
    c.aggregate_seeds = j.value("aggregate_seeds", c.aggregate_seeds);
    c.rmse_skip = j.value("rmse_skip", c.rmse_skip);
    c.parallel = j.value("parallel", c.parallel);
    c.output_dir = j.value("output_dir", c.output_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return config_from_json(io::read_json_file(path));
}

Pipeline build_pipeline(const ExperimentConfig& cfg) {
  cfg.validate();
  SystemModel model = cfg.model == "linear" ? linear_model(cfg.linear_A, cfg.linear_C)
                                            : batch_reactor_model(cfg.dt);
  if (cfg.state_set) model.state_set = *cfg.state_set;
  if (cfg.disturbance_set) model.disturbance_set = *cfg.disturbance_set;
  if (cfg.noise_set) model.noise_set = *cfg.noise_set;
  model.validate();

  Pipeline p;
  p.model = std::make_shared<const SystemModel>(std::move(model));
  // Linear models are already discrete, so their gain is applied unscaled.
  const double gain_scale = cfg.model == "linear" ? 1.0 : cfg.dt;
  p.observer = constant_gain_observer(p.model, cfg.observer_gain, gain_scale);
  const Matrix w_weight = cfg.disturbance_weight ? *cfg.disturbance_weight : Matrix(cfg.Q.inverse());
  const Matrix v_weight = cfg.noise_weight ? *cfg.noise_weight : Matrix(cfg.R.inverse());
  p.cost = std::make_shared<const CostSpec>(quadratic_cost(cfg.prior_weight, w_weight, v_weight));
  return p;
}

const EstimateRun& RunResult::run(int budget) const {
  for (const auto& r : runs) {
    if (r.budget == budget) return r;
  }
  throw ConfigError("no estimates for budget " + budget_label(budget));
}

std::string budget_label(int budget) {
  return budget == kConvergedBudget ? "converged" : "i" + std::to_string(budget);
}

EstimateRun run_budget(const Pipeline& pipeline, const ExperimentConfig& cfg, const TrajectoryLog& truth,
                       const ObserverLog& olog, int budget) {
  EstimateRun run;
  run.budget = budget;
  run.label = budget_label(budget);
  const int steps = truth.steps();
  run.estimates.reserve(steps + 1);
  run.estimates.push_back(olog.states.front());
  run.cost.push_back(0.0);
  run.candidate_cost.push_back(0.0);
  run.iterations.push_back(0);
  run.traces.push_back({0.0});

  SolverConfig solver = cfg.solver;
  if (budget != kConvergedBudget) solver.max_iterations = budget;

  for (int t = 1; t <= steps; ++t) {
    try {
      const HorizonProblem window = make_window(pipeline.model, pipeline.cost, truth.outputs, olog, t, cfg.horizon);
      const DecisionVector candidate = build_candidate(olog, window.window_start, window.horizon());
      const SolveResult solved = budget == kConvergedBudget ? solve_converged(window, candidate, solver)
                                                            : solve_suboptimal(window, candidate, solver);
      const double candidate_cost = solved.report.cost_trace.front();
      const double cost = solved.report.cost_trace.back();
      if (!(cost <= candidate_cost)) {
        throw NumericError("cost audit failed: suboptimal cost exceeds candidate cost");
      }
      run.estimates.push_back(rollout(window, solved.solution).end_state());
      run.cost.push_back(cost);
      run.candidate_cost.push_back(candidate_cost);
      run.iterations.push_back(solved.report.iterations_used);
      run.traces.push_back(solved.report.cost_trace);
    } catch (const ConfigError& e) {
      throw ConfigError("t=" + std::to_string(t) + ", budget " + run.label + ": " + e.what());
    } catch (const std::exception& e) {
      throw NumericError("t=" + std::to_string(t) + ", budget " + run.label + ": " + e.what());
    }
  }
  run.rmse = rmse(truth.states, run.estimates, cfg.rmse_skip);
  return run;
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  const Pipeline pipeline = build_pipeline(cfg);
  RunResult result;
  result.seed = cfg.seed;

  NoiseDraw noise = draw_noise(NoiseSpec{cfg.Q, cfg.R, cfg.seed}, cfg.steps, *pipeline.model);
  result.truth = simulate(*pipeline.model, cfg.x0, noise.w, noise.v, cfg.steps);
  result.observer = run_observer(pipeline.observer, cfg.z0, result.truth.outputs);
  for (auto* src : {&noise.warnings, &result.truth.warnings, &result.observer.warnings}) {
    result.warnings.insert(result.warnings.end(), src->begin(), src->end());
  }

  std::vector<int> budgets = cfg.budgets;
  if (cfg.include_converged && std::find(budgets.begin(), budgets.end(), kConvergedBudget) == budgets.end()) {
    budgets.push_back(kConvergedBudget);
  }
  result.runs.resize(budgets.size());
  for_each_index(static_cast<int>(budgets.size()), cfg.parallel, [&](int i) {
    result.runs[i] = run_budget(pipeline, cfg, result.truth, result.observer, budgets[i]);
  });
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

bool cost_ordering_holds(const RunResult& r) {
  const std::vector<int> order = ordered_budgets(r);
  for (std::size_t k = 1; k < order.size(); ++k) {
    const auto& lo = r.run(order[k - 1]);
    const auto& hi = r.run(order[k]);
    for (std::size_t t = 0; t < lo.cost.size(); ++t) {
      if (hi.cost[t] > lo.cost[t]) return false;
    }
  }
  return true;
}

SeedSummary summarize(const RunResult& r) {
  SeedSummary s;
  s.seed = r.seed;
  s.budgets = ordered_budgets(r);
  for (int b : s.budgets) s.rmse.push_back(r.run(b).rmse.aggregate);
  s.cost_ordering_holds = cost_ordering_holds(r);
  const bool has_converged = !s.budgets.empty() && s.budgets.back() == kConvergedBudget;
  if (has_converged && s.budgets.size() >= 2) {
    const auto& top = r.run(s.budgets[s.budgets.size() - 2]);
    const auto& conv = r.run(kConvergedBudget);
    for (std::size_t t = 0; t < top.estimates.size(); ++t) {
      s.max_gap_to_converged = std::max(s.max_gap_to_converged, (top.estimates[t] - conv.estimates[t]).norm());
    }
  }
  return s;
}

namespace {

std::vector<RunResult> sweep(const ExperimentConfig& cfg, int seeds, bool parallel) {
  if (seeds < 1) throw ConfigError("seed sweep needs at least one seed");
  std::vector<RunResult> out(seeds);
  for_each_index(seeds, parallel, [&](int k) {
    ExperimentConfig local = cfg;
    local.seed = cfg.seed + static_cast<std::uint64_t>(k);
    local.parallel = false;
    out[k] = run_experiment(local);
  });
  return out;
}

}  // namespace

std::vector<RunResult> run_seed_sweep(const ExperimentConfig& cfg, int seeds) { return sweep(cfg, seeds, true); }

std::vector<RunResult> run_seed_sweep_serial(const ExperimentConfig& cfg, int seeds) {
  return sweep(cfg, seeds, false);
}

EnvelopeSample observer_sample(const RunResult& r) {
  EnvelopeSample s;
  s.errors = error_norms(r.truth.states, r.observer.states);
  s.w_norms = norms(r.truth.disturbances);
  s.v_norms = norms(r.truth.noises);
  s.initial_gap = (r.truth.states.front() - r.observer.states.front()).norm();
  return s;
}

StabilityReport analyze_runs(const ExperimentConfig& cfg, const std::vector<RunResult>& runs) {
  if (runs.empty()) throw ConfigError("analyze_runs: no runs");
  const Pipeline pipeline = build_pipeline(cfg);
  StabilityReport rep;

  if (cfg.observer_constants) {
    rep.observer = *cfg.observer_constants;
  } else {
    std::vector<EnvelopeSample> samples;
    for (const auto& r : runs) samples.push_back(observer_sample(r));
    rep.observer = fit_observer_envelope(samples);
  }
  if (cfg.detectability) {
    rep.detectability = *cfg.detectability;
  } else {
    const auto& f = cfg.detectability_fit;
    rep.detectability = fit_detectability(
        detectability_samples(*pipeline.model, f.lower, f.upper, cfg.Q, f.pairs, f.steps, f.seed));
  }
  rep.cost_bounds = CostBoundConstants::from(pipeline.cost->bounds, *pipeline.model, pipeline.observer);
  rep.theorem = theorem1_constants(rep.detectability, rep.observer, rep.cost_bounds, cfg.horizon);
  rep.initial_gap = (cfg.x0 - cfg.z0).norm();

  for (const auto& r : runs) {
    const std::vector<double> w = norms(r.truth.disturbances);
    const std::vector<double> v = norms(r.truth.noises);
    const std::vector<double> lemma = lemma1_bounds(rep.cost_bounds, rep.observer, cfg.horizon, rep.initial_gap, w, v);
    auto& lemma_row = rep.lemma.emplace_back();
    auto& env_row = rep.envelope.emplace_back();
    for (const auto& run : r.runs) {
      EnvelopeReport lr;
      lr.error = run.cost;
      lr.bound = lemma;
      lr.margin.resize(lemma.size());
      lr.min_margin = std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < lemma.size(); ++t) {
        lr.margin[t] = lemma[t] - run.cost[t];
        if (lr.margin[t] < lr.min_margin) {
          lr.min_margin = lr.margin[t];
          lr.worst_t = static_cast<int>(t);
        }
      }
      rep.lemma_holds = rep.lemma_holds && lr.holds();
      lemma_row.push_back(std::move(lr));

      EnvelopeReport er = check_rges_envelope(error_norms(r.truth.states, run.estimates), w, v, rep.theorem.C1,
                                              rep.theorem.C2, rep.theorem.C3, rep.theorem.lambda, rep.initial_gap);
      rep.envelope_holds = rep.envelope_holds && er.holds();
      env_row.push_back(std::move(er));
    }
  }
  return rep;
}

FigureBundle reproduce_figure(const ExperimentConfig& cfg) {
  ExperimentConfig local = cfg;
  local.include_converged = true;
  const RunResult result = run_experiment(local);
  const std::filesystem::path dir(local.output_dir);
  std::filesystem::create_directories(dir);

  FigureBundle bundle;
  auto emit = [&](const std::string& name, const std::string& text) {
    io::write_text(dir / name, text);
    bundle.files.push_back(dir / name);
  };
  {
    std::ostringstream os;
    io::write_states_csv(os, result.truth.states);
    emit("truth.csv", os.str());
  }
  json rmse_table = json::object();
  json costs = json::object();
  for (const auto& run : result.runs) {
    std::ostringstream os;
    io::write_estimate_csv(os, result.truth.states, run.estimates);
    emit("estimate_" + run.label + ".csv", os.str());
    rmse_table[run.label] = io::to_json(run.rmse);
    costs[run.label] = {{"J_hat", run.cost}, {"J_tilde", run.candidate_cost}};
  }

  const SeedSummary s = summarize(result);
  json summary;
  summary["seed"] = result.seed;
  summary["series"] = json::array();
  for (const auto& run : result.runs) summary["series"].push_back(run.label);
  summary["series"].push_back("truth");
  summary["rmse"] = rmse_table;
  summary["costs"] = costs;
  summary["cost_ordering_holds"] = s.cost_ordering_holds;
  summary["max_gap_to_converged"] = s.max_gap_to_converged;

  if (local.aggregate_seeds > 0) {
    const std::vector<RunResult> sweep_runs = run_seed_sweep(local, local.aggregate_seeds);
    json per_seed = json::array();
    std::map<std::string, double> mean;
    for (const auto& r : sweep_runs) {
      const SeedSummary ss = summarize(r);
      json row{{"seed", ss.seed}, {"max_gap_to_converged", ss.max_gap_to_converged},
               {"cost_ordering_holds", ss.cost_ordering_holds}};
      for (std::size_t k = 0; k < ss.budgets.size(); ++k) {
        row["rmse"][budget_label(ss.budgets[k])] = ss.rmse[k];
        mean[budget_label(ss.budgets[k])] += ss.rmse[k] / static_cast<double>(sweep_runs.size());
      }
      per_seed.push_back(row);
    }
    summary["aggregate"] = {{"seeds", per_seed}, {"mean_rmse", mean}};
  }
  bundle.summary = summary;
  emit("summary.json", summary.dump(2) + "\n");
  return bundle;
}

}  // namespace smhe

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
#include "smhe/errors.hpp"
#include "smhe/harness.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace smhe {

namespace {

struct CliOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string budgets;
  std::string out;
  bool trace = false;
  bool parallel = false;
};

std::vector<int> parse_budgets(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (item == "converged") {
      out.push_back(kConvergedBudget);
      continue;
    }
    try {
      std::size_t used = 0;
      const int b = std::stoi(item, &used);
      if (used != item.size() || b < 0) throw std::invalid_argument(item);
      out.push_back(b);
    } catch (const std::exception&) {
      throw ConfigError("--budget: '" + item + "' is not a nonnegative integer or 'converged'");
    }
  }
  if (out.empty()) throw ConfigError("--budget: empty list");
  return out;
}

ExperimentConfig resolve_config(const CliOptions& opt) {
  ExperimentConfig cfg = opt.config.empty() ? ExperimentConfig::batch_reactor() : load_config(opt.config);
  if (opt.seed) cfg.seed = *opt.seed;
  if (!opt.budgets.empty()) {
    cfg.budgets = parse_budgets(opt.budgets);
    cfg.include_converged = false;
  }
  if (!opt.out.empty()) cfg.output_dir = opt.out;
  if (opt.parallel) cfg.parallel = true;
  cfg.validate();
  return cfg;
}

std::string csv(const std::function<void(std::ostream&)>& write) {
  std::ostringstream os;
  write(os);
  return os.str();
}

void report_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

int cmd_simulate(const CliOptions& opt, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = resolve_config(opt);
  const Pipeline p = build_pipeline(cfg);
  NoiseDraw noise = draw_noise(NoiseSpec{cfg.Q, cfg.R, cfg.seed}, cfg.steps, *p.model);
  const TrajectoryLog log = simulate(*p.model, cfg.x0, noise.w, noise.v, cfg.steps);
  report_warnings(noise.warnings, err);
  report_warnings(log.warnings, err);
  const auto path = std::filesystem::path(cfg.output_dir) / "trajectory.csv";
  io::write_text(path, csv([&](std::ostream& os) { io::write_trajectory_csv(os, log); }));
  out << "wrote " << path.string() << '\n';
  return 0;
}

int cmd_observe(const CliOptions& opt, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg = resolve_config(opt);
  cfg.budgets.clear();
  cfg.include_converged = false;
  const RunResult r = run_experiment(cfg);
  report_warnings(r.warnings, err);
  const std::filesystem::path dir(cfg.output_dir);
  io::write_text(dir / "observer.csv", csv([&](std::ostream& os) { io::write_observer_csv(os, r.observer); }));
  io::write_text(dir / "estimate_observer.csv",
                 csv([&](std::ostream& os) { io::write_estimate_csv(os, r.truth.states, r.observer.states); }));
  out << "wrote " << (dir / "observer.csv").string() << " and " << (dir / "estimate_observer.csv").string() << '\n';
  return 0;
}

int cmd_estimate(const CliOptions& opt, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = resolve_config(opt);
  const RunResult r = run_experiment(cfg);
  report_warnings(r.warnings, err);
  const std::filesystem::path dir(cfg.output_dir);
  io::json report;
  report["seed"] = r.seed;
  for (const auto& run : r.runs) {
    io::write_text(dir / ("estimate_" + run.label + ".csv"),
                   csv([&](std::ostream& os) { io::write_estimate_csv(os, r.truth.states, run.estimates); }));
    if (opt.trace) {
      io::write_text(dir / ("trace_" + run.label + ".csv"),
                     csv([&](std::ostream& os) { io::write_trace_csv(os, run.traces); }));
    }
    report["runs"][run.label] = {{"rmse", io::to_json(run.rmse)},
                                 {"iterations", run.iterations},
                                 {"J_hat", run.cost},
                                 {"J_tilde", run.candidate_cost}};
    out << run.label << ": rmse " << io::format_double(run.rmse.aggregate) << '\n';
  }
  io::write_text(dir / "report.json", report.dump(2) + "\n");
  out << "wrote " << r.runs.size() << " estimate series to " << dir.string() << '\n';
  return 0;
}

int cmd_analyze(const CliOptions& opt, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = resolve_config(opt);
  const int seeds = std::max(1, cfg.aggregate_seeds);
  const std::vector<RunResult> runs = run_seed_sweep(cfg, seeds);
  for (const auto& r : runs) report_warnings(r.warnings, err);
  const StabilityReport rep = analyze_runs(cfg, runs);
  const std::filesystem::path dir(cfg.output_dir);

  io::json j;
  j["observer"] = io::to_json(rep.observer);
  j["detectability"] = io::to_json(rep.detectability);
  j["cost_bounds"] = io::to_json(rep.cost_bounds);
  j["theorem"] = io::to_json(rep.theorem);
  j["initial_gap"] = rep.initial_gap;
  j["seeds"] = seeds;
  j["lemma_holds"] = rep.lemma_holds;
  j["envelope_holds"] = rep.envelope_holds;
  for (std::size_t k = 0; k < runs.front().runs.size(); ++k) {
    const std::string& label = runs.front().runs[k].label;
    double lemma_min = std::numeric_limits<double>::infinity();
    double env_min = lemma_min;
    for (std::size_t s = 0; s < runs.size(); ++s) {
      lemma_min = std::min(lemma_min, rep.lemma[s][k].min_margin);
      env_min = std::min(env_min, rep.envelope[s][k].min_margin);
    }
    j["min_margin"][label] = {{"lemma", lemma_min}, {"envelope", env_min}};
    io::write_text(dir / ("margins_" + label + ".csv"),
                   csv([&](std::ostream& os) { io::write_margin_csv(os, rep.envelope[0][k]); }));
    io::write_text(dir / ("lemma_" + label + ".csv"),
                   csv([&](std::ostream& os) { io::write_margin_csv(os, rep.lemma[0][k]); }));
  }
  io::write_text(dir / "constants.json", j.dump(2) + "\n");
  out << "observer constants (fitted, not certified): C=" << io::format_double(rep.observer.C_p)
      << " rho=" << io::format_double(rep.observer.rho) << '\n'
      << "cost bound " << (rep.lemma_holds ? "holds" : "VIOLATED") << ", error envelope "
      << (rep.envelope_holds ? "holds" : "VIOLATED") << " over " << seeds << " seeds\n";
  return 0;
}

int cmd_reproduce(const CliOptions& opt, std::ostream& out, std::ostream&) {
  const ExperimentConfig cfg = resolve_config(opt);
  const FigureBundle bundle = reproduce_figure(cfg);
  for (const auto& f : bundle.files) out << "wrote " << f.string() << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Suboptimal moving horizon estimation toolkit"};
  app.require_subcommand(1);
  CliOptions opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "JSON experiment config");
    sub->add_option("--seed", opt.seed, "noise seed");
    sub->add_option("--out", opt.out, "output directory");
    sub->add_flag("--parallel", opt.parallel, "run budgets/seeds on OpenMP threads");
  };
  CLI::App* simulate_cmd = app.add_subcommand("simulate", "simulate the disturbed system");
  CLI::App* observe_cmd = app.add_subcommand("observe", "run the auxiliary observer");
  CLI::App* estimate_cmd = app.add_subcommand("estimate", "run the suboptimal estimator");
  CLI::App* analyze_cmd = app.add_subcommand("analyze", "stability constants and empirical bound checks");
  CLI::App* figure_cmd = app.add_subcommand("reproduce-figure", "write the budget comparison bundle");
  for (CLI::App* sub : {simulate_cmd, observe_cmd, estimate_cmd, analyze_cmd, figure_cmd}) add_common(sub);
  for (CLI::App* sub : {estimate_cmd, analyze_cmd, figure_cmd}) {
    sub->add_option("--budget", opt.budgets, "comma-separated iteration budgets, e.g. 0,2,5,converged");
  }
  estimate_cmd->add_flag("--trace", opt.trace, "dump per-iteration costs to CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*simulate_cmd) return cmd_simulate(opt, out, err);
    if (*observe_cmd) return cmd_observe(opt, out, err);
    if (*estimate_cmd) return cmd_estimate(opt, out, err);
    if (*analyze_cmd) return cmd_analyze(opt, out, err);
    if (*figure_cmd) return cmd_reproduce(opt, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace smhe

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
#ifndef SMHE_SOLVER_HPP
#define SMHE_SOLVER_HPP

#include "smhe/mhe.hpp"

#include <vector>

namespace smhe {

enum class Direction {
  // Steepest descent; backtracking always starts from initial_step.
  Gradient,
  // Steepest descent with a Barzilai-Borwein trial step.
  BarzilaiBorwein,
  // Gauss-Newton direction (needs CostSpec curvature), falling back to the
  // gradient direction whenever its line search fails.
  GaussNewton,
};

struct SolverConfig {
  int max_iterations = 0;
  double gradient_tol = 1e-8;      // projected-gradient norm
  double cost_change_tol = 1e-10;  // relative to max(1, cost)
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  int max_backtracks = 40;
  double initial_step = 1.0;
  Direction direction = Direction::GaussNewton;

  void validate() const;

  static SolverConfig budget(int iterations);
  static SolverConfig converged();
};

inline constexpr int kConvergedIterationCap = 500;

struct IterationReport {
  int iterations_used = 0;
  std::vector<double> cost_trace;  // cost_trace[0] is the candidate cost
  bool converged = false;
  bool line_search_failed = false;
  double feasibility_residual = 0.0;
  double projected_gradient_norm = 0.0;
  int gradient_fallbacks = 0;
};

struct SolveResult {
  DecisionVector solution;
  IterationReport report;
};

/// Gradient of eval_cost with respect to (chi0, omegas) in flattened order,
/// by reverse accumulation through the shooting recursion.
Vector cost_gradient(const HorizonProblem& problem, const DecisionVector& d);

/// Gauss-Newton matrix of eval_cost in flattened decision order.
Matrix gauss_newton_matrix(const HorizonProblem& problem, const DecisionVector& d);

/// Projected descent with Armijo backtracking, warm-started at the
/// candidate and stopped after cfg.max_iterations steps. The returned point is
/// feasible and never costs more than the candidate; with zero iterations it is
/// the candidate itself. Throws NumericError if the candidate is infeasible.
SolveResult solve_suboptimal(const HorizonProblem& problem, const DecisionVector& candidate,
                             const SolverConfig& cfg);

/// Same iteration run until convergence or kConvergedIterationCap steps
/// (whichever of cfg.max_iterations and the cap is larger).
SolveResult solve_converged(const HorizonProblem& problem, const DecisionVector& candidate,
                            const SolverConfig& cfg = SolverConfig::converged());

}  // namespace smhe

#endif  // SMHE_SOLVER_HPP

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
#include "smhe/solver.hpp"

#include "smhe/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace smhe {

namespace {

struct Iterate {
  Vector x;
  double cost;
};

// Projection onto state set (chi0) and disturbance set (omegas).
Vector project_decision(const SystemModel& model, const Vector& flat) {
  Vector out = flat;
  const int n = model.n;
  out.head(n) = model.state_set.project(flat.head(n));
  for (Eigen::Index off = n; off < flat.size(); off += n) {
    out.segment(off, n) = model.disturbance_set.project(flat.segment(off, n));
  }
  return out;
}

// Cost of a trial point, or +inf when it leaves the feasible set or the rollout
// blows up. Residual constraints cannot be projected, so they reject the step.
double trial_cost(const HorizonProblem& problem, const Vector& flat) {
  const DecisionVector d = DecisionVector::unflatten(flat, problem.model->n, problem.horizon());
  try {
    if (!check_feasible(problem, d).feasible) return std::numeric_limits<double>::infinity();
    return eval_cost(problem, d);
  } catch (const NumericError&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

void SolverConfig::validate() const {
  if (max_iterations < 0) throw ConfigError("SolverConfig: max_iterations must be >= 0");
  if (!(gradient_tol > 0.0) || !(cost_change_tol > 0.0)) {
    throw ConfigError("SolverConfig: tolerances must be positive");
  }
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw ConfigError("SolverConfig: armijo_c must lie in (0,1)");
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) {
    throw ConfigError("SolverConfig: backtrack_factor must lie in (0,1)");
  }
  if (max_backtracks < 0) throw ConfigError("SolverConfig: max_backtracks must be >= 0");
  if (!(initial_step > 0.0)) throw ConfigError("SolverConfig: initial_step must be positive");
}

SolverConfig SolverConfig::budget(int iterations) {
  SolverConfig cfg;
  cfg.max_iterations = iterations;
  return cfg;
}

SolverConfig SolverConfig::converged() {
  SolverConfig cfg;
  cfg.max_iterations = kConvergedIterationCap;
  return cfg;
}

Vector cost_gradient(const HorizonProblem& problem, const DecisionVector& d) {
  const SystemModel& model = *problem.model;
  const CostSpec& cost = *problem.cost;
  const WindowRollout r = rollout(problem, d);
  const int n = model.n;
  const int m = problem.horizon();

  Vector grad(static_cast<Eigen::Index>(n) * (m + 1));
  // Sensitivity of the downstream cost to the current window state.
  Vector adjoint = Vector::Zero(n);
  for (int i = m - 1; i >= 0; --i) {
    const Vector& chi = r.states[i];
    grad.segment(static_cast<Eigen::Index>(n) * (i + 1), n) =
        cost.stage_gradient_w(d.omegas[i], r.residuals[i]) + adjoint;
    adjoint = model.f_jacobian(chi).transpose() * adjoint -
              model.h_jacobian(chi).transpose() * cost.stage_gradient_nu(d.omegas[i], r.residuals[i]);
  }
  grad.head(n) = adjoint + cost.prior_gradient(d.chi0, problem.prior);
  if (!grad.allFinite()) throw NumericError("cost_gradient: non-finite gradient");
  return grad;
}

Matrix gauss_newton_matrix(const HorizonProblem& problem, const DecisionVector& d) {
  const SystemModel& model = *problem.model;
  const CostSpec& cost = *problem.cost;
  if (!cost.has_curvature()) throw ConfigError("gauss_newton_matrix: cost has no curvature terms");
  const WindowRollout r = rollout(problem, d);
  const int n = model.n;
  const int m = problem.horizon();
  const Eigen::Index dim = static_cast<Eigen::Index>(n) * (m + 1);

  Matrix gn = Matrix::Zero(dim, dim);
  gn.topLeftCorner(n, n) = cost.prior_hessian(d.chi0, problem.prior);
  // Sensitivity of the current window state to all decision variables.
  Matrix sens = Matrix::Zero(n, dim);
  sens.leftCols(n).setIdentity();
  for (int i = 0; i < m; ++i) {
    const Vector& chi = r.states[i];
    const Eigen::Index off = static_cast<Eigen::Index>(n) * (i + 1);
    gn.block(off, off, n, n) += cost.stage_hessian_w(d.omegas[i], r.residuals[i]);
    const Matrix out_sens = model.h_jacobian(chi) * sens;
    gn.noalias() += out_sens.transpose() * cost.stage_hessian_nu(d.omegas[i], r.residuals[i]) * out_sens;
    sens = model.f_jacobian(chi) * sens;
    sens.middleCols(off, n) += Matrix::Identity(n, n);
  }
  if (!gn.allFinite()) throw NumericError("gauss_newton_matrix: non-finite value");
  return gn;
}

namespace {

// Backtracks along x(s) = P(x + s * dir) from `step`. Returns true and fills
// `next` when the Armijo condition holds.
bool line_search(const HorizonProblem& problem, const SolverConfig& cfg, const Iterate& cur,
                 const Vector& g, const Vector& dir, double step, Iterate& next) {
  const SystemModel& model = *problem.model;
  for (int bt = 0; bt <= cfg.max_backtracks; ++bt, step *= cfg.backtrack_factor) {
    next.x = project_decision(model, cur.x + step * dir);
    const double decrease = g.dot(next.x - cur.x);
    if (!(decrease < 0.0)) continue;
    next.cost = trial_cost(problem, next.x);
    if (next.cost <= cur.cost + cfg.armijo_c * decrease && next.cost <= cur.cost) return true;
  }
  return false;
}

std::optional<Vector> newton_direction(const HorizonProblem& problem, const Vector& x, const Vector& g) {
  const DecisionVector d = DecisionVector::unflatten(x, problem.model->n, problem.horizon());
  Matrix gn = gauss_newton_matrix(problem, d);
  const double shift = 1e-10 * std::max(1.0, gn.diagonal().cwiseAbs().maxCoeff());
  gn.diagonal().array() += shift;
  Eigen::LDLT<Matrix> ldlt(gn);
  if (ldlt.info() != Eigen::Success) return std::nullopt;
  Vector dir = -ldlt.solve(g);
  if (!dir.allFinite() || !(g.dot(dir) < 0.0)) return std::nullopt;
  return dir;
}

SolveResult run_descent(const HorizonProblem& problem, const DecisionVector& candidate,
                        const SolverConfig& cfg, int iteration_limit) {
  cfg.validate();
  problem.validate();
  const SystemModel& model = *problem.model;
  const bool use_newton = cfg.direction == Direction::GaussNewton && problem.cost->has_curvature();

  const FeasibilityReport start = check_feasible(problem, candidate);
  if (!start.feasible) {
    throw NumericError("solver: candidate violates the window constraints (" +
                       to_string(start.violations.front().kind) + " at index " +
                       std::to_string(start.violations.front().index) + ")");
  }

  SolveResult result;
  result.solution = candidate;
  IterationReport& report = result.report;
  Iterate cur{candidate.flatten(), eval_cost(problem, candidate)};
  report.cost_trace.push_back(cur.cost);
  report.feasibility_residual = start.max_violation;

  if (iteration_limit == 0) return result;

  Vector prev_x, prev_g;
  for (int it = 0; it < iteration_limit; ++it) {
    const Vector g = cost_gradient(problem, DecisionVector::unflatten(cur.x, model.n, problem.horizon()));
    const Vector pg = cur.x - project_decision(model, cur.x - g);
    report.projected_gradient_norm = pg.norm();
    if (report.projected_gradient_norm <= cfg.gradient_tol) {
      report.converged = true;
      break;
    }

    ++report.iterations_used;
    Iterate next;
    bool accepted = false;
    if (use_newton) {
      if (const auto dir = newton_direction(problem, cur.x, g)) {
        accepted = line_search(problem, cfg, cur, g, *dir, 1.0, next);
      }
      if (!accepted) ++report.gradient_fallbacks;
    }
    if (!accepted) {
      double step = cfg.initial_step;
      if (cfg.direction == Direction::BarzilaiBorwein && prev_x.size() == cur.x.size()) {
        const Vector s = cur.x - prev_x;
        const double sy = s.dot(g - prev_g);
        if (sy > 0.0) step = std::clamp(s.squaredNorm() / sy, 1e-10, 1e10);
      }
      accepted = line_search(problem, cfg, cur, g, -g, step, next);
    }
    if (!accepted) {
      report.line_search_failed = true;
      break;
    }

    const double change = cur.cost - next.cost;
    prev_x = std::move(cur.x);
    prev_g = g;
    cur = std::move(next);
    report.cost_trace.push_back(cur.cost);
    if (change <= cfg.cost_change_tol * std::max(1.0, std::abs(cur.cost))) {
      report.converged = true;
      break;
    }
  }

  result.solution = DecisionVector::unflatten(cur.x, model.n, problem.horizon());
  report.feasibility_residual = check_feasible(problem, result.solution).max_violation;
  return result;
}

}  // namespace

SolveResult solve_suboptimal(const HorizonProblem& problem, const DecisionVector& candidate,
                             const SolverConfig& cfg) {
  return run_descent(problem, candidate, cfg, cfg.max_iterations);
}

SolveResult solve_converged(const HorizonProblem& problem, const DecisionVector& candidate,
                            const SolverConfig& cfg) {
  return run_descent(problem, candidate, cfg, std::max(cfg.max_iterations, kConvergedIterationCap));
}

}  // namespace smhe

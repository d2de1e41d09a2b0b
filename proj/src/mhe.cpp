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
#include "smhe/mhe.hpp"

#include "smhe/errors.hpp"

#include <algorithm>
#include <cmath>

namespace smhe {

namespace {

std::pair<double, double> eigen_range(const Matrix& weight, const char* what) {
  if (weight.rows() != weight.cols() || weight.size() == 0) {
    throw ConfigError(std::string(what) + ": weight must be square and nonempty");
  }
  if ((weight - weight.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, weight.cwiseAbs().maxCoeff())) {
    throw ConfigError(std::string(what) + ": weight must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(weight);
  const double lo = eig.eigenvalues().minCoeff();
  if (!(lo > 0.0)) throw ConfigError(std::string(what) + ": weight must be positive definite");
  return {lo, eig.eigenvalues().maxCoeff()};
}

}  // namespace

CostSpec quadratic_cost(const Matrix& prior_weight, const Matrix& disturbance_weight,
                        const Matrix& noise_weight) {
  const auto [lp, up] = eigen_range(prior_weight, "prior weight");
  const auto [lw, uw] = eigen_range(disturbance_weight, "disturbance weight");
  const auto [lv, uv] = eigen_range(noise_weight, "noise weight");

  CostSpec c;
  c.prior_weight = [P = prior_weight](const Vector& chi, const Vector& prior) {
    const Vector d = chi - prior;
    return d.dot(P * d);
  };
  c.prior_gradient = [P = prior_weight](const Vector& chi, const Vector& prior) -> Vector {
    return 2.0 * (P * (chi - prior));
  };
  c.stage = [W = disturbance_weight, V = noise_weight](const Vector& w, const Vector& nu) {
    return w.dot(W * w) + nu.dot(V * nu);
  };
  c.stage_gradient_w = [W = disturbance_weight](const Vector& w, const Vector&) -> Vector {
    return 2.0 * (W * w);
  };
  c.stage_gradient_nu = [V = noise_weight](const Vector&, const Vector& nu) -> Vector {
    return 2.0 * (V * nu);
  };
  c.prior_hessian = [H = Matrix(2.0 * prior_weight)](const Vector&, const Vector&) { return H; };
  c.stage_hessian_w = [H = Matrix(2.0 * disturbance_weight)](const Vector&, const Vector&) { return H; };
  c.stage_hessian_nu = [H = Matrix(2.0 * noise_weight)](const Vector&, const Vector&) { return H; };
  c.bounds = CostBounds{lp, up, lw, uw, lv, uv, 2.0};
  return c;
}

CostSpec batch_reactor_cost(const Matrix& Q, const Matrix& R) {
  return quadratic_cost(Matrix::Identity(Q.rows(), Q.rows()), Q.inverse(), R.inverse());
}

void HorizonProblem::validate() const {
  if (!model || !cost) throw ConfigError("HorizonProblem: model and cost are required");
  if (prior.size() != model->n) throw ConfigError("HorizonProblem: prior dimension mismatch");
  if (window_start < 0) throw ConfigError("HorizonProblem: negative window start");
  for (const auto& y : measurements) {
    if (y.size() != model->p) throw ConfigError("HorizonProblem: measurement dimension mismatch");
  }
}

Vector DecisionVector::flatten() const {
  const auto n = chi0.size();
  Vector flat(n * static_cast<Eigen::Index>(omegas.size() + 1));
  flat.head(n) = chi0;
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    flat.segment(n * static_cast<Eigen::Index>(i + 1), n) = omegas[i];
  }
  return flat;
}

DecisionVector DecisionVector::unflatten(const Vector& flat, int n, int horizon) {
  if (flat.size() != static_cast<Eigen::Index>(n) * (horizon + 1)) {
    throw ConfigError("DecisionVector::unflatten: size mismatch");
  }
  DecisionVector d;
  d.chi0 = flat.head(n);
  d.omegas.reserve(horizon);
  for (int i = 0; i < horizon; ++i) d.omegas.push_back(flat.segment(static_cast<Eigen::Index>(n) * (i + 1), n));
  return d;
}

WindowRollout rollout(const HorizonProblem& problem, const DecisionVector& d) {
  const SystemModel& model = *problem.model;
  const int m = problem.horizon();
  if (d.chi0.size() != model.n || static_cast<int>(d.omegas.size()) != m) {
    throw ConfigError("rollout: decision vector does not match the window");
  }
  WindowRollout r;
  r.states.reserve(m + 1);
  r.residuals.reserve(m);
  r.states.push_back(d.chi0);
  r.cost = problem.cost->prior_weight(d.chi0, problem.prior);
  for (int i = 0; i < m; ++i) {
    const Vector& chi = r.states.back();
    if (d.omegas[i].size() != model.n) throw ConfigError("rollout: disturbance dimension mismatch");
    Vector nu = problem.measurements[i] - model.h(chi);
    r.cost += problem.cost->stage(d.omegas[i], nu);
    r.residuals.push_back(std::move(nu));
    Vector next = model.f(chi) + d.omegas[i];
    if (!next.allFinite()) throw NumericError("rollout: non-finite window state");
    r.states.push_back(std::move(next));
  }
  if (!std::isfinite(r.cost)) throw NumericError("rollout: non-finite cost");
  return r;
}

double eval_cost(const HorizonProblem& problem, const DecisionVector& d) {
  return rollout(problem, d).cost;
}

DecisionVector build_candidate(const ObserverLog& olog, int window_start, int horizon) {
  if (window_start < 0 || horizon < 0 || window_start + horizon > olog.steps()) {
    throw ConfigError("build_candidate: observer log does not cover the window");
  }
  DecisionVector d;
  d.chi0 = olog.states[window_start];
  d.omegas.assign(olog.corrections.begin() + window_start,
                  olog.corrections.begin() + window_start + horizon);
  return d;
}

HorizonProblem make_window(ModelPtr model, CostPtr cost, const std::vector<Vector>& outputs,
                           const ObserverLog& olog, int t, int max_horizon) {
  if (t < 0) throw ConfigError("make_window: negative time");
  if (max_horizon < 1) throw ConfigError("make_window: horizon must be at least 1");
  if (static_cast<int>(outputs.size()) < t) throw ConfigError("make_window: missing measurements");
  const int m = std::min(max_horizon, t);
  const int start = t - m;
  if (start >= static_cast<int>(olog.states.size())) {
    throw ConfigError("make_window: observer log does not reach the window start");
  }
  HorizonProblem p;
  p.model = std::move(model);
  p.cost = std::move(cost);
  p.prior = olog.states[start];
  p.measurements.assign(outputs.begin() + start, outputs.begin() + t);
  p.window_start = start;
  return p;
}

HorizonProblem advance_window(const HorizonProblem& current, const std::vector<Vector>& outputs,
                              const ObserverLog& olog, int max_horizon) {
  return make_window(current.model, current.cost, outputs, olog, current.end_time() + 1, max_horizon);
}

FeasibilityReport check_feasible(const HorizonProblem& problem, const DecisionVector& d, double tol) {
  const SystemModel& model = *problem.model;
  const WindowRollout r = rollout(problem, d);
  FeasibilityReport report;
  auto note = [&](Violation::Kind kind, int index, double amount) {
    report.max_violation = std::max(report.max_violation, amount);
    if (amount > tol) {
      report.feasible = false;
      report.violations.push_back({kind, index, amount});
    }
  };
  for (std::size_t i = 0; i < r.states.size(); ++i) {
    note(Violation::Kind::State, static_cast<int>(i), model.state_set.violation(r.states[i]));
  }
  for (std::size_t i = 0; i < d.omegas.size(); ++i) {
    note(Violation::Kind::Disturbance, static_cast<int>(i), model.disturbance_set.violation(d.omegas[i]));
    note(Violation::Kind::Residual, static_cast<int>(i), model.noise_set.violation(r.residuals[i]));
  }
  return report;
}

std::string to_string(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::State: return "state";
    case Violation::Kind::Disturbance: return "disturbance";
    case Violation::Kind::Residual: return "residual";
  }
  return "unknown";
}

}  // namespace smhe

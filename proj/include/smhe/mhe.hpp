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
#ifndef SMHE_MHE_HPP
#define SMHE_MHE_HPP

#include "smhe/dynamics.hpp"
#include "smhe/observer.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace smhe {

/// Constants of the two-sided power bounds
///   lower_p |chi - prior|^a <= prior_weight(chi, prior) <= upper_p |chi - prior|^a
///   lower_w |w|^a + lower_v |nu|^a <= stage(w, nu) <= upper_w |w|^a + upper_v |nu|^a
struct CostBounds {
  double lower_p = 1.0;
  double upper_p = 1.0;
  double lower_w = 1.0;
  double upper_w = 1.0;
  double lower_v = 1.0;
  double upper_v = 1.0;
  double exponent = 2.0;
};

struct CostSpec {
  std::function<double(const Vector& chi, const Vector& prior)> prior_weight;
  std::function<Vector(const Vector& chi, const Vector& prior)> prior_gradient;
  std::function<double(const Vector& w, const Vector& nu)> stage;
  std::function<Vector(const Vector& w, const Vector& nu)> stage_gradient_w;
  std::function<Vector(const Vector& w, const Vector& nu)> stage_gradient_nu;
  // Optional curvature of each term, used for Gauss-Newton directions. The
  // stage cost is assumed separable in (w, nu) when these are given.
  std::function<Matrix(const Vector& chi, const Vector& prior)> prior_hessian;
  std::function<Matrix(const Vector& w, const Vector& nu)> stage_hessian_w;
  std::function<Matrix(const Vector& w, const Vector& nu)> stage_hessian_nu;
  CostBounds bounds;

  bool has_curvature() const { return prior_hessian && stage_hessian_w && stage_hessian_nu; }
};

using CostPtr = std::shared_ptr<const CostSpec>;

/// prior_weight = (chi - prior)' P (chi - prior), stage = w' Qinv w + nu' Rinv nu.
/// The bound constants are the extreme eigenvalues of each weight, exponent 2.
CostSpec quadratic_cost(const Matrix& prior_weight, const Matrix& disturbance_weight,
                        const Matrix& noise_weight);

/// Identity prior weight with inverse-covariance stage weights.
CostSpec batch_reactor_cost(const Matrix& Q, const Matrix& R);

/// One estimation window. Measurements cover times window_start .. window_start + M - 1,
/// and the estimate it produces is for time window_start + M.
struct HorizonProblem {
  ModelPtr model;
  CostPtr cost;
  StateVector prior;
  std::vector<Vector> measurements;
  int window_start = 0;

  int horizon() const { return static_cast<int>(measurements.size()); }
  int end_time() const { return window_start + horizon(); }
  void validate() const;
};

/// Decision variables: initial window state and the disturbance sequence.
struct DecisionVector {
  StateVector chi0;
  std::vector<Vector> omegas;

  Vector flatten() const;
  static DecisionVector unflatten(const Vector& flat, int n, int horizon);
};

struct WindowRollout {
  std::vector<StateVector> states;   // M + 1 entries
  std::vector<Vector> residuals;     // M entries
  double cost = 0.0;

  const StateVector& end_state() const { return states.back(); }
};

/// Single-shooting forward pass. Throws NumericError on non-finite states.
WindowRollout rollout(const HorizonProblem& problem, const DecisionVector& d);

double eval_cost(const HorizonProblem& problem, const DecisionVector& d);

/// Candidate that reproduces the observer: chi0 = z(start), omegas = L(start .. start+M-1).
DecisionVector build_candidate(const ObserverLog& olog, int window_start, int horizon);

/// Window for estimation time t with horizon min(N, t) and prior z(t - M).
HorizonProblem make_window(ModelPtr model, CostPtr cost, const std::vector<Vector>& outputs,
                           const ObserverLog& olog, int t, int max_horizon);

/// Moves the window from t to t + 1. `outputs` must already contain y(t) and
/// the observer log must reach z(t + 1 - M).
HorizonProblem advance_window(const HorizonProblem& current, const std::vector<Vector>& outputs,
                              const ObserverLog& olog, int max_horizon);

struct Violation {
  enum class Kind { State, Disturbance, Residual };
  Kind kind;
  int index;
  double amount;
};

struct FeasibilityReport {
  bool feasible = true;
  double max_violation = 0.0;
  std::vector<Violation> violations;
};

inline constexpr double kFeasibilityTol = 1e-9;

FeasibilityReport check_feasible(const HorizonProblem& problem, const DecisionVector& d,
                                 double tol = kFeasibilityTol);

std::string to_string(Violation::Kind kind);

}  // namespace smhe

#endif  // SMHE_MHE_HPP

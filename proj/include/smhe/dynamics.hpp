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
#ifndef SMHE_DYNAMICS_HPP
#define SMHE_DYNAMICS_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace smhe {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using StateVector = Eigen::VectorXd;

using VectorMap = std::function<Vector(const Vector&)>;
using JacobianMap = std::function<Matrix(const Vector&)>;

/// Axis-aligned box, entries may be infinite. Used for the state, disturbance
/// and measurement-noise sets.
class BoxSet {
 public:
  BoxSet() = default;
  BoxSet(Vector lower, Vector upper);

  static BoxSet unbounded(Eigen::Index dim);
  static BoxSet zero(Eigen::Index dim);

  Eigen::Index dim() const { return lower_.size(); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }

  bool is_unbounded() const;
  bool contains(const Vector& x, double tol = 0.0) const;
  // Largest elementwise distance outside the box, 0 when inside.
  double violation(const Vector& x) const;
  Vector project(const Vector& x) const;

 private:
  Vector lower_;
  Vector upper_;
};

/// Discrete-time system x(t+1) = f(x(t)) + w(t), y(t) = h(x(t)) + v(t).
///
/// The Jacobians are only needed by the solver's gradient; they must be the
/// exact derivatives of f and h.
struct SystemModel {
  std::string name;
  int n = 0;
  int p = 0;
  VectorMap f;
  JacobianMap f_jacobian;
  VectorMap h;
  JacobianMap h_jacobian;
  BoxSet state_set;
  BoxSet disturbance_set;
  BoxSet noise_set;
  double lipschitz_h = 0.0;

  void validate() const;
};

using ModelPtr = std::shared_ptr<const SystemModel>;

struct TrajectoryLog {
  std::vector<StateVector> states;     // T + 1 entries
  std::vector<Vector> outputs;         // T entries
  std::vector<Vector> disturbances;    // T entries
  std::vector<Vector> noises;          // T entries
  std::vector<std::string> warnings;

  int steps() const { return static_cast<int>(outputs.size()); }
};

struct NoiseSpec {
  Matrix covariance_w;
  Matrix covariance_v;
  std::uint64_t seed = 0;
};

struct NoiseDraw {
  std::vector<Vector> w;
  std::vector<Vector> v;
  std::vector<std::string> warnings;
};

// Reaction 2A <-> B in a constant-volume batch reactor.
inline constexpr double kReactorK1 = 0.16;
inline constexpr double kReactorK2 = 0.64;
inline constexpr double kReactorSampling = 0.1;

Vector batch_reactor_drift(const Vector& x);
Matrix batch_reactor_drift_jacobian(const Vector& x);

/// One classical Runge-Kutta step. Throws NumericError on a non-finite stage.
Vector rk4_step(const VectorMap& drift, const Vector& x, double dt);

/// Exact Jacobian of rk4_step with respect to x (chain rule through the stages).
Matrix rk4_step_jacobian(const VectorMap& drift, const JacobianMap& drift_jacobian,
                         const Vector& x, double dt);

/// Batch reactor sampled with RK4, output y = x1 + x2, unbounded sets.
SystemModel batch_reactor_model(double dt = kReactorSampling);

/// x+ = A x, y = C x. Mostly for tests with closed-form answers.
SystemModel linear_model(const Matrix& A, const Matrix& C);

/// Rolls the model forward. states[k+1] = f(states[k]) + w[k],
/// outputs[k] = h(states[k]) + v[k]. Leaving the state set is reported in
/// the log's warnings, never projected.
TrajectoryLog simulate(const SystemModel& model, const StateVector& x0,
                       const std::vector<Vector>& w, const std::vector<Vector>& v, int steps);

/// Gaussian disturbance/noise sequences, reproducible for a given seed.
// Throws ConfigError unless cov is square, symmetric and positive semidefinite.
void check_covariance(const Matrix& cov, const char* what);

NoiseDraw draw_noise(const NoiseSpec& spec, int steps);

/// As above, then projects each sample onto the model's bounded disturbance and
/// noise sets. Every projected sample is noted in the warnings.
NoiseDraw draw_noise(const NoiseSpec& spec, int steps, const SystemModel& model);

bool all_finite(const Vector& x);

}  // namespace smhe

#endif  // SMHE_DYNAMICS_HPP

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
#ifndef SMHE_OBSERVER_HPP
#define SMHE_OBSERVER_HPP

#include "smhe/dynamics.hpp"

#include <functional>
#include <string>
#include <vector>

namespace smhe {

using CorrectionMap = std::function<Vector(const Vector& z, const Vector& fitting_error)>;

/// Output-injection observer z(t+1) = f(z(t)) + L(z(t), y(t) - h(z(t))).
/// The correction must vanish for a zero fitting error and satisfy
/// |L(z, v_z)| <= kappa |v_z|.
struct ObserverSpec {
  ModelPtr model;
  CorrectionMap correction;
  double kappa = 0.0;
};

struct ObserverStep {
  StateVector z_next;
  Vector fitting_error;
  Vector correction;
  bool projected = false;
};

/// Observer trajectory over a measurement record. For every k,
/// states[k+1] == f(states[k]) + corrections[k] and
/// fitting_errors[k] == y[k] - h(states[k]).
struct ObserverLog {
  std::vector<StateVector> states;
  std::vector<Vector> fitting_errors;
  std::vector<Vector> corrections;
  std::vector<std::string> warnings;

  int steps() const { return static_cast<int>(corrections.size()); }
};

/// Constant-gain injection sampled like the drift: L(z, v_z) = dt * gain * v_z,
/// with kappa = dt * ||gain||_2.
ObserverSpec constant_gain_observer(ModelPtr model, const Matrix& gain, double dt);

/// The reactor's Luenberger-like observer, gains L1 = L2 = 0.5.
ObserverSpec batch_reactor_observer(ModelPtr model, double dt = kReactorSampling);
ObserverSpec batch_reactor_observer();

inline const Vector& batch_reactor_observer_initial_state() {
  static const Vector z0 = (Vector(2) << 3.0, 0.0).finished();
  return z0;
}

// If z_next leaves the state set it is projected back, and the returned
// correction is z_next - f(z) so that the output-injection identity holds for
// whatever was logged.
ObserverStep observer_step(const ObserverSpec& spec, const StateVector& z, const Vector& y);

ObserverLog run_observer(const ObserverSpec& spec, const StateVector& z0,
                         const std::vector<Vector>& outputs);

}  // namespace smhe

#endif  // SMHE_OBSERVER_HPP

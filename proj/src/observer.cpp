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
#include "smhe/observer.hpp"

#include "smhe/errors.hpp"

namespace smhe {

ObserverSpec constant_gain_observer(ModelPtr model, const Matrix& gain, double dt) {
  if (!model) throw ConfigError("constant_gain_observer: missing model");
  if (gain.rows() != model->n || gain.cols() != model->p) {
    throw ConfigError("constant_gain_observer: gain must be n x p");
  }
  if (!(dt > 0.0)) throw ConfigError("constant_gain_observer: dt must be positive");
  ObserverSpec spec;
  spec.model = std::move(model);
  spec.correction = [scaled = Matrix(dt * gain)](const Vector&, const Vector& vz) -> Vector {
    return scaled * vz;
  };
  spec.kappa = dt * Eigen::JacobiSVD<Matrix>(gain).singularValues()(0);
  return spec;
}

ObserverSpec batch_reactor_observer(ModelPtr model, double dt) {
  return constant_gain_observer(std::move(model), Matrix::Constant(2, 1, 0.5), dt);
}

ObserverSpec batch_reactor_observer() {
  return batch_reactor_observer(std::make_shared<const SystemModel>(batch_reactor_model()));
}

ObserverStep observer_step(const ObserverSpec& spec, const StateVector& z, const Vector& y) {
  const SystemModel& model = *spec.model;
  if (z.size() != model.n || y.size() != model.p) {
    throw ConfigError("observer_step: dimension mismatch");
  }
  ObserverStep step;
  step.fitting_error = y - model.h(z);
  step.correction = spec.correction(z, step.fitting_error);
  const Vector fz = model.f(z);
  step.z_next = fz + step.correction;
  if (!step.z_next.allFinite()) throw NumericError("observer_step: non-finite observer state");
  if (!model.state_set.contains(step.z_next)) {
    step.z_next = model.state_set.project(step.z_next);
    step.correction = step.z_next - fz;
    step.projected = true;
  }
  return step;
}

ObserverLog run_observer(const ObserverSpec& spec, const StateVector& z0,
                         const std::vector<Vector>& outputs) {
  if (!spec.model) throw ConfigError("run_observer: missing model");
  if (z0.size() != spec.model->n) throw ConfigError("run_observer: z0 dimension mismatch");
  ObserverLog log;
  log.states.reserve(outputs.size() + 1);
  log.states.push_back(z0);
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    ObserverStep step = observer_step(spec, log.states.back(), outputs[k]);
    if (step.projected) {
      log.warnings.push_back("t=" + std::to_string(k + 1) + ": observer state projected onto state set");
    }
    log.fitting_errors.push_back(std::move(step.fitting_error));
    log.corrections.push_back(std::move(step.correction));
    log.states.push_back(std::move(step.z_next));
  }
  return log;
}

}  // namespace smhe

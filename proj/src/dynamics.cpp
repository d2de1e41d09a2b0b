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
#include "smhe/dynamics.hpp"

#include "smhe/errors.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace smhe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_dim(const Vector& x, Eigen::Index n, const char* what) {
  if (x.size() != n) {
    std::ostringstream os;
    os << what << ": expected dimension " << n << ", got " << x.size();
    throw ConfigError(os.str());
  }
}

// Symmetric square root factor S with S S^T = cov. Rejects indefinite input.
Matrix psd_factor(const Matrix& cov, const char* what) {
  if (cov.rows() != cov.cols()) {
    throw ConfigError(std::string(what) + ": covariance must be square");
  }
  if (cov.size() == 0) return cov;
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if (!cov.allFinite() || (cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ConfigError(std::string(what) + ": covariance must be finite and symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.eigenvalues().minCoeff() < -1e-12 * scale) {
    throw ConfigError(std::string(what) + ": covariance is not positive semidefinite");
  }
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

}  // namespace

BoxSet::BoxSet(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) {
    throw ConfigError("BoxSet: bound dimensions differ");
  }
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    if (std::isnan(lower_[i]) || std::isnan(upper_[i]) || lower_[i] > upper_[i]) {
      throw ConfigError("BoxSet: lower bound must not exceed upper bound");
    }
  }
}

BoxSet BoxSet::unbounded(Eigen::Index dim) {
  return BoxSet(Vector::Constant(dim, -kInf), Vector::Constant(dim, kInf));
}

BoxSet BoxSet::zero(Eigen::Index dim) { return BoxSet(Vector::Zero(dim), Vector::Zero(dim)); }

bool BoxSet::is_unbounded() const {
  return (lower_.array() == -kInf).all() && (upper_.array() == kInf).all();
}

bool BoxSet::contains(const Vector& x, double tol) const { return violation(x) <= tol; }

double BoxSet::violation(const Vector& x) const {
  require_dim(x, dim(), "BoxSet");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (std::isnan(x[i])) return kInf;
    worst = std::max({worst, lower_[i] - x[i], x[i] - upper_[i]});
  }
  return worst;
}

Vector BoxSet::project(const Vector& x) const {
  require_dim(x, dim(), "BoxSet");
  return x.cwiseMax(lower_).cwiseMin(upper_);
}

void SystemModel::validate() const {
  if (n <= 0 || p <= 0) throw ConfigError("SystemModel: dimensions must be positive");
  if (!f || !h) throw ConfigError("SystemModel: f and h are required");
  if (state_set.dim() != n || disturbance_set.dim() != n || noise_set.dim() != p) {
    throw ConfigError("SystemModel: constraint set dimensions do not match the model");
  }
  if (lipschitz_h < 0.0) throw ConfigError("SystemModel: lipschitz_h must be nonnegative");
}

bool all_finite(const Vector& x) { return x.allFinite(); }

Vector batch_reactor_drift(const Vector& x) {
  require_dim(x, 2, "batch_reactor_drift");
  const double r = kReactorK1 * x[0] * x[0] - kReactorK2 * x[1];
  Vector dx(2);
  dx << -2.0 * r, r;
  return dx;
}

Matrix batch_reactor_drift_jacobian(const Vector& x) {
  require_dim(x, 2, "batch_reactor_drift_jacobian");
  Matrix jac(2, 2);
  jac << -4.0 * kReactorK1 * x[0], 2.0 * kReactorK2,
          2.0 * kReactorK1 * x[0], -kReactorK2;
  return jac;
}

Vector rk4_step(const VectorMap& drift, const Vector& x, double dt) {
  if (!(dt > 0.0)) throw ConfigError("rk4_step: dt must be positive");
  auto checked = [](Vector v) {
    if (!v.allFinite()) throw NumericError("rk4_step: non-finite stage value");
    return v;
  };
  const Vector k1 = checked(drift(x));
  const Vector k2 = checked(drift(x + 0.5 * dt * k1));
  const Vector k3 = checked(drift(x + 0.5 * dt * k2));
  const Vector k4 = checked(drift(x + dt * k3));
  return checked(x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

Matrix rk4_step_jacobian(const VectorMap& drift, const JacobianMap& drift_jacobian,
                         const Vector& x, double dt) {
  const auto n = x.size();
  const Matrix eye = Matrix::Identity(n, n);
  const Vector k1 = drift(x);
  const Vector k2 = drift(x + 0.5 * dt * k1);
  const Vector k3 = drift(x + 0.5 * dt * k2);
  const Matrix j1 = drift_jacobian(x);
  const Matrix j2 = drift_jacobian(x + 0.5 * dt * k1) * (eye + 0.5 * dt * j1);
  const Matrix j3 = drift_jacobian(x + 0.5 * dt * k2) * (eye + 0.5 * dt * j2);
  const Matrix j4 = drift_jacobian(x + dt * k3) * (eye + dt * j3);
  Matrix jac = eye + (dt / 6.0) * (j1 + 2.0 * j2 + 2.0 * j3 + j4);
  if (!jac.allFinite()) throw NumericError("rk4_step_jacobian: non-finite value");
  return jac;
}

SystemModel batch_reactor_model(double dt) {
  if (!(dt > 0.0)) throw ConfigError("batch_reactor_model: sampling time must be positive");
  SystemModel m;
  m.name = "batch_reactor";
  m.n = 2;
  m.p = 1;
  m.f = [dt](const Vector& x) { return rk4_step(batch_reactor_drift, x, dt); };
  m.f_jacobian = [dt](const Vector& x) {
    return rk4_step_jacobian(batch_reactor_drift, batch_reactor_drift_jacobian, x, dt);
  };
  m.h = [](const Vector& x) {
    require_dim(x, 2, "batch_reactor output");
    return Vector::Constant(1, x[0] + x[1]);
  };
  m.h_jacobian = [](const Vector&) { return Matrix::Ones(1, 2); };
  m.state_set = BoxSet::unbounded(2);
  m.disturbance_set = BoxSet::unbounded(2);
  m.noise_set = BoxSet::unbounded(1);
  m.lipschitz_h = std::sqrt(2.0);
  return m;
}

SystemModel linear_model(const Matrix& A, const Matrix& C) {
  if (A.rows() != A.cols() || C.cols() != A.cols()) {
    throw ConfigError("linear_model: inconsistent matrix shapes");
  }
  SystemModel m;
  m.name = "linear";
  m.n = static_cast<int>(A.rows());
  m.p = static_cast<int>(C.rows());
  m.f = [A](const Vector& x) -> Vector { return A * x; };
  m.f_jacobian = [A](const Vector&) -> Matrix { return A; };
  m.h = [C](const Vector& x) -> Vector { return C * x; };
  m.h_jacobian = [C](const Vector&) -> Matrix { return C; };
  m.state_set = BoxSet::unbounded(m.n);
  m.disturbance_set = BoxSet::unbounded(m.n);
  m.noise_set = BoxSet::unbounded(m.p);
  m.lipschitz_h = Eigen::JacobiSVD<Matrix>(C).singularValues()(0);
  return m;
}

TrajectoryLog simulate(const SystemModel& model, const StateVector& x0,
                       const std::vector<Vector>& w, const std::vector<Vector>& v, int steps) {
  if (steps < 0) throw ConfigError("simulate: negative step count");
  if (static_cast<int>(w.size()) < steps || static_cast<int>(v.size()) < steps) {
    throw ConfigError("simulate: disturbance/noise sequences shorter than the horizon");
  }
  require_dim(x0, model.n, "simulate x0");
  TrajectoryLog log;
  log.states.reserve(steps + 1);
  log.states.push_back(x0);
  if (!model.state_set.contains(x0)) log.warnings.push_back("t=0: initial state outside state set");
  for (int k = 0; k < steps; ++k) {
    const Vector& x = log.states.back();
    require_dim(w[k], model.n, "simulate w");
    require_dim(v[k], model.p, "simulate v");
    log.outputs.push_back(model.h(x) + v[k]);
    log.disturbances.push_back(w[k]);
    log.noises.push_back(v[k]);
    Vector next = model.f(x) + w[k];
    if (!next.allFinite()) {
      throw NumericError("simulate: non-finite state at t=" + std::to_string(k + 1));
    }
    if (!model.state_set.contains(next)) {
      log.warnings.push_back("t=" + std::to_string(k + 1) + ": state left the state set");
    }
    log.states.push_back(std::move(next));
  }
  return log;
}

void check_covariance(const Matrix& cov, const char* what) { psd_factor(cov, what); }

NoiseDraw draw_noise(const NoiseSpec& spec, int steps) {
  if (steps < 0) throw ConfigError("draw_noise: negative step count");
  const Matrix sw = psd_factor(spec.covariance_w, "draw_noise w");
  const Matrix sv = psd_factor(spec.covariance_v, "draw_noise v");
  std::mt19937_64 engine(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto sample = [&](const Matrix& factor) {
    Vector z(factor.cols());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(engine);
    return Vector(factor * z);
  };
  NoiseDraw draw;
  draw.w.reserve(steps);
  draw.v.reserve(steps);
  for (int k = 0; k < steps; ++k) draw.w.push_back(sample(sw));
  for (int k = 0; k < steps; ++k) draw.v.push_back(sample(sv));
  return draw;
}

NoiseDraw draw_noise(const NoiseSpec& spec, int steps, const SystemModel& model) {
  NoiseDraw draw = draw_noise(spec, steps);
  for (int k = 0; k < steps; ++k) {
    if (!model.disturbance_set.contains(draw.w[k])) {
      draw.w[k] = model.disturbance_set.project(draw.w[k]);
      draw.warnings.push_back("t=" + std::to_string(k) + ": w projected onto disturbance set");
    }
    if (!model.noise_set.contains(draw.v[k])) {
      draw.v[k] = model.noise_set.project(draw.v[k]);
      draw.warnings.push_back("t=" + std::to_string(k) + ": v projected onto noise set");
    }
  }
  return draw;
}

}  // namespace smhe

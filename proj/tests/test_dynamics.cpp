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
#include <doctest.h>

#include "oracles.hpp"
#include "smhe/dynamics.hpp"
#include "smhe/errors.hpp"
#include "smhe/io.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace smhe;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

std::vector<Vector> zeros(int count, Eigen::Index dim) { return std::vector<Vector>(count, Vector::Zero(dim)); }

}  // namespace

TEST_CASE("batch reactor drift") {
  const Vector d = batch_reactor_drift(vec({5.0, 2.0}));
  CHECK(d[0] == doctest::Approx(-5.44).epsilon(1e-14));
  CHECK(d[1] == doctest::Approx(2.72).epsilon(1e-14));

  CHECK(batch_reactor_drift(vec({0.0, 0.0})).isZero(0.0));
  // (2, 1) balances the forward and backward reactions.
  CHECK(batch_reactor_drift(vec({2.0, 1.0})).isZero(0.0));

  CHECK_THROWS_AS(batch_reactor_drift(vec({1.0, 2.0, 3.0})), ConfigError);
}

TEST_CASE("rk4 step") {
  SUBCASE("exact for a constant field") {
    const Vector c = vec({1.5, -0.25});
    const VectorMap constant = [c](const Vector&) { return c; };
    const Vector x = vec({0.3, 7.0});
    const Vector next = rk4_step(constant, x, 0.1);
    CHECK((next - (x + 0.1 * c)).cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("agrees with a fine Euler integration of the reactor") {
    const Vector x = vec({5.0, 2.0});
    const Vector ref = oracle::fine_euler(oracle::reactor_drift, x, 0.1, 1e-6);
    // A single step of 0.1 carries a local error near 5e-5 at this state.
    CHECK((rk4_step(batch_reactor_drift, x, 0.1) - ref).cwiseAbs().maxCoeff() <= 1e-4);
    // Substepping shrinks it below the oracle's own error.
    Vector sub = x;
    for (int k = 0; k < 100; ++k) sub = rk4_step(batch_reactor_drift, sub, 1e-3);
    CHECK((sub - ref).cwiseAbs().maxCoeff() <= 1e-6);
  }
  SUBCASE("fourth order convergence") {
    const Vector x = vec({5.0, 2.0});
    auto err = [&](int substeps) {
      Vector a = x, b = x;
      const double h = 0.1 / substeps;
      for (int k = 0; k < substeps; ++k) a = rk4_step(batch_reactor_drift, a, h);
      for (int k = 0; k < 4 * substeps; ++k) b = rk4_step(batch_reactor_drift, b, h / 4);
      return (a - b).norm();
    };
    const double ratio = err(1) / err(2);
    CHECK(ratio > 12.0);
    CHECK(ratio < 20.0);
  }
  SUBCASE("preserves x1 + 2 x2") {
    std::mt19937_64 rng(3);
    for (int k = 0; k < 200; ++k) {
      const Vector x = oracle::random_vector(rng, 2, -5.0, 10.0);
      const Vector next = rk4_step(batch_reactor_drift, x, 0.1);
      CHECK(std::abs((next[0] + 2 * next[1]) - (x[0] + 2 * x[1])) <= 1e-13 * (1 + std::abs(x[0] + 2 * x[1])));
    }
  }
  SUBCASE("jacobian matches finite differences") {
    std::mt19937_64 rng(11);
    for (int k = 0; k < 20; ++k) {
      const Vector x = oracle::random_vector(rng, 2, 0.0, 6.0);
      const Matrix jac = rk4_step_jacobian(batch_reactor_drift, batch_reactor_drift_jacobian, x, 0.1);
      for (int j = 0; j < 2; ++j) {
        const Vector g = oracle::fd_gradient(
            [&](const Vector& z) { return rk4_step(batch_reactor_drift, z, 0.1)[j]; }, x, 1e-6);
        CHECK((jac.row(j).transpose() - g).norm() <= 1e-7);
      }
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(rk4_step(batch_reactor_drift, vec({1.0, 1.0}), 0.0), ConfigError);
    const VectorMap blowup = [](const Vector& x) { return Vector(x.array() * std::numeric_limits<double>::infinity()); };
    CHECK_THROWS_AS(rk4_step(blowup, vec({1.0, 1.0}), 0.1), NumericError);
  }
}

TEST_CASE("box set") {
  const BoxSet box(vec({0.0, -1.0}), vec({1.0, std::numeric_limits<double>::infinity()}));
  CHECK(box.contains(vec({0.5, 100.0})));
  CHECK_FALSE(box.contains(vec({1.5, 0.0})));
  CHECK(box.violation(vec({1.5, -3.0})) == doctest::Approx(2.0));
  CHECK(box.project(vec({1.5, -3.0})) == vec({1.0, -1.0}));
  CHECK(BoxSet::unbounded(3).is_unbounded());
  CHECK_FALSE(box.is_unbounded());
  CHECK_THROWS_AS(BoxSet(vec({1.0}), vec({0.0})), ConfigError);
}

TEST_CASE("simulate") {
  const SystemModel model = batch_reactor_model();

  SUBCASE("equilibrium stays put") {
    const TrajectoryLog log = simulate(model, vec({2.0, 1.0}), zeros(50, 2), zeros(50, 1), 50);
    for (const auto& x : log.states) CHECK(x == vec({2.0, 1.0}));
  }
  SUBCASE("zero steps") {
    const TrajectoryLog log = simulate(model, vec({5.0, 2.0}), {}, {}, 0);
    CHECK(log.states.size() == 1);
    CHECK(log.outputs.empty());
  }
  SUBCASE("first output is x1 + x2") {
    const TrajectoryLog log = simulate(model, vec({5.0, 2.0}), zeros(3, 2), zeros(3, 1), 3);
    CHECK(log.outputs[0][0] == 7.0);
    CHECK(log.states.size() == 4);
    CHECK(log.outputs.size() == 3);
  }
  SUBCASE("undisturbed reactor conserves x1 + 2 x2 over 1000 steps") {
    const TrajectoryLog log = simulate(model, vec({5.0, 2.0}), zeros(1000, 2), zeros(1000, 1), 1000);
    for (const auto& x : log.states) CHECK(std::abs(x[0] + 2 * x[1] - 9.0) <= 1e-12);
  }
  SUBCASE("replay reproduces the log bit for bit") {
    const NoiseDraw n = draw_noise({0.01 * Matrix::Identity(2, 2), Matrix::Constant(1, 1, 0.04), 5}, 80);
    const TrajectoryLog a = simulate(model, vec({5.0, 2.0}), n.w, n.v, 80);
    const TrajectoryLog b = simulate(model, a.states.front(), a.disturbances, a.noises, 80);
    for (std::size_t k = 0; k < a.states.size(); ++k) CHECK(a.states[k] == b.states[k]);
    for (std::size_t k = 0; k < a.outputs.size(); ++k) CHECK(a.outputs[k] == b.outputs[k]);
  }
  SUBCASE("leaving the state set warns but does not project") {
    SystemModel boxed = model;
    boxed.state_set = BoxSet(vec({0.0, 0.0}), vec({10.0, 10.0}));
    std::vector<Vector> w = zeros(2, 2);
    w[0] = vec({-20.0, 0.0});
    const TrajectoryLog log = simulate(boxed, vec({5.0, 2.0}), w, zeros(2, 1), 2);
    CHECK(log.states[1][0] < 0.0);
    CHECK(log.warnings.size() >= 1);
  }
  SUBCASE("short inputs are rejected") {
    CHECK_THROWS_AS(simulate(model, vec({5.0, 2.0}), zeros(1, 2), zeros(1, 1), 2), ConfigError);
  }
}

TEST_CASE("output map is Lipschitz with sqrt(2)") {
  const SystemModel model = batch_reactor_model();
  std::mt19937_64 rng(17);
  for (int k = 0; k < 1000; ++k) {
    const Vector a = oracle::random_vector(rng, 2, -10, 10);
    const Vector b = oracle::random_vector(rng, 2, -10, 10);
    CHECK((model.h(a) - model.h(b)).norm() <= model.lipschitz_h * (a - b).norm() + 1e-12);
  }
}

TEST_CASE("draw_noise") {
  SUBCASE("zero covariances give zero sequences") {
    const NoiseDraw n = draw_noise({Matrix::Zero(2, 2), Matrix::Zero(1, 1), 9}, 20);
    for (const auto& w : n.w) CHECK(w.isZero(0.0));
    for (const auto& v : n.v) CHECK(v.isZero(0.0));
  }
  SUBCASE("same seed, same numbers") {
    const NoiseSpec spec{0.01 * Matrix::Identity(2, 2), Matrix::Constant(1, 1, 0.04), 1234};
    const NoiseDraw a = draw_noise(spec, 50);
    const NoiseDraw b = draw_noise(spec, 50);
    for (int k = 0; k < 50; ++k) {
      CHECK(a.w[k] == b.w[k]);
      CHECK(a.v[k] == b.v[k]);
    }
  }
  SUBCASE("sample variance near the covariance diagonal") {
    const NoiseDraw n = draw_noise({0.01 * Matrix::Identity(2, 2), Matrix::Constant(1, 1, 0.04), 77}, 10000);
    for (int i = 0; i < 2; ++i) {
      double mean = 0.0, sq = 0.0;
      for (const auto& w : n.w) mean += w[i];
      mean /= 10000.0;
      for (const auto& w : n.w) sq += (w[i] - mean) * (w[i] - mean);
      const double var = sq / 9999.0;
      CHECK(var == doctest::Approx(0.01).epsilon(0.10));
    }
  }
  SUBCASE("indefinite covariance is rejected") {
    Matrix bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(draw_noise({bad, Matrix::Zero(1, 1), 0}, 5), ConfigError);
  }
  SUBCASE("bounded sets project the samples and log it") {
    SystemModel model = batch_reactor_model();
    model.disturbance_set = BoxSet(vec({-0.01, -0.01}), vec({0.01, 0.01}));
    const NoiseDraw n = draw_noise({0.01 * Matrix::Identity(2, 2), Matrix::Constant(1, 1, 0.04), 3}, 100, model);
    for (const auto& w : n.w) CHECK(model.disturbance_set.contains(w));
    CHECK_FALSE(n.warnings.empty());
  }
}

TEST_CASE("trajectory csv layout") {
  const SystemModel model = batch_reactor_model();
  const TrajectoryLog log = simulate(model, vec({5.0, 2.0}), zeros(2, 2), zeros(2, 1), 2);
  std::ostringstream os;
  io::write_trajectory_csv(os, log);
  std::istringstream lines(os.str());
  std::string header, row0;
  std::getline(lines, header);
  std::getline(lines, row0);
  CHECK(header == "t,x1,x2,y1,w1,w2,v1");
  CHECK(row0 == "0,5,2,7,0,0,0");
}

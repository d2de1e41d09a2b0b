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
#include "smhe/errors.hpp"
#include "smhe/io.hpp"
#include "smhe/mhe.hpp"

#include <cmath>
#include <random>

using namespace smhe;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

struct Fixture {
  ModelPtr model = std::make_shared<const SystemModel>(batch_reactor_model());
  CostPtr cost = std::make_shared<const CostSpec>(
      batch_reactor_cost(0.01 * Matrix::Identity(2, 2), Matrix::Constant(1, 1, 0.04)));
  ObserverSpec observer = batch_reactor_observer(model);
  TrajectoryLog truth;
  ObserverLog olog;

  explicit Fixture(int T = 40, std::uint64_t seed = 5) {
    const NoiseDraw n = draw_noise({0.01 * Matrix::Identity(2, 2), Matrix::Constant(1, 1, 0.04), seed}, T);
    truth = simulate(*model, vec({5.0, 2.0}), n.w, n.v, T);
    olog = run_observer(observer, vec({3.0, 0.0}), truth.outputs);
  }
};

}  // namespace

TEST_CASE("rollout") {
  const Fixture fx;
  SUBCASE("one stage residual") {
    HorizonProblem p{fx.model, fx.cost, vec({3.0, 0.0}), {vec({7.0})}, 0};
    const WindowRollout r = rollout(p, {vec({3.0, 0.0}), {vec({0.0, 0.0})}});
    CHECK(r.residuals[0][0] == 4.0);
    CHECK(r.states[1] == fx.model->f(vec({3.0, 0.0})));
  }
  SUBCASE("noise-free data and zero disturbances leave only the prior term") {
    const std::vector<Vector> zw(6, Vector::Zero(2)), zv(6, Vector::Zero(1));
    const TrajectoryLog t = simulate(*fx.model, vec({5.0, 2.0}), zw, zv, 6);
    HorizonProblem p{fx.model, fx.cost, vec({4.0, 2.0}), t.outputs, 0};
    const WindowRollout r = rollout(p, {vec({5.0, 2.0}), std::vector<Vector>(6, Vector::Zero(2))});
    for (const auto& nu : r.residuals) CHECK(nu.norm() <= 1e-13);
    CHECK(r.cost == doctest::Approx(1.0).epsilon(1e-12));
    for (int i = 0; i < 6; ++i) CHECK(r.states[i + 1] == fx.model->f(r.states[i]));
  }
  SUBCASE("dimension mismatch") {
    HorizonProblem p{fx.model, fx.cost, vec({3.0, 0.0}), {vec({7.0})}, 0};
    CHECK_THROWS_AS(rollout(p, {vec({3.0, 0.0}), {}}), ConfigError);
  }
}

TEST_CASE("eval_cost") {
  const Fixture fx;
  // chi0 on the prior, one stage with w = (0.1, 0) and a forced residual of 0.2.
  const Vector chi0 = vec({3.0, 0.0});
  HorizonProblem p{fx.model, fx.cost, chi0, {vec({fx.model->h(chi0)[0] + 0.2})}, 0};
  const DecisionVector d{chi0, {vec({0.1, 0.0})}};
  CHECK(eval_cost(p, d) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(eval_cost(p, d) == eval_cost(HorizonProblem(p), d));

  HorizonProblem exact{fx.model, fx.cost, chi0, {fx.model->h(chi0)}, 0};
  CHECK(eval_cost(exact, {chi0, {vec({0.0, 0.0})}}) == 0.0);
}

TEST_CASE("quadratic cost constants") {
  const CostSpec c = batch_reactor_cost(0.01 * Matrix::Identity(2, 2), Matrix::Constant(1, 1, 0.04));
  CHECK(c.bounds.exponent == 2.0);
  CHECK(c.bounds.lower_w == doctest::Approx(100.0));
  CHECK(c.bounds.upper_w == doctest::Approx(100.0));
  CHECK(c.bounds.lower_v == doctest::Approx(25.0));
  CHECK(c.bounds.upper_v == doctest::Approx(25.0));
  CHECK(c.bounds.lower_p == 1.0);
  CHECK(c.bounds.upper_p == 1.0);
  CHECK_THROWS_AS(quadratic_cost(Matrix::Identity(2, 2), -Matrix::Identity(2, 2), Matrix::Identity(1, 1)),
                  ConfigError);

  SUBCASE("two-sided bounds on samples") {
    Matrix W(2, 2);
    W << 3.0, 1.0, 1.0, 2.0;
    const CostSpec q = quadratic_cost(Matrix::Identity(2, 2), W, Matrix::Constant(1, 1, 4.0));
    std::mt19937_64 rng(2);
    for (int k = 0; k < 500; ++k) {
      const Vector w = oracle::random_vector(rng, 2, -3, 3);
      const Vector nu = oracle::random_vector(rng, 1, -3, 3);
      const double s = q.stage(w, nu);
      const double lo = q.bounds.lower_w * w.squaredNorm() + q.bounds.lower_v * nu.squaredNorm();
      const double hi = q.bounds.upper_w * w.squaredNorm() + q.bounds.upper_v * nu.squaredNorm();
      CHECK(s >= lo - 1e-12);
      CHECK(s <= hi + 1e-12);
    }
  }
}

TEST_CASE("cost dominates each weighted term") {
  const Fixture fx(30, 9);
  const CostBounds& b = fx.cost->bounds;
  std::mt19937_64 rng(4);
  for (int k = 0; k < 200; ++k) {
    const HorizonProblem p = make_window(fx.model, fx.cost, fx.truth.outputs, fx.olog, 20, 10);
    DecisionVector d{p.prior + oracle::random_vector(rng, 2, -1, 1), {}};
    for (int i = 0; i < p.horizon(); ++i) d.omegas.push_back(oracle::random_vector(rng, 2, -0.3, 0.3));
    const WindowRollout r = rollout(p, d);
    CHECK(r.cost >= b.lower_p * (d.chi0 - p.prior).squaredNorm() - 1e-12);
    for (int i = 0; i < p.horizon(); ++i) {
      CHECK(r.cost >= b.lower_w * d.omegas[i].squaredNorm() - 1e-12);
      CHECK(r.cost >= b.lower_v * r.residuals[i].squaredNorm() - 1e-12);
    }
  }
}

TEST_CASE("observer candidate") {
  const Fixture fx;
  for (int t : {1, 4, 10, 11, 25, 40}) {
    CAPTURE(t);
    const HorizonProblem p = make_window(fx.model, fx.cost, fx.truth.outputs, fx.olog, t, 10);
    const DecisionVector cand = build_candidate(fx.olog, p.window_start, p.horizon());
    const WindowRollout r = rollout(p, cand);
    for (int i = 0; i <= p.horizon(); ++i) CHECK(r.states[i] == fx.olog.states[p.window_start + i]);
    for (int i = 0; i < p.horizon(); ++i) CHECK(r.residuals[i] == fx.olog.fitting_errors[p.window_start + i]);
    CHECK(fx.cost->prior_weight(cand.chi0, p.prior) == 0.0);
    CHECK(check_feasible(p, cand).feasible);
  }
  CHECK_THROWS_AS(build_candidate(fx.olog, 35, 10), ConfigError);
}

TEST_CASE("noise-free perfect-fit candidate is the truth") {
  Fixture fx;
  const std::vector<Vector> zw(20, Vector::Zero(2)), zv(20, Vector::Zero(1));
  fx.truth = simulate(*fx.model, vec({5.0, 2.0}), zw, zv, 20);
  fx.olog = run_observer(fx.observer, vec({5.0, 2.0}), fx.truth.outputs);
  const DecisionVector cand = build_candidate(fx.olog, 5, 10);
  CHECK(cand.chi0 == fx.truth.states[5]);
  for (const auto& w : cand.omegas) CHECK(w.isZero(0.0));
}

TEST_CASE("window bookkeeping") {
  const Fixture fx;
  const HorizonProblem p3 = make_window(fx.model, fx.cost, fx.truth.outputs, fx.olog, 3, 10);
  CHECK(p3.horizon() == 3);
  CHECK(p3.window_start == 0);
  CHECK(p3.prior == fx.olog.states[0]);

  const HorizonProblem p0 = make_window(fx.model, fx.cost, fx.truth.outputs, fx.olog, 0, 10);
  CHECK(p0.horizon() == 0);

  HorizonProblem p = make_window(fx.model, fx.cost, fx.truth.outputs, fx.olog, 9, 10);
  p = advance_window(p, fx.truth.outputs, fx.olog, 10);
  CHECK(p.horizon() == 10);
  CHECK(p.window_start == 0);
  CHECK(p.prior == fx.olog.states[0]);

  p = advance_window(p, fx.truth.outputs, fx.olog, 10);
  CHECK(p.horizon() == 10);
  CHECK(p.window_start == 1);
  CHECK(p.prior == fx.olog.states[1]);
  for (int i = 0; i < 10; ++i) CHECK(p.measurements[i] == fx.truth.outputs[1 + i]);

  CHECK_THROWS_AS(make_window(fx.model, fx.cost, fx.truth.outputs, fx.olog, 41, 10), ConfigError);
  CHECK_THROWS_AS(make_window(fx.model, fx.cost, fx.truth.outputs, fx.olog, 5, 0), ConfigError);
}

TEST_CASE("decision vector flattening round trip") {
  std::mt19937_64 rng(1);
  DecisionVector d{oracle::random_vector(rng, 2, -1, 1), {}};
  for (int i = 0; i < 4; ++i) d.omegas.push_back(oracle::random_vector(rng, 2, -1, 1));
  const Vector flat = d.flatten();
  CHECK(flat.size() == 10);
  const DecisionVector back = DecisionVector::unflatten(flat, 2, 4);
  CHECK(back.chi0 == d.chi0);
  for (int i = 0; i < 4; ++i) CHECK(back.omegas[i] == d.omegas[i]);
  CHECK_THROWS_AS(DecisionVector::unflatten(flat, 2, 3), ConfigError);
}

TEST_CASE("check_feasible") {
  Fixture fx;
  const HorizonProblem free_p = make_window(fx.model, fx.cost, fx.truth.outputs, fx.olog, 12, 10);
  std::mt19937_64 rng(6);
  DecisionVector wild{oracle::random_vector(rng, 2, 0, 6), {}};
  for (int i = 0; i < 10; ++i) wild.omegas.push_back(oracle::random_vector(rng, 2, -0.2, 0.2));
  CHECK(check_feasible(free_p, wild).feasible);

  SystemModel pinned = *fx.model;
  pinned.disturbance_set = BoxSet::zero(2);
  HorizonProblem p = free_p;
  p.model = std::make_shared<const SystemModel>(pinned);
  DecisionVector d = build_candidate(fx.olog, p.window_start, p.horizon());
  for (auto& w : d.omegas) w.setZero();
  d.omegas[3] = vec({0.0, 0.5});
  const FeasibilityReport rep = check_feasible(p, d);
  CHECK_FALSE(rep.feasible);
  REQUIRE(rep.violations.size() == 1);
  CHECK(rep.violations[0].kind == Violation::Kind::Disturbance);
  CHECK(rep.violations[0].index == 3);
  CHECK(rep.max_violation == doctest::Approx(0.5));
  CHECK(to_string(rep.violations[0].kind) == "disturbance");

  SUBCASE("the last window state is checked too") {
    SystemModel boxed = *fx.model;
    boxed.state_set = BoxSet(vec({-100.0, -100.0}), vec({100.0, 100.0}));
    HorizonProblem q = free_p;
    q.model = std::make_shared<const SystemModel>(boxed);
    DecisionVector e = build_candidate(fx.olog, q.window_start, q.horizon());
    e.omegas.back() = vec({500.0, 0.0});
    const FeasibilityReport r = check_feasible(q, e);
    CHECK_FALSE(r.feasible);
    CHECK(r.violations.back().kind == Violation::Kind::State);
    CHECK(r.violations.back().index == 10);
  }
}

TEST_CASE("problem snapshot") {
  const Fixture fx;
  const HorizonProblem p = make_window(fx.model, fx.cost, fx.truth.outputs, fx.olog, 15, 10);
  const io::json j = io::snapshot(p, build_candidate(fx.olog, p.window_start, p.horizon()));
  CHECK(j.at("window_start") == 5);
  CHECK(j.at("measurements").size() == 10);
  CHECK(j.at("candidate").at("omegas").size() == 10);
}

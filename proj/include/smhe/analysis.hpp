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
#ifndef SMHE_ANALYSIS_HPP
#define SMHE_ANALYSIS_HPP

#include "smhe/dynamics.hpp"
#include "smhe/mhe.hpp"
#include "smhe/observer.hpp"

#include <array>
#include <vector>

namespace smhe {

/// Exponential stability constants of an estimator:
///   |x(t) - z(t)| <= C_p |x0 - z0| rho^t + C_w sum_{tau=1}^t rho^tau |w(t-tau)|
///                                      + C_v sum_{tau=1}^t rho^tau |v(t-tau)|
/// `fitted` marks constants estimated from data rather than certified.
struct RgesConstants {
  double C_p = 1.0;
  double C_w = 1.0;
  double C_v = 1.0;
  double rho = 0.5;
  bool fitted = false;

  void validate() const;
};

/// Exponential detectability (incremental IOSS) constants, same shape with
/// disturbance and output differences in place of w and v.
struct DetectabilityConstants {
  double c_p = 1.0;
  double c_w = 1.0;
  double c_v = 1.0;
  double eta = 0.5;
  bool fitted = false;

  void validate() const;
};

struct CostBoundConstants {
  double exponent = 2.0;
  double lower_p = 1.0;
  double lower_w = 1.0;
  double lower_v = 1.0;
  double upper_w = 1.0;
  double upper_v = 1.0;
  double lipschitz_h = 1.0;
  double kappa = 1.0;

  void validate() const;
  static CostBoundConstants from(const CostBounds& bounds, const SystemModel& model,
                                 const ObserverSpec& observer);
};

double rho_bar_1(double rho, double a, int horizon);
double rho_bar_2(double rho, double a, int horizon);

/// (3 max{L_h, 1/C_v})^a (upper_w kappa^a + upper_v)
double cost_bound_factor(const CostBoundConstants& cbc, const RgesConstants& rc);

/// Discounted sums S(t) = sum_{tau=1}^t decay^(tau - 1) |seq(t - tau)| for t = 0..len.
std::vector<double> discounted_sums(const std::vector<double>& norms, double decay);

/// Upper bound on the suboptimal window cost at time t.
/// w_norms / v_norms hold |w(k)|, |v(k)| for k = 0..t-1 (or longer).
double lemma1_bound(const CostBoundConstants& cbc, const RgesConstants& rc, int horizon, int t,
                    double initial_gap, const std::vector<double>& w_norms,
                    const std::vector<double>& v_norms);

/// lemma1_bound for every t = 0..len(w_norms).
std::vector<double> lemma1_bounds(const CostBoundConstants& cbc, const RgesConstants& rc, int horizon,
                                  double initial_gap, const std::vector<double>& w_norms,
                                  const std::vector<double>& v_norms);

struct TheoremConstants {
  double C1 = 0.0;
  double C2 = 0.0;
  double C3 = 0.0;
  double lambda = 0.0;
  std::array<double, 3> full_horizon{};     // valid once t >= N
  std::array<double, 3> partial_horizon{};  // valid for t < N
};

TheoremConstants theorem1_constants(const DetectabilityConstants& dc, const RgesConstants& rc,
                                    const CostBoundConstants& cbc, int horizon);

struct EnvelopeReport {
  std::vector<double> error;
  std::vector<double> bound;
  std::vector<double> margin;
  double min_margin = 0.0;
  int worst_t = 0;

  bool holds() const { return min_margin >= 0.0; }
};

/// Compares |x(t) - xhat(t)| against
/// C1 gap lambda^t + C2 sum lambda^tau |w(t-tau)| + C3 sum lambda^tau |v(t-tau)|.
EnvelopeReport check_rges_envelope(const std::vector<double>& errors, const std::vector<double>& w_norms,
                                   const std::vector<double>& v_norms, double C1, double C2, double C3,
                                   double lambda, double initial_gap);

/// One recorded trajectory for envelope fitting: errors[t] for t = 0..T,
/// input norms for t = 0..T-1.
struct EnvelopeSample {
  std::vector<double> errors;
  std::vector<double> w_norms;
  std::vector<double> v_norms;
  double initial_gap = 0.0;
};

struct EnvelopeFit {
  double rate = 0.0;
  double scale = 0.0;  // common value of the three gains
  double score = 0.0;  // scale / (1 - rate)
};

inline constexpr double kMinFittedConstant = 1e-6;

/// Decay rates tried by the fitters: 0.50, 0.51, ..., 0.99, 0.995, 0.999.
std::vector<double> default_rate_grid();

/// For each rate in the grid the smallest common gain C with
/// C (gap r^t + sum r^tau |w| + sum r^tau |v|) >= error(t) on every sample,
/// then the rate minimising C / (1 - r). The OpenMP version splits the grid.
EnvelopeFit fit_envelope(const std::vector<EnvelopeSample>& samples, const std::vector<double>& rates);
EnvelopeFit fit_envelope_serial(const std::vector<EnvelopeSample>& samples, const std::vector<double>& rates);

/// Gain required at a single rate, +inf when no finite gain works.
double required_gain(const std::vector<EnvelopeSample>& samples, double rate);

RgesConstants fit_observer_envelope(const std::vector<EnvelopeSample>& samples,
                                    const std::vector<double>& rates = default_rate_grid());

DetectabilityConstants fit_detectability(const std::vector<EnvelopeSample>& samples,
                                         const std::vector<double>& rates = default_rate_grid());

/// Trajectory pairs from random initial states in [lower, upper] and
/// independent disturbances, recorded in the form fit_detectability expects.
/// A pair is cut off at the first step where either state leaves the box.
std::vector<EnvelopeSample> detectability_samples(const SystemModel& model, const Vector& lower,
                                                  const Vector& upper, const Matrix& disturbance_cov,
                                                  int pairs, int steps, std::uint64_t seed);

struct RmseReport {
  Vector per_component;
  double aggregate = 0.0;
};

RmseReport rmse(const std::vector<StateVector>& truth, const std::vector<StateVector>& estimates, int skip = 0);

std::vector<double> norms(const std::vector<Vector>& seq);
std::vector<double> error_norms(const std::vector<StateVector>& a, const std::vector<StateVector>& b);

}  // namespace smhe

#endif  // SMHE_ANALYSIS_HPP

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
#include "smhe/analysis.hpp"

#include "smhe/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace smhe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_rate(double r, const char* what) {
  if (!(r > 0.0 && r < 1.0)) throw ConfigError(std::string(what) + " must lie in (0,1)");
}

void check_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be positive");
}

void check_geometric_args(double rho, double a, int horizon) {
  check_rate(rho, "rho");
  check_positive(a, "exponent a");
  if (horizon < 1) throw ConfigError("horizon must be at least 1");
}

// Sums S(t) = sum_{tau=1}^t decay^tau |seq(t - tau)|, i.e. discounted_sums * decay.
std::vector<double> envelope_sums(const std::vector<double>& norms, double decay) {
  std::vector<double> s = discounted_sums(norms, decay);
  for (double& v : s) v *= decay;
  return s;
}

std::vector<double> scores_for(const std::vector<EnvelopeSample>& samples, const std::vector<double>& rates,
                               bool parallel) {
  std::vector<double> gains(rates.size(), kInf);
  const auto count = static_cast<long>(rates.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long i = 0; i < count; ++i) gains[i] = required_gain(samples, rates[i]);
  return gains;
}

EnvelopeFit pick_rate(const std::vector<double>& gains, const std::vector<double>& rates) {
  EnvelopeFit best;
  best.score = kInf;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (!std::isfinite(gains[i])) continue;
    const double score = gains[i] / (1.0 - rates[i]);
    if (score < best.score) best = EnvelopeFit{rates[i], gains[i], score};
  }
  if (!std::isfinite(best.score)) {
    throw NumericError("envelope fit: no decay rate in the grid admits finite constants");
  }
  return best;
}

}  // namespace

void RgesConstants::validate() const {
  check_positive(C_p, "C_p");
  check_positive(C_w, "C_w");
  check_positive(C_v, "C_v");
  check_rate(rho, "rho");
}

void DetectabilityConstants::validate() const {
  check_positive(c_p, "c_p");
  check_positive(c_w, "c_w");
  check_positive(c_v, "c_v");
  check_rate(eta, "eta");
}

void CostBoundConstants::validate() const {
  check_positive(exponent, "exponent a");
  check_positive(lower_p, "lower_p");
  check_positive(lower_w, "lower_w");
  check_positive(lower_v, "lower_v");
  check_positive(upper_w, "upper_w");
  check_positive(upper_v, "upper_v");
  check_positive(lipschitz_h, "lipschitz_h");
  check_positive(kappa, "kappa");
}

CostBoundConstants CostBoundConstants::from(const CostBounds& b, const SystemModel& model,
                                            const ObserverSpec& observer) {
  CostBoundConstants c;
  c.exponent = b.exponent;
  c.lower_p = b.lower_p;
  c.lower_w = b.lower_w;
  c.lower_v = b.lower_v;
  c.upper_w = b.upper_w;
  c.upper_v = b.upper_v;
  c.lipschitz_h = model.lipschitz_h;
  c.kappa = observer.kappa;
  return c;
}

double rho_bar_1(double rho, double a, int horizon) {
  check_geometric_args(rho, a, horizon);
  const double ra = std::pow(rho, a);
  return (std::pow(rho, -a * horizon) - 1.0) / (1.0 - ra);
}

double rho_bar_2(double rho, double a, int horizon) {
  check_geometric_args(rho, a, horizon);
  const double ra = std::pow(rho, a);
  return (std::pow(rho, -a * (horizon - 1)) - ra) / (1.0 - ra);
}

double cost_bound_factor(const CostBoundConstants& cbc, const RgesConstants& rc) {
  const double a = cbc.exponent;
  const double lbar = std::max(cbc.lipschitz_h, 1.0 / rc.C_v);
  return std::pow(3.0 * lbar, a) * (cbc.upper_w * std::pow(cbc.kappa, a) + cbc.upper_v);
}

std::vector<double> discounted_sums(const std::vector<double>& norms, double decay) {
  std::vector<double> s(norms.size() + 1, 0.0);
  for (std::size_t t = 0; t < norms.size(); ++t) s[t + 1] = norms[t] + decay * s[t];
  return s;
}

double lemma1_bound(const CostBoundConstants& cbc, const RgesConstants& rc, int horizon, int t,
                    double initial_gap, const std::vector<double>& w_norms,
                    const std::vector<double>& v_norms) {
  if (t < 0 || static_cast<int>(w_norms.size()) < t || static_cast<int>(v_norms.size()) < t) {
    throw ConfigError("lemma1_bound: disturbance histories shorter than t");
  }
  const std::vector<double> w(w_norms.begin(), w_norms.begin() + t);
  const std::vector<double> v(v_norms.begin(), v_norms.begin() + t);
  return lemma1_bounds(cbc, rc, horizon, initial_gap, w, v).back();
}

std::vector<double> lemma1_bounds(const CostBoundConstants& cbc, const RgesConstants& rc, int horizon,
                                  double initial_gap, const std::vector<double>& w_norms,
                                  const std::vector<double>& v_norms) {
  cbc.validate();
  rc.validate();
  if (w_norms.size() != v_norms.size()) throw ConfigError("lemma1_bounds: history lengths differ");
  const double a = cbc.exponent;
  const double cbar = cost_bound_factor(cbc, rc);
  const double r1 = rho_bar_1(rc.rho, a, horizon);
  const double r2 = rho_bar_2(rc.rho, a, horizon);
  const std::vector<double> sw = discounted_sums(w_norms, rc.rho);
  const std::vector<double> sv = discounted_sums(v_norms, rc.rho);
  std::vector<double> out(sw.size());
  for (std::size_t t = 0; t < out.size(); ++t) {
    out[t] = std::pow(rc.C_p, a) * cbar * r1 * std::pow(initial_gap, a) * std::pow(rc.rho, a * t) +
             std::pow(rc.C_w, a) * cbar * r2 * std::pow(sw[t], a) +
             std::pow(rc.C_v, a) * cbar * r2 * std::pow(sv[t], a);
  }
  return out;
}

TheoremConstants theorem1_constants(const DetectabilityConstants& dc, const RgesConstants& rc,
                                    const CostBoundConstants& cbc, int horizon) {
  dc.validate();
  rc.validate();
  cbc.validate();
  const double a = cbc.exponent;
  const double N = horizon;
  const double cbar = cost_bound_factor(cbc, rc);
  const double r1 = rho_bar_1(rc.rho, a, horizon);
  const double r2 = rho_bar_2(rc.rho, a, horizon);

  const double lambda = std::max(dc.eta, rc.rho);
  const double eta_bar = dc.eta / (1.0 - dc.eta);
  const double cp_bar = rc.C_p * std::pow(3.0 * cbar * r1, 1.0 / a);
  const double cw_bar = rc.C_w / rc.rho * std::pow(3.0 * cbar * r2, 1.0 / a);
  const double cv_bar = rc.C_v / rc.rho * std::pow(3.0 * cbar * r2, 1.0 / a);

  const double tail = dc.c_w * eta_bar * std::pow(cbc.lower_w, -1.0 / a) +
                      dc.c_v * eta_bar * std::pow(cbc.lower_v, -1.0 / a);
  const double prior_term = dc.c_p * std::pow(cbc.lower_p, -1.0 / a);
  const double full = prior_term * std::pow(dc.eta, N) + tail;
  const double partial = prior_term + tail;
  const double carry = dc.c_p * std::pow(dc.eta / lambda, N);

  TheoremConstants out;
  out.lambda = lambda;
  out.full_horizon = {full * cp_bar + carry * rc.C_p,
                      full * cw_bar + carry * rc.C_w + dc.c_w,
                      full * cv_bar + carry * rc.C_v + dc.c_v};
  out.partial_horizon = {dc.c_p + partial * cp_bar,
                         dc.c_w + partial * cw_bar,
                         dc.c_v + partial * cv_bar};
  out.C1 = std::max(out.full_horizon[0], out.partial_horizon[0]);
  out.C2 = std::max(out.full_horizon[1], out.partial_horizon[1]);
  out.C3 = std::max(out.full_horizon[2], out.partial_horizon[2]);
  return out;
}

EnvelopeReport check_rges_envelope(const std::vector<double>& errors, const std::vector<double>& w_norms,
                                   const std::vector<double>& v_norms, double C1, double C2, double C3,
                                   double lambda, double initial_gap) {
  if (errors.empty()) throw ConfigError("check_rges_envelope: empty error sequence");
  const std::size_t steps = errors.size() - 1;
  if (w_norms.size() < steps || v_norms.size() < steps) {
    throw ConfigError("check_rges_envelope: disturbance histories shorter than the error sequence");
  }
  const std::vector<double> sw = envelope_sums({w_norms.begin(), w_norms.begin() + steps}, lambda);
  const std::vector<double> sv = envelope_sums({v_norms.begin(), v_norms.begin() + steps}, lambda);
  EnvelopeReport rep;
  rep.error = errors;
  rep.bound.resize(errors.size());
  rep.margin.resize(errors.size());
  rep.min_margin = kInf;
  for (std::size_t t = 0; t < errors.size(); ++t) {
    rep.bound[t] = C1 * initial_gap * std::pow(lambda, static_cast<double>(t)) + C2 * sw[t] + C3 * sv[t];
    rep.margin[t] = rep.bound[t] - errors[t];
    if (rep.margin[t] < rep.min_margin) {
      rep.min_margin = rep.margin[t];
      rep.worst_t = static_cast<int>(t);
    }
  }
  return rep;
}

std::vector<double> default_rate_grid() {
  std::vector<double> grid;
  for (int k = 50; k <= 99; ++k) grid.push_back(k / 100.0);
  grid.push_back(0.995);
  grid.push_back(0.999);
  return grid;
}

double required_gain(const std::vector<EnvelopeSample>& samples, double rate) {
  check_rate(rate, "envelope rate");
  double gain = 0.0;
  for (const auto& s : samples) {
    if (s.errors.empty()) continue;
    const std::size_t steps = s.errors.size() - 1;
    if (s.w_norms.size() < steps || s.v_norms.size() < steps) {
      throw ConfigError("envelope fit: input histories shorter than the error sequence");
    }
    const std::vector<double> sw = envelope_sums({s.w_norms.begin(), s.w_norms.begin() + steps}, rate);
    const std::vector<double> sv = envelope_sums({s.v_norms.begin(), s.v_norms.begin() + steps}, rate);
    double decay = 1.0;
    for (std::size_t t = 0; t <= steps; ++t, decay *= rate) {
      if (!(s.errors[t] > 0.0)) continue;
      const double denom = s.initial_gap * decay + sw[t] + sv[t];
      if (!(denom > 0.0)) return kInf;
      gain = std::max(gain, s.errors[t] / denom);
    }
  }
  return std::max(gain, kMinFittedConstant);
}

EnvelopeFit fit_envelope(const std::vector<EnvelopeSample>& samples, const std::vector<double>& rates) {
  return pick_rate(scores_for(samples, rates, true), rates);
}

EnvelopeFit fit_envelope_serial(const std::vector<EnvelopeSample>& samples, const std::vector<double>& rates) {
  return pick_rate(scores_for(samples, rates, false), rates);
}

RgesConstants fit_observer_envelope(const std::vector<EnvelopeSample>& samples, const std::vector<double>& rates) {
  if (samples.empty()) throw ConfigError("fit_observer_envelope: no trajectories");
  const EnvelopeFit fit = fit_envelope(samples, rates);
  return RgesConstants{fit.scale, fit.scale, fit.scale, fit.rate, true};
}

DetectabilityConstants fit_detectability(const std::vector<EnvelopeSample>& samples,
                                         const std::vector<double>& rates) {
  if (samples.empty()) throw ConfigError("fit_detectability: no trajectory pairs");
  const EnvelopeFit fit = fit_envelope(samples, rates);
  return DetectabilityConstants{fit.scale, fit.scale, fit.scale, fit.rate, true};
}

std::vector<EnvelopeSample> detectability_samples(const SystemModel& model, const Vector& lower,
                                                  const Vector& upper, const Matrix& disturbance_cov,
                                                  int pairs, int steps, std::uint64_t seed) {
  if (lower.size() != model.n || upper.size() != model.n) {
    throw ConfigError("detectability_samples: box dimension mismatch");
  }
  std::mt19937_64 engine(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw_state = [&] {
    Vector x(model.n);
    for (int i = 0; i < model.n; ++i) x[i] = lower[i] + (upper[i] - lower[i]) * unit(engine);
    return x;
  };
  const Matrix zero_v = Matrix::Zero(model.p, model.p);
  const BoxSet box(lower, upper);
  auto inside = [&](const Vector& x) { return x.allFinite() && box.contains(x); };
  std::vector<EnvelopeSample> out;
  out.reserve(pairs);
  for (int k = 0; k < pairs; ++k) {
    const Vector x1 = draw_state();
    const Vector x2 = draw_state();
    const NoiseDraw n1 = draw_noise({disturbance_cov, zero_v, engine()}, steps);
    const NoiseDraw n2 = draw_noise({disturbance_cov, zero_v, engine()}, steps);
    // Each pair is recorded only while both trajectories stay in the box.
    EnvelopeSample s;
    s.initial_gap = (x1 - x2).norm();
    Vector a = x1, b = x2;
    s.errors.push_back(s.initial_gap);
    for (int t = 0; t < steps; ++t) {
      const Vector ya = model.h(a), yb = model.h(b);
      const Vector na = model.f(a) + n1.w[t], nb = model.f(b) + n2.w[t];
      if (!inside(na) || !inside(nb)) break;
      s.w_norms.push_back((n1.w[t] - n2.w[t]).norm());
      s.v_norms.push_back((ya - yb).norm());
      a = na;
      b = nb;
      s.errors.push_back((a - b).norm());
    }
    out.push_back(std::move(s));
  }
  return out;
}

RmseReport rmse(const std::vector<StateVector>& truth, const std::vector<StateVector>& estimates, int skip) {
  if (truth.size() != estimates.size()) throw ConfigError("rmse: sequence lengths differ");
  if (skip < 0 || static_cast<std::size_t>(skip) >= truth.size()) {
    throw ConfigError("rmse: nothing left after skipping initial steps");
  }
  const auto n = truth.front().size();
  Vector sq = Vector::Zero(n);
  for (std::size_t t = skip; t < truth.size(); ++t) {
    if (truth[t].size() != n || estimates[t].size() != n) throw ConfigError("rmse: dimension mismatch");
    sq += (truth[t] - estimates[t]).cwiseAbs2();
  }
  const double count = static_cast<double>(truth.size() - skip);
  RmseReport r;
  r.per_component = (sq / count).cwiseSqrt();
  r.aggregate = std::sqrt(sq.sum() / count);
  return r;
}

std::vector<double> norms(const std::vector<Vector>& seq) {
  std::vector<double> out;
  out.reserve(seq.size());
  for (const auto& v : seq) out.push_back(v.norm());
  return out;
}

std::vector<double> error_norms(const std::vector<StateVector>& a, const std::vector<StateVector>& b) {
  if (a.size() != b.size()) throw ConfigError("error_norms: sequence lengths differ");
  std::vector<double> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back((a[i] - b[i]).norm());
  return out;
}

}  // namespace smhe

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
#include "smhe/io.hpp"

#include "smhe/errors.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace smhe::io {

namespace {

void header_block(std::ostream& os, const char* prefix, Eigen::Index count) {
  for (Eigen::Index i = 1; i <= count; ++i) os << ',' << prefix << i;
}

void value_block(std::ostream& os, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) os << ',' << format_double(v[i]);
}

void empty_block(std::ostream& os, Eigen::Index count) {
  for (Eigen::Index i = 0; i < count; ++i) os << ',';
}

double number_or_inf(const json& j, double inf_sign) {
  if (j.is_null()) return inf_sign * std::numeric_limits<double>::infinity();
  return j.get<double>();
}

}  // namespace

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

json to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v[i])) {
      out.push_back(v[i]);
    } else {
      out.push_back(nullptr);
    }
  }
  return out;
}

Vector vector_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(std::string(what) + ": expected an array of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

json to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(to_json(Vector(m.row(r).transpose())));
  return out;
}

Matrix matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw ConfigError(std::string(what) + ": expected a nonempty matrix");
  const Vector first = vector_from_json(j[0], what);
  Matrix m(static_cast<Eigen::Index>(j.size()), first.size());
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Vector row = vector_from_json(j[r], what);
    if (row.size() != first.size()) throw ConfigError(std::string(what) + ": ragged matrix");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

json to_json(const BoxSet& box) {
  return json{{"lower", to_json(box.lower())}, {"upper", to_json(box.upper())}};
}

BoxSet box_from_json(const json& j, Eigen::Index dim, const char* what) {
  if (j.is_null()) return BoxSet::unbounded(dim);
  if (!j.is_object() || !j.contains("lower") || !j.contains("upper")) {
    throw ConfigError(std::string(what) + ": expected {\"lower\": [...], \"upper\": [...]}");
  }
  const json& lo = j.at("lower");
  const json& up = j.at("upper");
  if (!lo.is_array() || !up.is_array() || static_cast<Eigen::Index>(lo.size()) != dim ||
      static_cast<Eigen::Index>(up.size()) != dim) {
    throw ConfigError(std::string(what) + ": bounds must have dimension " + std::to_string(dim));
  }
  Vector lower(dim), upper(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    lower[i] = number_or_inf(lo[static_cast<std::size_t>(i)], -1.0);
    upper[i] = number_or_inf(up[static_cast<std::size_t>(i)], 1.0);
  }
  return BoxSet(lower, upper);
}

json to_json(const IterationReport& r) {
  return json{{"iterations_used", r.iterations_used},
              {"cost_trace", r.cost_trace},
              {"converged", r.converged},
              {"line_search_failed", r.line_search_failed},
              {"feasibility_residual", r.feasibility_residual},
              {"projected_gradient_norm", r.projected_gradient_norm},
              {"gradient_fallbacks", r.gradient_fallbacks}};
}

json to_json(const RgesConstants& c) {
  return json{{"C_p", c.C_p}, {"C_w", c.C_w}, {"C_v", c.C_v}, {"rho", c.rho},
              {"fitted", c.fitted}, {"certified", false}};
}

RgesConstants rges_from_json(const json& j) {
  try {
    RgesConstants c{j.at("C_p").get<double>(), j.at("C_w").get<double>(), j.at("C_v").get<double>(),
                    j.at("rho").get<double>(), j.value("fitted", false)};
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("observer RGES constants: ") + e.what());
  }
}

json to_json(const DetectabilityConstants& c) {
  return json{{"c_p", c.c_p}, {"c_w", c.c_w}, {"c_v", c.c_v}, {"eta", c.eta},
              {"fitted", c.fitted}, {"certified", false}};
}

DetectabilityConstants detectability_from_json(const json& j) {
  try {
    DetectabilityConstants c{j.at("c_p").get<double>(), j.at("c_w").get<double>(), j.at("c_v").get<double>(),
                             j.at("eta").get<double>(), j.value("fitted", false)};
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("detectability constants: ") + e.what());
  }
}

json to_json(const CostBoundConstants& c) {
  return json{{"a", c.exponent},         {"lower_p", c.lower_p}, {"lower_w", c.lower_w},
              {"lower_v", c.lower_v},    {"upper_w", c.upper_w}, {"upper_v", c.upper_v},
              {"lipschitz_h", c.lipschitz_h}, {"kappa", c.kappa}};
}

json to_json(const TheoremConstants& c) {
  return json{{"C1", c.C1}, {"C2", c.C2}, {"C3", c.C3}, {"lambda", c.lambda},
              {"full_horizon", c.full_horizon}, {"partial_horizon", c.partial_horizon}};
}

json to_json(const EnvelopeReport& r) {
  return json{{"min_margin", r.min_margin}, {"worst_t", r.worst_t}, {"holds", r.holds()}};
}

json to_json(const FeasibilityReport& r) {
  json v = json::array();
  for (const auto& x : r.violations) {
    v.push_back(json{{"kind", to_string(x.kind)}, {"index", x.index}, {"amount", x.amount}});
  }
  return json{{"feasible", r.feasible}, {"max_violation", r.max_violation}, {"violations", v}};
}

json to_json(const RmseReport& r) {
  return json{{"per_component", to_json(r.per_component)}, {"aggregate", r.aggregate}};
}

json snapshot(const HorizonProblem& problem, const DecisionVector& candidate) {
  json ys = json::array();
  for (const auto& y : problem.measurements) ys.push_back(to_json(y));
  json ws = json::array();
  for (const auto& w : candidate.omegas) ws.push_back(to_json(w));
  return json{{"window_start", problem.window_start},
              {"horizon", problem.horizon()},
              {"prior", to_json(problem.prior)},
              {"measurements", ys},
              {"candidate", {{"chi0", to_json(candidate.chi0)}, {"omegas", ws}}},
              {"candidate_cost", eval_cost(problem, candidate)}};
}

void write_trajectory_csv(std::ostream& os, const TrajectoryLog& log) {
  const Eigen::Index n = log.states.front().size();
  const Eigen::Index p = log.outputs.empty() ? 0 : log.outputs.front().size();
  os << 't';
  header_block(os, "x", n);
  header_block(os, "y", p);
  header_block(os, "w", n);
  header_block(os, "v", p);
  os << '\n';
  for (std::size_t t = 0; t < log.states.size(); ++t) {
    os << t;
    value_block(os, log.states[t]);
    if (t < log.outputs.size()) {
      value_block(os, log.outputs[t]);
      value_block(os, log.disturbances[t]);
      value_block(os, log.noises[t]);
    } else {
      empty_block(os, 2 * (n + p));
    }
    os << '\n';
  }
}

void write_observer_csv(std::ostream& os, const ObserverLog& log) {
  const Eigen::Index n = log.states.front().size();
  const Eigen::Index p = log.fitting_errors.empty() ? 0 : log.fitting_errors.front().size();
  os << 't';
  header_block(os, "z", n);
  header_block(os, "vz", p);
  header_block(os, "L", n);
  os << '\n';
  for (std::size_t t = 0; t < log.states.size(); ++t) {
    os << t;
    value_block(os, log.states[t]);
    if (t < log.corrections.size()) {
      value_block(os, log.fitting_errors[t]);
      value_block(os, log.corrections[t]);
    } else {
      empty_block(os, n + p);
    }
    os << '\n';
  }
}

void write_estimate_csv(std::ostream& os, const std::vector<StateVector>& truth,
                        const std::vector<StateVector>& estimates) {
  if (truth.size() != estimates.size() || truth.empty()) {
    throw ConfigError("write_estimate_csv: sequence lengths differ");
  }
  const Eigen::Index n = truth.front().size();
  os << 't';
  header_block(os, "x", n);
  header_block(os, "xhat", n);
  os << '\n';
  for (std::size_t t = 0; t < truth.size(); ++t) {
    os << t;
    value_block(os, truth[t]);
    value_block(os, estimates[t]);
    os << '\n';
  }
}

void write_states_csv(std::ostream& os, const std::vector<StateVector>& states) {
  const Eigen::Index n = states.empty() ? 0 : states.front().size();
  os << 't';
  header_block(os, "x", n);
  os << '\n';
  for (std::size_t t = 0; t < states.size(); ++t) {
    os << t;
    value_block(os, states[t]);
    os << '\n';
  }
}

void write_margin_csv(std::ostream& os, const EnvelopeReport& r) {
  os << "t,error,bound,margin\n";
  for (std::size_t t = 0; t < r.error.size(); ++t) {
    os << t << ',' << format_double(r.error[t]) << ',' << format_double(r.bound[t]) << ','
       << format_double(r.margin[t]) << '\n';
  }
}

void write_trace_csv(std::ostream& os, const std::vector<std::vector<double>>& traces) {
  os << "t,iteration,cost\n";
  for (std::size_t t = 0; t < traces.size(); ++t) {
    for (std::size_t k = 0; k < traces[t].size(); ++k) {
      os << t << ',' << k << ',' << format_double(traces[t][k]) << '\n';
    }
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace smhe::io

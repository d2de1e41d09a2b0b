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
#ifndef SMHE_IO_HPP
#define SMHE_IO_HPP

#include "smhe/analysis.hpp"
#include "smhe/dynamics.hpp"
#include "smhe/mhe.hpp"
#include "smhe/observer.hpp"
#include "smhe/solver.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace smhe::io {

using nlohmann::json;

// All floats go out with 17 significant digits.
std::string format_double(double v);

json to_json(const Vector& v);
Vector vector_from_json(const json& j, const char* what);
json to_json(const Matrix& m);
Matrix matrix_from_json(const json& j, const char* what);

// Boxes are {"lower": [...], "upper": [...]} with null for an infinite bound.
json to_json(const BoxSet& box);
BoxSet box_from_json(const json& j, Eigen::Index dim, const char* what);

json to_json(const IterationReport& r);
json to_json(const RgesConstants& c);
RgesConstants rges_from_json(const json& j);
json to_json(const DetectabilityConstants& c);
DetectabilityConstants detectability_from_json(const json& j);
json to_json(const CostBoundConstants& c);
json to_json(const TheoremConstants& c);
json to_json(const EnvelopeReport& r);
json to_json(const FeasibilityReport& r);
json to_json(const RmseReport& r);

/// Prior, window measurements and candidate of one window, for debugging and goldens.
json snapshot(const HorizonProblem& problem, const DecisionVector& candidate);

/// Header t,x1..xn,y1..yp,w1..wn,v1..vp. The final row (t = T) has empty
/// output/disturbance/noise fields.
void write_trajectory_csv(std::ostream& os, const TrajectoryLog& log);

/// Header t,z1..zn,vz1..vzp,L1..Ln.
void write_observer_csv(std::ostream& os, const ObserverLog& log);

/// Header t,x1..xn,xhat1..xhatn.
void write_estimate_csv(std::ostream& os, const std::vector<StateVector>& truth,
                        const std::vector<StateVector>& estimates);

/// Header t,x1..xn.
void write_states_csv(std::ostream& os, const std::vector<StateVector>& states);

/// Header t,error,bound,margin.
void write_margin_csv(std::ostream& os, const EnvelopeReport& r);

/// Header t,iteration,cost.
void write_trace_csv(std::ostream& os, const std::vector<std::vector<double>>& traces);

void write_text(const std::filesystem::path& path, const std::string& text);
json read_json_file(const std::filesystem::path& path);

}  // namespace smhe::io

#endif  // SMHE_IO_HPP

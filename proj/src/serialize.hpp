// Copyright 2026 The midiv Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// JSON forms of the library's value types. Doubles are written in shortest
// round-trip form, so a model read back evaluates bit-identically.

#include <vector>

#include "json.hpp"

#include "classify.hpp"
#include "density.hpp"
#include "divergence.hpp"
#include "properties.hpp"
#include "simulate.hpp"

namespace midiv {

using Json = nlohmann::json;

Json to_json(const DensityModel& m);
DensityModel density_from_json(const Json& j);

Json to_json(const EmFitReport& r);
Json to_json(const DivergenceSpec& s);
DivergenceSpec divergence_spec_from_json(const Json& j);
Json to_json(const DivergenceScore& s);

Json to_json(const SimConfig& c);
SimConfig sim_config_from_json(const Json& j);
Json latents_to_json(const std::vector<GeneratedBag>& bags);

Json to_json(const PipelineConfig& c);
PipelineConfig pipeline_config_from_json(const Json& j);
Json to_json(const ClassModel& m);
ClassModel class_model_from_json(const Json& j);
Json to_json(const EvalReport& r);
Json to_json(const CheckReport& r);
Json study_to_json(const StudyRequest& request, const std::vector<StudyCell>& cells);

}  // namespace midiv

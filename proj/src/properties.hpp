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

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "divergence.hpp"

namespace midiv {

// Exact checks of how a divergence treats particular subregions, using
// piecewise-constant densities so every contribution is a finite sum.
//
//   P1: where bag/ref > M the contribution should grow without bound as M
//       grows; where ref/bag > M it should not.
//   P2: where the bag density is below eps the contribution should vanish
//       as eps -> 0.
//   P3: where both class densities are below eps the contribution should
//       vanish as eps -> 0.
//
// The reference for KL and BH is the POS class; cKL uses both classes.
enum class PropertyId { kP1, kP2, kP3 };

const char* property_name(PropertyId p);

struct HistogramDensity {
  double lo = 0.0;
  double cell_width = 1.0;
  std::vector<double> density;

  double mass() const;
};

struct PropertyStep {
  // M for P1, eps for P2 and P3.
  double parameter = 0.0;
  HistogramDensity bag;
  HistogramDensity pos;
  HistogramDensity neg;
};

struct PropertyScenario {
  std::string name;
  // Parameter sequence; M increasing or eps decreasing.
  std::vector<PropertyStep> steps;
  // P1 only: the family that exercises the ref/bag > M region.
  std::vector<PropertyStep> dual_steps;
};

struct MeasureTrend {
  Measure measure = Measure::kKl;
  std::vector<double> contributions;
  std::vector<double> dual_contributions;
  bool pass = false;
};

struct CheckReport {
  PropertyId property = PropertyId::kP1;
  std::vector<double> parameters;
  std::array<MeasureTrend, 3> measures;  // KL, BH, CKL

  const MeasureTrend& trend(Measure m) const { return measures[static_cast<int>(m)]; }
};

// Contribution of the cells flagged in region to the total divergence.
// KL and cKL: the integrand summed over the region. BH: the drop in distance
// when the region's reference mass is replaced by the bag's own.
double region_contribution(Measure m, const PropertyStep& step,
                           const std::vector<bool>& region);

// Cells belonging to the property's subregion at this step.
std::vector<bool> property_region(PropertyId p, const PropertyStep& step, bool dual = false);

CheckReport check_property(PropertyId p, const PropertyScenario& scenario);

// Fixed scenarios: M = 10^1..10^8, eps = 10^-1..10^-8.
PropertyScenario default_property_scenario(PropertyId p);

}  // namespace midiv

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

#include "properties.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "error.hpp"

namespace midiv {

const char* property_name(PropertyId p) {
  switch (p) {
    case PropertyId::kP1: return "P1";
    case PropertyId::kP2: return "P2";
    case PropertyId::kP3: return "P3";
  }
  return "unknown";
}

double HistogramDensity::mass() const {
  return cell_width * std::accumulate(density.begin(), density.end(), 0.0);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_step(const PropertyStep& s) {
  const HistogramDensity* hs[] = {&s.bag, &s.pos, &s.neg};
  for (const auto* h : hs) {
    if (h->lo != s.bag.lo || h->cell_width != s.bag.cell_width ||
        h->density.size() != s.bag.density.size())
      fail(ErrorCode::kDimensionMismatch, "scenario grids mismatched");
    require(h->cell_width > 0.0 && !h->density.empty(), "histogram needs cells of positive width");
    for (double d : h->density) require(d >= 0.0 && std::isfinite(d), "histogram densities must be finite and >= 0");
    require(std::abs(h->mass() - 1.0) < 1e-9, "histogram density must integrate to 1");
  }
}

// Grows without bound: either infinite already, or still climbing at the
// end of the sequence at a rate comparable to the start. A convergent
// sequence has increments shrinking towards zero.
bool diverges(const std::vector<double>& v) {
  if (v.empty()) return false;
  if (v.back() == kInf) return true;
  if (v.size() < 3) return false;
  const double first = v[1] - v[0];
  const double last = v[v.size() - 1] - v[v.size() - 2];
  return first > 0.0 && last >= 0.25 * first;
}

bool vanishes(const std::vector<double>& v) {
  if (v.size() < 2) return false;
  double peak = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) return false;
    peak = std::max(peak, std::abs(x));
  }
  if (peak == 0.0) return true;
  const double last = std::abs(v.back());
  return last <= 1e-2 * peak && last <= std::abs(v[v.size() - 2]);
}

}  // namespace

std::vector<bool> property_region(PropertyId p, const PropertyStep& step, bool dual) {
  const std::size_t n = step.bag.density.size();
  std::vector<bool> region(n, false);
  const double t = step.parameter;
  for (std::size_t i = 0; i < n; ++i) {
    const double b = step.bag.density[i];
    const double r = step.pos.density[i];
    switch (p) {
      case PropertyId::kP1:
        // Ratios with a zero denominator count as infinite.
        region[i] = dual ? (r > 0.0 && (b == 0.0 || r / b > t))
                         : (b > 0.0 && (r == 0.0 || b / r > t));
        break;
      case PropertyId::kP2: region[i] = b < t; break;
      case PropertyId::kP3: region[i] = r < t && step.neg.density[i] < t; break;
    }
  }
  return region;
}

double region_contribution(Measure m, const PropertyStep& step,
                           const std::vector<bool>& region) {
  const auto& b = step.bag.density;
  const auto& p = step.pos.density;
  const auto& q = step.neg.density;
  const double w = step.bag.cell_width;
  require(region.size() == b.size(), "region does not match the grid");

  if (m == Measure::kBh) {
    double bc = 0.0;
    double bc_region = 0.0;
    double bag_region = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      const double a = w * std::sqrt(b[i] * p[i]);
      bc += a;
      if (region[i]) {
        bc_region += a;
        bag_region += w * b[i];
      }
    }
    if (bc == 0.0) return kInf;
    // Setting ref = bag on the region turns its affinity term into the bag's
    // mass there; the contribution is how much distance that removes.
    return std::log((bc - bc_region + bag_region) / bc);
  }

  double sum = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (!region[i] || b[i] == 0.0) continue;
    // Bag mass where the POS class has none makes both integrands infinite.
    if (p[i] == 0.0) return kInf;
    const double term = w * b[i] * std::log(b[i] / p[i]);
    sum += m == Measure::kCkl ? (q[i] / p[i]) * term : term;
  }
  return sum;
}

CheckReport check_property(PropertyId p, const PropertyScenario& scenario) {
  require(scenario.steps.size() >= 3, "property scenario needs at least 3 steps");
  if (p == PropertyId::kP1)
    require(scenario.dual_steps.size() >= 3, "P1 scenario needs at least 3 dual steps");
  for (const auto& s : scenario.steps) check_step(s);
  for (const auto& s : scenario.dual_steps) check_step(s);

  CheckReport report;
  report.property = p;
  for (const auto& s : scenario.steps) report.parameters.push_back(s.parameter);
  const Measure measures[] = {Measure::kKl, Measure::kBh, Measure::kCkl};
  for (int k = 0; k < 3; ++k) {
    MeasureTrend& t = report.measures[k];
    t.measure = measures[k];
    for (const auto& s : scenario.steps)
      t.contributions.push_back(region_contribution(t.measure, s, property_region(p, s)));
    if (p == PropertyId::kP1) {
      for (const auto& s : scenario.dual_steps)
        t.dual_contributions.push_back(
            region_contribution(t.measure, s, property_region(p, s, true)));
      t.pass = diverges(t.contributions) && !diverges(t.dual_contributions);
    } else {
      t.pass = vanishes(t.contributions);
    }
  }
  return report;
}

PropertyScenario default_property_scenario(PropertyId p) {
  PropertyScenario sc;
  auto hist = [](double lo, double width, std::vector<double> d) {
    return HistogramDensity{lo, width, std::move(d)};
  };
  for (int e = 1; e <= 8; ++e) {
    const double big = std::pow(10.0, e);
    const double eps = 1.0 / big;
    switch (p) {
      case PropertyId::kP1: {
        sc.name = "p1-uniform-bag";
        // Bag U[0,1) on half-width cells. The POS class keeps only 1/(4M)
        // of its mass under the bag's left half, so bag/ref = 2M there.
        const double rest = (1.0 - 1.0 / (4.0 * big)) / 1.5;
        sc.steps.push_back({big, hist(0.0, 0.5, {1.0, 1.0, 0.0, 0.0}),
                            hist(0.0, 0.5, {1.0 / (2.0 * big), rest, rest, rest}),
                            hist(0.0, 0.5, {0.5, 0.5, 0.5, 0.5})});
        // Dual family: the bag leaves only 1/(4M) of its mass where the POS
        // class sits evenly, so ref/bag = 2M on [1,2).
        const double thin = 1.0 / (4.0 * big);
        sc.dual_steps.push_back({big, hist(0.0, 1.0, {1.0 - thin, thin}),
                                 hist(0.0, 1.0, {0.5, 0.5}), hist(0.0, 1.0, {0.25, 0.75})});
        break;
      }
      case PropertyId::kP2:
        sc.name = "p2-two-negative-classes";
        // Bag sits on [0,1) with eps of its mass leaking onto [2,4). The
        // reference classes differ only where the bag is (nearly) absent.
        sc.steps.push_back({eps, hist(0.0, 1.0, {1.0 - eps, 0.0, eps / 2.0, eps / 2.0}),
                            hist(0.0, 1.0, {0.5, 0.0, 0.25, 0.25}),
                            hist(0.0, 1.0, {0.5, 0.0, 0.5, 0.0})});
        break;
      case PropertyId::kP3:
        sc.name = "p3-unseen-segment";
        // A fifth of the bag lies on [2,3), where the POS class holds eps/2
        // and the NEG class eps^2/2.
        sc.steps.push_back({eps, hist(0.0, 1.0, {0.8, 0.0, 0.2}),
                            hist(0.0, 1.0, {1.0 - eps / 2.0, 0.0, eps / 2.0}),
                            hist(0.0, 1.0, {0.5, 0.5 - eps * eps / 2.0, eps * eps / 2.0})});
        break;
    }
  }
  return sc;
}

}  // namespace midiv

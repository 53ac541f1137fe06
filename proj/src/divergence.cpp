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

#include "divergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "error.hpp"

namespace midiv {

const char* measure_name(Measure m) {
  switch (m) {
    case Measure::kKl: return "KL";
    case Measure::kBh: return "BH";
    case Measure::kCkl: return "CKL";
  }
  return "unknown";
}

const char* integrator_name(Integrator i) {
  return i == Integrator::kImportance ? "IMPORTANCE" : "RIEMANN";
}

void DivergenceSpec::validate() const {
  require(n_imp >= 100, "n_imp must be >= 100");
  require(grid_points >= 256, "grid_points must be >= 256");
  require(ratio_clip > 1.0, "ratio_clip must be > 1");
  require(floor > 0.0 && floor < 1e-6, "floor must lie in (0, 1e-6)");
}

DivergenceEvaluator::DivergenceEvaluator(const DensityModel& bag,
                                         std::span<const DensityModel* const> references,
                                         const DivergenceSpec& spec, Seed seed,
                                         const DensityModel* importance)
    : spec_(spec) {
  spec_.validate();
  if (spec_.integrator == Integrator::kImportance) {
    const DensityModel& imp = importance ? *importance : bag;
    points_ = imp.sample(spec_.n_imp, seed);
    bag_density_ = bag.values(points_);
    bag_weight_.resize(points_.size());
    const double n = static_cast<double>(points_.size());
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
      double u = 1.0;
      if (importance) {
        const double q = imp.eval(points_[i]);
        u = q > 0.0 ? bag_density_[i] / q : 0.0;
      }
      bag_weight_[i] = u / n;
      sum += u;
      sum_sq += u * u;
    }
    ess_ = sum_sq > 0.0 ? sum * sum / sum_sq : 0.0;
  } else {
    Interval span = bag.support_hint();
    for (const DensityModel* r : references) {
      span.lo = std::min(span.lo, r->support_hint().lo);
      span.hi = std::max(span.hi, r->support_hint().hi);
    }
    const double pad = 0.1 * span.width();
    span.lo -= pad;
    span.hi += pad;
    const std::size_t n = spec_.grid_points;
    const double dx = span.width() / static_cast<double>(n);
    points_.resize(n);
    for (std::size_t i = 0; i < n; ++i) points_[i] = span.lo + (static_cast<double>(i) + 0.5) * dx;
    bag_density_ = bag.values(points_);
    bag_weight_.resize(n);
    for (std::size_t i = 0; i < n; ++i) bag_weight_[i] = bag_density_[i] * dx;
    ess_ = static_cast<double>(n);
  }
  active_points_ = static_cast<std::size_t>(
      std::count_if(bag_density_.begin(), bag_density_.end(), [](double f) { return f > 0.0; }));
}

std::vector<double> DivergenceEvaluator::values(const DensityModel& model) const {
  return model.values(points_);
}

DivergenceScore DivergenceEvaluator::base_score(Measure m) const {
  DivergenceScore s;
  s.measure = m;
  s.ess = ess_;
  s.low_ess = spec_.integrator == Integrator::kImportance &&
              ess_ < 0.01 * static_cast<double>(spec_.n_imp);
  return s;
}

double DivergenceEvaluator::clipped_log_ratio(double bag, double ref, bool& clipped) const {
  const double limit = std::log(spec_.ratio_clip);
  double floored = ref;
  if (floored < spec_.floor) {
    floored = spec_.floor;
    clipped = true;
  }
  double l = std::log(bag) - std::log(floored);
  if (l > limit) {
    l = limit;
    clipped = true;
  } else if (l < -limit) {
    l = -limit;
    clipped = true;
  }
  return l;
}

namespace {

double fraction(std::size_t count, std::size_t total) {
  return total == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(total);
}

}  // namespace

DivergenceScore DivergenceEvaluator::kl(std::span<const double> ref) const {
  require(ref.size() == points_.size(), "reference values do not match evaluation points");
  DivergenceScore s = base_score(Measure::kKl);
  double sum = 0.0;
  std::size_t clipped_count = 0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!(bag_density_[i] > 0.0) || bag_weight_[i] == 0.0) continue;
    bool clipped = false;
    sum += bag_weight_[i] * clipped_log_ratio(bag_density_[i], ref[i], clipped);
    clipped_count += clipped ? 1 : 0;
  }
  // KL is non-negative; a negative sum is estimator noise.
  s.value = std::max(sum, 0.0);
  s.clipped_fraction = fraction(clipped_count, active_points_);
  return s;
}

DivergenceScore DivergenceEvaluator::bhattacharyya(std::span<const double> ref) const {
  require(ref.size() == points_.size(), "reference values do not match evaluation points");
  DivergenceScore s = base_score(Measure::kBh);
  double affinity = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!(bag_density_[i] > 0.0) || !(ref[i] > 0.0)) continue;
    affinity += bag_weight_[i] * std::sqrt(ref[i] / bag_density_[i]);
  }
  std::size_t clipped_count = 0;
  if (affinity > 1.0) {
    affinity = 1.0;
  } else if (affinity < spec_.floor) {
    affinity = spec_.floor;
    clipped_count = active_points_;
  }
  s.value = -std::log(affinity);
  s.clipped_fraction = fraction(clipped_count, active_points_);
  return s;
}

DivergenceScore DivergenceEvaluator::ckl(std::span<const double> pos,
                                         std::span<const double> neg) const {
  require(pos.size() == points_.size() && neg.size() == points_.size(),
          "class values do not match evaluation points");
  DivergenceScore s = base_score(Measure::kCkl);
  double sum = 0.0;
  std::size_t clipped_count = 0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!(bag_density_[i] > 0.0) || bag_weight_[i] == 0.0) continue;
    bool clipped = false;
    const double log_ratio = clipped_log_ratio(bag_density_[i], pos[i], clipped);
    // The floor guards the log only. Flooring the weight's denominator would
    // push f_neg/f_pos below 1 wherever both classes are tiny and equal. Where
    // both are exactly zero the weight is zero: no class evidence, no say.
    double weight = 0.0;
    if (pos[i] > 0.0)
      weight = neg[i] / pos[i];
    else if (neg[i] > 0.0)
      weight = spec_.ratio_clip;
    if (weight > spec_.ratio_clip) {
      weight = spec_.ratio_clip;
      clipped = true;
    }
    sum += bag_weight_[i] * weight * log_ratio;
    clipped_count += clipped ? 1 : 0;
  }
  s.value = sum;
  s.clipped_fraction = fraction(clipped_count, active_points_);
  return s;
}

DivergenceScore DivergenceEvaluator::divergence(Measure measure, std::span<const double> ref,
                                                std::span<const double> neg) const {
  switch (measure) {
    case Measure::kKl: return kl(ref);
    case Measure::kBh: return bhattacharyya(ref);
    case Measure::kCkl: return ckl(ref, neg);
  }
  fail(ErrorCode::kInternal, "unknown measure");
}

DivergenceScore kl(const DensityModel& f_bag, const DensityModel& f_ref,
                   const DivergenceSpec& spec, Seed seed) {
  const DensityModel* refs[] = {&f_ref};
  return DivergenceEvaluator(f_bag, refs, spec, seed).kl(f_ref);
}

DivergenceScore bhattacharyya(const DensityModel& f_bag, const DensityModel& f_ref,
                              const DivergenceSpec& spec, Seed seed) {
  const DensityModel* refs[] = {&f_ref};
  return DivergenceEvaluator(f_bag, refs, spec, seed).bhattacharyya(f_ref);
}

DivergenceScore ckl(const DensityModel& f_bag, const DensityModel& f_pos,
                    const DensityModel& f_neg, const DivergenceSpec& spec, Seed seed) {
  const DensityModel* refs[] = {&f_pos, &f_neg};
  return DivergenceEvaluator(f_bag, refs, spec, seed).ckl(f_pos, f_neg);
}

double rd_ratio(const DensityModel& f_bag, const DensityModel& f_pos,
                const DensityModel& f_neg, Measure measure, const DivergenceSpec& spec,
                Seed seed) {
  require(measure == Measure::kKl || measure == Measure::kBh,
          "rd_ratio is defined for KL and BH");
  const DensityModel* refs[] = {&f_pos, &f_neg};
  DivergenceEvaluator ev(f_bag, refs, spec, seed);
  const double num = ev.divergence(measure, ev.values(f_pos)).value;
  const double den = ev.divergence(measure, ev.values(f_neg)).value;
  return num / std::max(den, kRatioDenominatorFloor);
}

double gaussian_kl(double mean1, double var1, double mean2, double var2) {
  const double d = mean1 - mean2;
  return 0.5 * std::log(var2 / var1) + (var1 + d * d) / (2.0 * var2) - 0.5;
}

double gaussian_bhattacharyya(double mean1, double var1, double mean2, double var2) {
  const double d = mean1 - mean2;
  return d * d / (4.0 * (var1 + var2)) + 0.5 * std::log((var1 + var2) / (2.0 * std::sqrt(var1 * var2)));
}

}  // namespace midiv

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

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "density.hpp"
#include "rng.hpp"

namespace midiv {

enum class Measure { kKl, kBh, kCkl };
enum class Integrator { kImportance, kRiemann };

const char* measure_name(Measure m);
const char* integrator_name(Integrator i);

struct DivergenceSpec {
  Measure measure = Measure::kKl;
  Integrator integrator = Integrator::kImportance;
  std::size_t n_imp = 1000;
  std::size_t grid_points = 4096;
  // Cap on density ratios (and on |log ratio| at log(ratio_clip)).
  double ratio_clip = 1e6;
  // Reference densities below this are raised to it before dividing.
  double floor = 1e-12;

  void validate() const;
};

struct DivergenceScore {
  Measure measure = Measure::kKl;
  double value = 0.0;
  // Share of evaluation points carrying bag mass where a floor or clip fired.
  double clipped_fraction = 0.0;
  // Effective sample size of the importance weights; grid size for RIEMANN.
  double ess = 0.0;
  bool low_ess = false;
};

// Evaluation points for integrals of the form  int f_bag(x) g(x) dx, built
// once per bag and reused against any number of reference densities.
//
// IMPORTANCE: z_i ~ f_imp (f_bag unless overridden), bag weight
//   f_bag(z_i) / (n f_imp(z_i)).
// RIEMANN: cell midpoints over the union of support hints padded by 10%,
//   bag weight f_bag(x_i) dx.
class DivergenceEvaluator {
 public:
  DivergenceEvaluator(const DensityModel& bag, std::span<const DensityModel* const> references,
                      const DivergenceSpec& spec, Seed seed,
                      const DensityModel* importance = nullptr);

  const std::vector<double>& points() const { return points_; }
  std::vector<double> values(const DensityModel& model) const;

  DivergenceScore kl(std::span<const double> ref) const;
  DivergenceScore bhattacharyya(std::span<const double> ref) const;
  DivergenceScore ckl(std::span<const double> pos, std::span<const double> neg) const;

  DivergenceScore kl(const DensityModel& ref) const { return kl(values(ref)); }
  DivergenceScore bhattacharyya(const DensityModel& ref) const {
    return bhattacharyya(values(ref));
  }
  DivergenceScore ckl(const DensityModel& pos, const DensityModel& neg) const {
    return ckl(values(pos), values(neg));
  }
  // Dispatches on measure; neg is required for CKL only.
  DivergenceScore divergence(Measure measure, std::span<const double> ref,
                             std::span<const double> neg = {}) const;

 private:
  DivergenceScore base_score(Measure m) const;
  double clipped_log_ratio(double bag, double ref, bool& clipped) const;

  DivergenceSpec spec_;
  std::vector<double> points_;
  std::vector<double> bag_density_;
  std::vector<double> bag_weight_;
  std::size_t active_points_ = 0;
  double ess_ = 0.0;
};

// int f_bag log(f_bag / f_ref).
DivergenceScore kl(const DensityModel& f_bag, const DensityModel& f_ref,
                   const DivergenceSpec& spec, Seed seed);
// -log int sqrt(f_bag f_ref).
DivergenceScore bhattacharyya(const DensityModel& f_bag, const DensityModel& f_ref,
                              const DivergenceSpec& spec, Seed seed);
// int (f_neg / f_pos) f_bag log(f_bag / f_pos).
DivergenceScore ckl(const DensityModel& f_bag, const DensityModel& f_pos,
                    const DensityModel& f_neg, const DivergenceSpec& spec, Seed seed);

// D(f_bag, f_pos) / D(f_bag, f_neg), denominator floored at 1e-12. Both
// divergences share one set of evaluation points. measure must be KL or BH.
double rd_ratio(const DensityModel& f_bag, const DensityModel& f_pos,
                const DensityModel& f_neg, Measure measure, const DivergenceSpec& spec,
                Seed seed);

inline constexpr double kRatioDenominatorFloor = 1e-12;

// Closed forms for single Gaussians, used as oracles.
double gaussian_kl(double mean1, double var1, double mean2, double var2);
double gaussian_bhattacharyya(double mean1, double var1, double mean2, double var2);

}  // namespace midiv

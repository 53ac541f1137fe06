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
#include <utility>
#include <vector>

#include "rng.hpp"

namespace midiv {

enum class DensityKind { kKdeEpanechnikov, kKdeGaussian, kGmm };
enum class Kernel { kEpanechnikov, kGaussian };

const char* density_kind_name(DensityKind kind);

struct GaussianComponent {
  double weight = 1.0;
  double mean = 0.0;
  double variance = 1.0;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
};

// Immutable univariate density: a fixed-bandwidth KDE or a Gaussian mixture.
class DensityModel {
 public:
  static DensityModel kde(std::vector<double> centers, Kernel kernel, double bandwidth);
  static DensityModel gmm(std::vector<GaussianComponent> components);

  DensityKind kind() const { return kind_; }
  bool is_kde() const { return kind_ != DensityKind::kGmm; }
  double bandwidth() const { return bandwidth_; }
  // Sorted ascending.
  const std::vector<double>& centers() const { return centers_; }
  const std::vector<GaussianComponent>& components() const { return components_; }
  // Outside this interval the density is negligible (exactly zero for the
  // Epanechnikov kernel).
  Interval support_hint() const { return support_; }

  double eval(double x) const;
  void eval(std::span<const double> xs, std::span<double> out) const;
  std::vector<double> values(std::span<const double> xs) const;

  double sample_one(Rng& rng) const;
  std::vector<double> sample(std::size_t n, Seed seed) const;

 private:
  DensityModel() = default;
  double eval_epanechnikov(double x) const;
  double eval_gaussian_kde(double x) const;
  double eval_gmm(double x) const;

  DensityKind kind_ = DensityKind::kGmm;
  double bandwidth_ = 0.0;
  std::vector<double> centers_;
  // Prefix sums of (c - shift) and (c - shift)^2 over sorted centers.
  std::vector<double> prefix1_;
  std::vector<double> prefix2_;
  double shift_ = 0.0;
  std::vector<GaussianComponent> components_;
  Interval support_;
};

// Rule-of-thumb bandwidth: 1.06 (Gaussian) or 2.345 (Epanechnikov) times
// spread * n^(-1/5).
double rule_of_thumb_bandwidth(double spread, std::size_t n, Kernel kernel);

// min(sample sd, IQR / 1.349), falling back to the sd when the IQR is zero.
double robust_spread(std::span<const double> samples);

DensityModel fit_kde(std::span<const double> samples, Kernel kernel,
                     std::optional<double> bandwidth = std::nullopt);

struct EmFitReport {
  std::size_t component_count = 0;
  double log_likelihood = 0.0;
  double aic = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  // Log-likelihood after initialisation and after every EM iteration.
  std::vector<double> log_likelihood_trace;
};

struct GmmFit {
  DensityModel model;
  EmFitReport report;
};

struct GmmOptions {
  std::size_t restarts = 3;
  std::size_t max_iterations = 500;
  double relative_tolerance = 1e-8;
  double variance_floor_factor = 1e-6;
};

// AIC for a 1-D mixture with k components: p = 3k - 1 free parameters.
double gmm_aic(double log_likelihood, std::size_t k);

GmmFit fit_gmm(std::span<const double> samples, std::size_t k, Seed seed,
               const GmmOptions& options = {});

// Fits k = 1..k_max and keeps the minimum-AIC fit (ties go to smaller k).
GmmFit select_gmm(std::span<const double> samples, std::size_t k_max, Seed seed,
                  const GmmOptions& options = {});

inline double eval_density(const DensityModel& model, double x) { return model.eval(x); }

inline std::vector<double> sample_density(const DensityModel& model, std::size_t n,
                                          Seed seed) {
  return model.sample(n, seed);
}

}  // namespace midiv

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

#include "density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "error.hpp"

namespace midiv {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;
// exp(-u^2/2) underflows to zero in double beyond this many bandwidths.
constexpr double kGaussianReach = 39.0;
// Windows with at most this many centres are summed directly.
constexpr std::ptrdiff_t kDirectSumLimit = 32;

double normal_pdf(double x, double mean, double variance) {
  const double z = x - mean;
  return kInvSqrt2Pi / std::sqrt(variance) * std::exp(-0.5 * z * z / variance);
}

double mean_of(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double biased_variance(std::span<const double> xs) {
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size());
}

// Type-7 (linear interpolation) quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

void check_finite(std::span<const double> samples) {
  for (double x : samples) require(std::isfinite(x), "samples must be finite");
}

}  // namespace

const char* density_kind_name(DensityKind kind) {
  switch (kind) {
    case DensityKind::kKdeEpanechnikov: return "kde_epanechnikov";
    case DensityKind::kKdeGaussian: return "kde_gaussian";
    case DensityKind::kGmm: return "gmm";
  }
  return "unknown";
}

DensityModel DensityModel::kde(std::vector<double> centers, Kernel kernel, double bandwidth) {
  require(!centers.empty(), "KDE needs at least one centre");
  require(std::isfinite(bandwidth) && bandwidth > 0.0, "KDE bandwidth must be positive");
  check_finite(centers);
  DensityModel m;
  m.kind_ = kernel == Kernel::kEpanechnikov ? DensityKind::kKdeEpanechnikov
                                            : DensityKind::kKdeGaussian;
  m.bandwidth_ = bandwidth;
  std::sort(centers.begin(), centers.end());
  m.centers_ = std::move(centers);
  m.shift_ = mean_of(m.centers_);
  m.prefix1_.assign(m.centers_.size() + 1, 0.0);
  m.prefix2_.assign(m.centers_.size() + 1, 0.0);
  for (std::size_t i = 0; i < m.centers_.size(); ++i) {
    const double c = m.centers_[i] - m.shift_;
    m.prefix1_[i + 1] = m.prefix1_[i] + c;
    m.prefix2_[i + 1] = m.prefix2_[i] + c * c;
  }
  const double reach = kernel == Kernel::kEpanechnikov ? 1.0 : 5.0;
  m.support_ = {m.centers_.front() - reach * bandwidth, m.centers_.back() + reach * bandwidth};
  return m;
}

DensityModel DensityModel::gmm(std::vector<GaussianComponent> components) {
  require(!components.empty(), "GMM needs at least one component");
  double total = 0.0;
  for (const auto& c : components) {
    require(std::isfinite(c.mean), "GMM mean must be finite");
    require(std::isfinite(c.variance) && c.variance > 0.0, "GMM variances must be positive");
    require(std::isfinite(c.weight) && c.weight >= 0.0, "GMM weights must be non-negative");
    total += c.weight;
  }
  require(std::abs(total - 1.0) <= 1e-12, "GMM weights must sum to 1");
  DensityModel m;
  m.kind_ = DensityKind::kGmm;
  m.components_ = std::move(components);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& c : m.components_) {
    const double sd = std::sqrt(c.variance);
    lo = std::min(lo, c.mean - 8.0 * sd);
    hi = std::max(hi, c.mean + 8.0 * sd);
  }
  m.support_ = {lo, hi};
  return m;
}

double DensityModel::eval_epanechnikov(double x) const {
  const double h = bandwidth_;
  const auto first = std::lower_bound(centers_.begin(), centers_.end(), x - h);
  const auto last = std::upper_bound(first, centers_.end(), x + h);
  const std::ptrdiff_t count = last - first;
  if (count == 0) return 0.0;
  double sum = 0.0;
  if (count <= kDirectSumLimit) {
    for (auto it = first; it != last; ++it) {
      const double u = (x - *it) / h;
      sum += 1.0 - u * u;
    }
  } else {
    // sum_i 1 - ((x - c_i)/h)^2 expanded around the shift.
    const auto a = static_cast<std::size_t>(first - centers_.begin());
    const auto b = static_cast<std::size_t>(last - centers_.begin());
    const double s1 = prefix1_[b] - prefix1_[a];
    const double s2 = prefix2_[b] - prefix2_[a];
    const double xs = x - shift_;
    const double n = static_cast<double>(count);
    sum = n - (n * xs * xs - 2.0 * xs * s1 + s2) / (h * h);
  }
  sum = std::max(sum, 0.0);
  return 0.75 * sum / (static_cast<double>(centers_.size()) * h);
}

double DensityModel::eval_gaussian_kde(double x) const {
  const double h = bandwidth_;
  const auto first = std::lower_bound(centers_.begin(), centers_.end(), x - kGaussianReach * h);
  const auto last = std::upper_bound(first, centers_.end(), x + kGaussianReach * h);
  double sum = 0.0;
  for (auto it = first; it != last; ++it) {
    const double u = (x - *it) / h;
    sum += std::exp(-0.5 * u * u);
  }
  return kInvSqrt2Pi * sum / (static_cast<double>(centers_.size()) * h);
}

double DensityModel::eval_gmm(double x) const {
  double sum = 0.0;
  for (const auto& c : components_) sum += c.weight * normal_pdf(x, c.mean, c.variance);
  return sum;
}

double DensityModel::eval(double x) const {
  switch (kind_) {
    case DensityKind::kKdeEpanechnikov: return eval_epanechnikov(x);
    case DensityKind::kKdeGaussian: return eval_gaussian_kde(x);
    case DensityKind::kGmm: return eval_gmm(x);
  }
  return 0.0;
}

void DensityModel::eval(std::span<const double> xs, std::span<double> out) const {
  require(xs.size() == out.size(), "eval: output size mismatch");
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = eval(xs[i]);
}

std::vector<double> DensityModel::values(std::span<const double> xs) const {
  std::vector<double> out(xs.size());
  eval(xs, out);
  return out;
}

double DensityModel::sample_one(Rng& rng) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  switch (kind_) {
    case DensityKind::kKdeEpanechnikov: {
      std::uniform_int_distribution<std::size_t> pick(0, centers_.size() - 1);
      const double c = centers_[pick(rng)];
      // Inverse CDF of 3/4 (1 - u^2) on [-1, 1].
      const double p = unif(rng);
      const double u = 2.0 * std::sin(std::asin(2.0 * p - 1.0) / 3.0);
      return c + bandwidth_ * u;
    }
    case DensityKind::kKdeGaussian: {
      std::uniform_int_distribution<std::size_t> pick(0, centers_.size() - 1);
      const double c = centers_[pick(rng)];
      return c + bandwidth_ * normal(rng);
    }
    case DensityKind::kGmm: {
      double p = unif(rng);
      std::size_t j = 0;
      for (; j + 1 < components_.size(); ++j) {
        if (p < components_[j].weight) break;
        p -= components_[j].weight;
      }
      const auto& c = components_[j];
      return c.mean + std::sqrt(c.variance) * normal(rng);
    }
  }
  return 0.0;
}

std::vector<double> DensityModel::sample(std::size_t n, Seed seed) const {
  require(n >= 1, "sample count must be >= 1");
  Rng rng = make_rng(seed);
  std::vector<double> out(n);
  for (auto& x : out) x = sample_one(rng);
  return out;
}

double rule_of_thumb_bandwidth(double spread, std::size_t n, Kernel kernel) {
  require(spread > 0.0 && n >= 1, "bandwidth rule needs positive spread and n >= 1");
  const double factor = kernel == Kernel::kEpanechnikov ? 2.345 : 1.06;
  return factor * spread * std::pow(static_cast<double>(n), -0.2);
}

double robust_spread(std::span<const double> samples) {
  require(samples.size() >= 2, "spread needs at least two samples");
  const double m = mean_of(samples);
  double ss = 0.0;
  for (double x : samples) ss += (x - m) * (x - m);
  const double sd = std::sqrt(ss / static_cast<double>(samples.size() - 1));
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  const double robust = iqr / 1.349;
  return robust > 0.0 ? std::min(sd, robust) : sd;
}

DensityModel fit_kde(std::span<const double> samples, Kernel kernel,
                     std::optional<double> bandwidth) {
  check_finite(samples);
  if (bandwidth) {
    require(!samples.empty(), "KDE needs at least one sample");
    return DensityModel::kde({samples.begin(), samples.end()}, kernel, *bandwidth);
  }
  require(samples.size() >= 2, "KDE needs at least two samples without an explicit bandwidth");
  const double spread = robust_spread(samples);
  if (!(spread > 0.0))
    fail(ErrorCode::kNumeric,
         "zero sample variance: the bandwidth rule degenerates, pass an explicit bandwidth");
  return DensityModel::kde({samples.begin(), samples.end()}, kernel,
                           rule_of_thumb_bandwidth(spread, samples.size(), kernel));
}

double gmm_aic(double log_likelihood, std::size_t k) {
  const double p = 3.0 * static_cast<double>(k) - 1.0;
  return 2.0 * p - 2.0 * log_likelihood;
}

namespace {

// E-step: fills resp (n x k, row-major) and returns the log-likelihood.
double expectation(std::span<const double> xs, const std::vector<GaussianComponent>& comps,
                   std::vector<double>& resp) {
  const std::size_t k = comps.size();
  resp.resize(xs.size() * k);
  std::vector<double> logw(k);
  std::vector<double> logsd(k);
  for (std::size_t j = 0; j < k; ++j) {
    logw[j] = comps[j].weight > 0.0 ? std::log(comps[j].weight)
                                    : -std::numeric_limits<double>::infinity();
    logsd[j] = 0.5 * std::log(comps[j].variance);
  }
  const double log_norm = std::log(kInvSqrt2Pi);
  double ll = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double* r = &resp[i * k];
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      const double z = xs[i] - comps[j].mean;
      r[j] = logw[j] + log_norm - logsd[j] - 0.5 * z * z / comps[j].variance;
      mx = std::max(mx, r[j]);
    }
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      r[j] = std::exp(r[j] - mx);
      s += r[j];
    }
    for (std::size_t j = 0; j < k; ++j) r[j] /= s;
    ll += mx + std::log(s);
  }
  return ll;
}

void maximization(std::span<const double> xs, const std::vector<double>& resp,
                  double variance_floor, std::vector<GaussianComponent>& comps) {
  const std::size_t k = comps.size();
  const double n = static_cast<double>(xs.size());
  for (std::size_t j = 0; j < k; ++j) {
    double nj = 0.0;
    double sx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      nj += resp[i * k + j];
      sx += resp[i * k + j] * xs[i];
    }
    if (nj <= 0.0) {
      comps[j].weight = 0.0;
      continue;
    }
    const double mu = sx / nj;
    double sv = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double z = xs[i] - mu;
      sv += resp[i * k + j] * z * z;
    }
    comps[j] = {nj / n, mu, std::max(sv / nj, variance_floor)};
  }
  double total = 0.0;
  for (const auto& c : comps) total += c.weight;
  for (auto& c : comps) c.weight /= total;
}

// k-means++ seeding followed by one hard assignment.
std::vector<GaussianComponent> initialise(std::span<const double> xs, std::size_t k,
                                          double variance_floor, Rng& rng) {
  std::vector<double> seeds;
  std::uniform_int_distribution<std::size_t> pick(0, xs.size() - 1);
  seeds.push_back(xs[pick(rng)]);
  std::vector<double> d2(xs.size());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  while (seeds.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (double s : seeds) best = std::min(best, (xs[i] - s) * (xs[i] - s));
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      seeds.push_back(xs[pick(rng)]);
      continue;
    }
    double target = unif(rng) * total;
    std::size_t chosen = xs.size() - 1;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      target -= d2[i];
      if (target < 0.0) {
        chosen = i;
        break;
      }
    }
    seeds.push_back(xs[chosen]);
  }

  const double overall_var = std::max(biased_variance(xs), variance_floor);
  std::vector<double> n(k, 0.0), s1(k, 0.0), s2(k, 0.0);
  for (double x : xs) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j)
      if (std::abs(x - seeds[j]) < std::abs(x - seeds[best])) best = j;
    n[best] += 1.0;
    s1[best] += x;
    s2[best] += x * x;
  }
  std::vector<GaussianComponent> comps(k);
  for (std::size_t j = 0; j < k; ++j) {
    if (n[j] < 2.0) {
      comps[j] = {std::max(n[j], 1.0), seeds[j], overall_var};
      continue;
    }
    const double mu = s1[j] / n[j];
    const double var = s2[j] / n[j] - mu * mu;
    comps[j] = {n[j], mu, std::max(var, variance_floor)};
  }
  double total = 0.0;
  for (const auto& c : comps) total += c.weight;
  for (auto& c : comps) c.weight /= total;
  return comps;
}

GmmFit run_em(std::span<const double> xs, std::size_t k, Rng& rng, const GmmOptions& opt,
              double variance_floor) {
  std::vector<GaussianComponent> comps = initialise(xs, k, variance_floor, rng);
  std::vector<double> resp;
  EmFitReport report;
  report.component_count = k;
  double ll = expectation(xs, comps, resp);
  report.log_likelihood_trace.push_back(ll);
  for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
    maximization(xs, resp, variance_floor, comps);
    const double next = expectation(xs, comps, resp);
    report.log_likelihood_trace.push_back(next);
    report.iterations = it;
    const bool done = std::abs(next - ll) < opt.relative_tolerance * std::abs(ll);
    ll = next;
    if (done) {
      report.converged = true;
      break;
    }
  }
  report.log_likelihood = ll;
  report.aic = gmm_aic(ll, k);
  // Drop components that lost all responsibility.
  std::erase_if(comps, [](const GaussianComponent& c) { return c.weight <= 0.0; });
  double total = 0.0;
  for (const auto& c : comps) total += c.weight;
  for (auto& c : comps) c.weight /= total;
  return {DensityModel::gmm(std::move(comps)), std::move(report)};
}

}  // namespace

GmmFit fit_gmm(std::span<const double> samples, std::size_t k, Seed seed,
               const GmmOptions& options) {
  require(k >= 1, "GMM component count must be >= 1");
  require(samples.size() >= 3 * k,
          "too few samples for a " + std::to_string(k) + "-component GMM (need >= " +
              std::to_string(3 * k) + ")");
  check_finite(samples);
  const double var = biased_variance(samples);
  if (!(var > 0.0)) fail(ErrorCode::kNumeric, "GMM fit needs non-zero sample variance");
  const double floor = options.variance_floor_factor * var;

  std::optional<GmmFit> best;
  const std::size_t restarts = k == 1 ? 1 : std::max<std::size_t>(options.restarts, 1);
  for (std::size_t r = 0; r < restarts; ++r) {
    Rng rng = make_rng(derive_seed(seed, "gmm-restart", {k, r}));
    GmmFit fit = run_em(samples, k, rng, options, floor);
    if (!best || fit.report.log_likelihood > best->report.log_likelihood) best = std::move(fit);
  }
  return std::move(*best);
}

GmmFit select_gmm(std::span<const double> samples, std::size_t k_max, Seed seed,
                  const GmmOptions& options) {
  require(k_max >= 1, "k_max must be >= 1");
  std::optional<GmmFit> best;
  std::string last_error;
  for (std::size_t k = 1; k <= k_max; ++k) {
    try {
      GmmFit fit = fit_gmm(samples, k, seed, options);
      if (!best || fit.report.aic < best->report.aic) best = std::move(fit);
    } catch (const Error& e) {
      last_error = e.what();
    }
  }
  if (!best) fail(ErrorCode::kNumeric, "every GMM fit failed: " + last_error);
  return std::move(*best);
}

}  // namespace midiv

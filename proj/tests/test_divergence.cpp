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

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "divergence.hpp"
#include "test_util.hpp"

using namespace midiv;
using midiv::testing::oracle_gaussian_bh;
using midiv::testing::oracle_gaussian_kl;

namespace {

DensityModel normal(double mean, double var) { return DensityModel::gmm({{1.0, mean, var}}); }

DivergenceSpec spec_for(Integrator integ, std::size_t n_imp = 20000, std::size_t grid = 10000) {
  DivergenceSpec s;
  s.integrator = integ;
  s.n_imp = n_imp;
  s.grid_points = grid;
  return s;
}

DensityModel random_gmm(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> kd(1, 3);
  std::uniform_real_distribution<double> mean(-3.0, 3.0), var(0.3, 2.0), w(0.2, 1.0);
  const int k = kd(rng);
  std::vector<GaussianComponent> comps(k);
  double total = 0;
  for (auto& c : comps) {
    c = {w(rng), mean(rng), var(rng)};
    total += c.weight;
  }
  for (auto& c : comps) c.weight /= total;
  return DensityModel::gmm(comps);
}

}  // namespace

TEST_CASE("kl closed-form examples under both integrators") {
  for (Integrator integ : {Integrator::kRiemann, Integrator::kImportance}) {
    const auto s = spec_for(integ);
    CHECK(kl(normal(0, 1), normal(1, 1), s, 1).value == doctest::Approx(0.5).epsilon(0.03));
    CHECK(std::abs(kl(normal(0, 1), normal(0, 4), s, 2).value - (std::log(2.0) + 0.125 - 0.5)) < 0.01);
  }
}

TEST_CASE("divergence of a model with itself is zero") {
  const auto m = DensityModel::gmm({{0.4, -1.0, 0.5}, {0.6, 2.0, 1.5}});
  CHECK(std::abs(kl(m, m, spec_for(Integrator::kRiemann), 1).value) < 1e-6);
  CHECK(std::abs(bhattacharyya(m, m, spec_for(Integrator::kRiemann), 1).value) < 1e-6);
  // With the bag as importance density the log ratio is identically zero.
  CHECK(kl(m, m, spec_for(Integrator::kImportance), 1).value == 0.0);
  CHECK(std::abs(bhattacharyya(m, m, spec_for(Integrator::kImportance), 1).value) < 1e-12);
}

TEST_CASE("bhattacharyya closed-form examples and symmetry") {
  for (Integrator integ : {Integrator::kRiemann, Integrator::kImportance}) {
    const auto s = spec_for(integ);
    CHECK(std::abs(bhattacharyya(normal(0, 1), normal(1, 1), s, 3).value - 0.125) < 0.01);
    CHECK(std::abs(bhattacharyya(normal(0, 1), normal(0, 4), s, 4).value - 0.5 * std::log(1.25)) < 0.01);
    const double ab = bhattacharyya(normal(0, 1), normal(1.5, 2), s, 5).value;
    const double ba = bhattacharyya(normal(1.5, 2), normal(0, 1), s, 5).value;
    CHECK(std::abs(ab - ba) < 0.01);
  }
}

TEST_CASE("ckl reductions") {
  for (Integrator integ : {Integrator::kRiemann, Integrator::kImportance}) {
    const auto s = spec_for(integ);
    const auto bag = normal(0, 1);
    const auto pos = normal(1, 1);
    CHECK(std::abs(ckl(bag, pos, pos, s, 6).value - 0.5) < 0.02);
    CHECK(std::abs(ckl(pos, pos, normal(3, 1), s, 7).value) < 1e-6);
  }
}

TEST_CASE("ckl with equal classes tracks kl on random triples") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 20; ++i) {
    const auto bag = random_gmm(rng);
    const auto pos = random_gmm(rng);
    const auto s = spec_for(Integrator::kImportance, 5000);
    // Same seed, same points: the weight is exactly one everywhere.
    CHECK(ckl(bag, pos, pos, s, i).value == doctest::Approx(kl(bag, pos, s, i).value).epsilon(1e-12));
    const auto r = spec_for(Integrator::kRiemann);
    CHECK(std::abs(ckl(bag, pos, pos, r, i).value - kl(bag, pos, s, i).value) <
          0.05 + 0.05 * kl(bag, pos, r, i).value);
  }
}

TEST_CASE("rd ratio examples") {
  const auto s = spec_for(Integrator::kRiemann);
  CHECK(std::abs(rd_ratio(normal(0, 1), normal(1, 1), normal(2, 1), Measure::kKl, s, 1) - 0.25) < 0.02);
  CHECK(rd_ratio(normal(1, 1), normal(1, 1), normal(3, 1), Measure::kKl, s, 1) < 1e-6);
  CHECK(rd_ratio(normal(3, 1), normal(1, 1), normal(3, 1), Measure::kBh, s, 1) > 1e3);
  CHECK(capture_error([&] { rd_ratio(normal(0, 1), normal(1, 1), normal(2, 1), Measure::kCkl, s, 1); }).thrown);
}

TEST_CASE("estimates agree with closed forms on random gaussian pairs") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> mean(-3.0, 3.0), var(0.25, 4.0);
  // The default clip deliberately truncates log ratios beyond log(1e6); far
  // apart pairs put real mass there, so it is lifted to test the integrator.
  auto s = spec_for(Integrator::kRiemann);
  s.ratio_clip = 1e300;
  s.floor = 1e-300;
  for (int i = 0; i < 50; ++i) {
    const double m1 = mean(rng), v1 = var(rng), m2 = mean(rng), v2 = var(rng);
    const double k = kl(normal(m1, v1), normal(m2, v2), s, i).value;
    const double b = bhattacharyya(normal(m1, v1), normal(m2, v2), s, i).value;
    CHECK(std::abs(k - oracle_gaussian_kl(m1, v1, m2, v2)) <= 0.03 * oracle_gaussian_kl(m1, v1, m2, v2));
    CHECK(std::abs(b - oracle_gaussian_bh(m1, v1, m2, v2)) <= 0.03 * oracle_gaussian_bh(m1, v1, m2, v2));
  }
}

TEST_CASE("riemann and importance agree on random mixtures") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 50; ++i) {
    const auto f = random_gmm(rng);
    const auto g = random_gmm(rng);
    const auto r = spec_for(Integrator::kRiemann);
    const auto s = spec_for(Integrator::kImportance, 100000);
    const double kr = kl(f, g, r, i).value, ki = kl(f, g, s, i).value;
    const double br = bhattacharyya(f, g, r, i).value, bi = bhattacharyya(f, g, s, i).value;
    CHECK(std::abs(kr - ki) < 0.02 + 0.02 * std::abs(kr));
    CHECK(std::abs(br - bi) < 0.02 + 0.02 * std::abs(br));
    CHECK(ki >= -1e-6);
    CHECK(bi >= -1e-6);
  }
}

TEST_CASE("kde inputs: compact support is handled by flooring and clipping") {
  const std::vector<double> a{0.0, 0.2, 0.5, 0.9};
  const std::vector<double> b{5.0, 5.5, 6.0};
  const auto fa = fit_kde(a, Kernel::kEpanechnikov, 0.5);
  const auto fb = fit_kde(b, Kernel::kEpanechnikov, 0.5);
  for (Integrator integ : {Integrator::kRiemann, Integrator::kImportance}) {
    const auto s = spec_for(integ, 2000, 4096);
    const auto k = kl(fa, fb, s, 1);
    // Disjoint supports: the log ratio hits the clip almost everywhere.
    // Riemann bag mass can exceed one by the quadrature error.
    CHECK(k.value <= std::log(s.ratio_clip) * (1 + 1e-3));
    CHECK(k.value > 0.95 * std::log(s.ratio_clip));
    CHECK(k.clipped_fraction > 0.95);
    const auto h = bhattacharyya(fa, fb, s, 1);
    CHECK(std::isfinite(h.value));
    CHECK(h.value == doctest::Approx(-std::log(s.floor)));
  }
}

TEST_CASE("scores carry sane diagnostics and are deterministic") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10; ++i) {
    const auto f = random_gmm(rng), g = random_gmm(rng), h = random_gmm(rng);
    const auto s = spec_for(Integrator::kImportance, 1000);
    for (const auto& sc : {kl(f, g, s, i), bhattacharyya(f, g, s, i), ckl(f, g, h, s, i)}) {
      CHECK(sc.clipped_fraction >= 0.0);
      CHECK(sc.clipped_fraction <= 1.0);
      CHECK(sc.ess > 0.0);
      CHECK(sc.ess <= 1000.0 + 1e-9);
    }
    CHECK(ckl(f, g, h, s, 99).value == ckl(f, g, h, s, 99).value);
    CHECK(kl(f, g, s, 99).value == kl(f, g, s, 99).value);
  }
}

TEST_CASE("a poor importance density is flagged") {
  const auto bag = normal(0, 1);
  const auto ref = normal(0, 2);
  const auto far = normal(6, 0.25);
  const DensityModel* refs[] = {&ref};
  DivergenceSpec s;
  s.n_imp = 1000;
  const DivergenceEvaluator ev(bag, refs, s, 1, &far);
  const auto sc = ev.kl(ref);
  CHECK(sc.low_ess);
  CHECK(sc.ess < 10.0);
}

TEST_CASE("spec validation") {
  auto bad = [](auto mutate) {
    DivergenceSpec s;
    mutate(s);
    return capture_error([&] { s.validate(); }).code == ErrorCode::kInvalidArgument;
  };
  CHECK(bad([](DivergenceSpec& s) { s.n_imp = 99; }));
  CHECK(bad([](DivergenceSpec& s) { s.grid_points = 255; }));
  CHECK(bad([](DivergenceSpec& s) { s.ratio_clip = 1.0; }));
  CHECK(bad([](DivergenceSpec& s) { s.floor = 0.0; }));
  CHECK(bad([](DivergenceSpec& s) { s.floor = 1e-6; }));
  CHECK_FALSE(capture_error([] { DivergenceSpec{}.validate(); }).thrown);
}

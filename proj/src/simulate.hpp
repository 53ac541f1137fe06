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
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "rng.hpp"

namespace midiv {

enum class Scenario { kSim1, kSim2, kSim3, kSim4, kSim5, kSim6, kCustom };

const char* scenario_name(Scenario s);
std::optional<Scenario> parse_scenario(const std::string& name);

// Which generative family a configuration draws from.
//   kTwoComponent: hierarchical positive/negative Gaussian components mixed
//     by tau_i ~ Bernoulli(pi_k) (SIM1-SIM4).
//   kLognormalVsMixture: whole-bag lognormal (POS) vs two-Gaussian mixture
//     (NEG), optionally with per-bag parameters (SIM5, SIM6).
enum class BagFamily { kTwoComponent, kLognormalVsMixture };

// How the second argument of N(a, b) in the hyperpriors is read.
enum class VarianceNotation { kVariance, kStdDev };

struct SimConfig {
  Scenario scenario = Scenario::kCustom;
  BagFamily family = BagFamily::kTwoComponent;
  std::size_t n_instances = 50;

  // Two-component family. The positive-component mean prior is centred on
  // one of nu_pos, picked uniformly per bag (or once per experiment).
  std::vector<double> nu_pos = {15.0};
  bool nu_pos_per_experiment = false;
  double eta_pos = 1.0;
  double pi_neg = 0.0;
  double pi_pos = 0.10;
  double mu_neg_center = 0.0;
  double mu_prior_spread = 10.0;
  double zeta_neg_center = 1.0;
  double zeta_spread = 1.0;
  VarianceNotation variance_notation = VarianceNotation::kVariance;
  double variance_floor = 1e-8;

  // Lognormal-vs-mixture family.
  double lognormal_mu = 2.302585092994046;  // log(10)
  double lognormal_var = 0.04;
  double mixture_mu1 = 9.5;
  double mixture_mu2 = 13.5;
  double mixture_var = 2.5;
  double mixture_pi1 = 0.9;
  // Per-bag parameter randomisation (SIM6): variance of the Gaussian the
  // lognormal mu and the mixture means are drawn from; 0 disables.
  double lognormal_mu_hyper_var = 0.0;
  double mixture_mean_hyper_var = 0.0;

  void validate() const;
  static SimConfig preset(Scenario s);
};

struct BagLatent {
  double pi = 0.0;
  double mu_pos = 0.0;
  double var_pos = 0.0;
  double mu_neg = 0.0;
  double var_neg = 0.0;
  std::vector<std::uint8_t> tau;
  // Lognormal-vs-mixture family.
  double lognormal_mu = 0.0;
  double mixture_mu1 = 0.0;
  double mixture_mu2 = 0.0;
};

struct GeneratedBag {
  Bag bag;
  Label true_label;
  BagLatent latent;
  Seed seed;
};

// Step 1 draws the bag parameters from the label's hyperpriors, step 2 the
// instances given those parameters. Each step has its own derived stream.
GeneratedBag sample_bag(const SimConfig& config, Label label, Seed seed,
                        const std::string& id = "bag");

// Re-runs step 2 from recorded parameters.
std::vector<double> replay_instances(const SimConfig& config, Label label,
                                     const BagLatent& latent, Seed seed);

struct Experiment {
  Dataset train;
  Dataset test;
  std::vector<GeneratedBag> train_bags;
  std::vector<GeneratedBag> test_bags;
};

// Train holds n_train_pos POS then n_train_neg NEG bags; test holds
// n_test / 2 POS bags followed by the remaining NEG bags.
Experiment sample_experiment(const SimConfig& config, std::size_t n_train_pos,
                             std::size_t n_train_neg, std::size_t n_test, Seed seed);

}  // namespace midiv

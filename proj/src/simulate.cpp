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

#include "simulate.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "error.hpp"

namespace midiv {

const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::kSim1: return "sim1";
    case Scenario::kSim2: return "sim2";
    case Scenario::kSim3: return "sim3";
    case Scenario::kSim4: return "sim4";
    case Scenario::kSim5: return "sim5";
    case Scenario::kSim6: return "sim6";
    case Scenario::kCustom: return "custom";
  }
  return "unknown";
}

std::optional<Scenario> parse_scenario(const std::string& name) {
  for (Scenario s : {Scenario::kSim1, Scenario::kSim2, Scenario::kSim3, Scenario::kSim4,
                     Scenario::kSim5, Scenario::kSim6, Scenario::kCustom})
    if (name == scenario_name(s)) return s;
  return std::nullopt;
}

void SimConfig::validate() const {
  require(n_instances >= 1, "n_instances must be >= 1");
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  require(prob(pi_neg) && prob(pi_pos) && prob(mixture_pi1), "probabilities must be in [0, 1]");
  require(!nu_pos.empty(), "nu_pos needs at least one value");
  require(mu_prior_spread >= 0.0 && zeta_spread >= 0.0, "hyperprior spreads must be >= 0");
  require(variance_floor > 0.0, "variance_floor must be positive");
  require(lognormal_var > 0.0 && mixture_var > 0.0, "component variances must be positive");
  require(lognormal_mu_hyper_var >= 0.0 && mixture_mean_hyper_var >= 0.0,
          "hyper variances must be >= 0");
}

SimConfig SimConfig::preset(Scenario s) {
  SimConfig c;
  c.scenario = s;
  switch (s) {
    case Scenario::kSim1:
      c.nu_pos = {15.0};
      c.eta_pos = 1.0;
      c.pi_neg = 0.0;
      break;
    case Scenario::kSim2:
      c.nu_pos = {15.0};
      c.eta_pos = 1.0;
      c.pi_neg = 0.01;
      break;
    case Scenario::kSim3:
      c.nu_pos = {0.0};
      c.eta_pos = 100.0;
      c.pi_neg = 0.0;
      break;
    case Scenario::kSim4:
      c.nu_pos = {-15.0, 15.0};
      c.eta_pos = 1.0;
      c.pi_neg = 0.01;
      break;
    case Scenario::kSim5:
      c.family = BagFamily::kLognormalVsMixture;
      break;
    case Scenario::kSim6:
      c.family = BagFamily::kLognormalVsMixture;
      c.lognormal_mu_hyper_var = 0.04;
      c.mixture_mean_hyper_var = 1.0;
      break;
    case Scenario::kCustom:
      break;
  }
  return c;
}

namespace {

double prior_sd(const SimConfig& c) {
  return c.variance_notation == VarianceNotation::kVariance ? std::sqrt(c.mu_prior_spread)
                                                            : c.mu_prior_spread;
}

double draw_normal(Rng& rng, double mean, double variance) {
  if (variance <= 0.0) return mean;
  std::normal_distribution<double> n(mean, std::sqrt(variance));
  return n(rng);
}

BagLatent draw_parameters(const SimConfig& c, Label label, Rng& rng) {
  BagLatent l;
  if (c.family == BagFamily::kTwoComponent) {
    l.pi = label == Label::kPos ? c.pi_pos : c.pi_neg;
    double nu = c.nu_pos.front();
    if (c.nu_pos.size() > 1) {
      std::uniform_int_distribution<std::size_t> pick(0, c.nu_pos.size() - 1);
      nu = c.nu_pos[pick(rng)];
    }
    const double sd = prior_sd(c);
    const double zeta_var = c.zeta_spread * c.zeta_spread;
    l.mu_pos = draw_normal(rng, nu, sd * sd);
    l.var_pos = std::max(std::abs(draw_normal(rng, c.eta_pos, zeta_var)), c.variance_floor);
    l.mu_neg = draw_normal(rng, c.mu_neg_center, sd * sd);
    l.var_neg =
        std::max(std::abs(draw_normal(rng, c.zeta_neg_center, zeta_var)), c.variance_floor);
  } else {
    l.pi = label == Label::kPos ? 1.0 : 0.0;
    l.lognormal_mu = draw_normal(rng, c.lognormal_mu, c.lognormal_mu_hyper_var);
    l.mixture_mu1 = draw_normal(rng, c.mixture_mu1, c.mixture_mean_hyper_var);
    l.mixture_mu2 = draw_normal(rng, c.mixture_mu2, c.mixture_mean_hyper_var);
  }
  return l;
}

std::vector<double> draw_instances(const SimConfig& c, Label label, BagLatent& l, Rng& rng) {
  std::vector<double> xs(c.n_instances);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  if (c.family == BagFamily::kTwoComponent) {
    l.tau.assign(c.n_instances, 0);
    const double sd_pos = std::sqrt(l.var_pos);
    const double sd_neg = std::sqrt(l.var_neg);
    for (std::size_t i = 0; i < c.n_instances; ++i) {
      const bool positive = unif(rng) < l.pi;
      l.tau[i] = positive ? 1 : 0;
      const double z = normal(rng);
      xs[i] = positive ? l.mu_pos + sd_pos * z : l.mu_neg + sd_neg * z;
    }
  } else {
    l.tau.clear();
    const double ln_sd = std::sqrt(c.lognormal_var);
    const double mix_sd = std::sqrt(c.mixture_var);
    for (std::size_t i = 0; i < c.n_instances; ++i) {
      if (label == Label::kPos) {
        xs[i] = std::exp(l.lognormal_mu + ln_sd * normal(rng));
      } else {
        const bool first = unif(rng) < c.mixture_pi1;
        xs[i] = (first ? l.mixture_mu1 : l.mixture_mu2) + mix_sd * normal(rng);
      }
    }
  }
  return xs;
}

std::string bag_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%04zu", prefix, i);
  return buf;
}

}  // namespace

GeneratedBag sample_bag(const SimConfig& config, Label label, Seed seed, const std::string& id) {
  config.validate();
  Rng step1 = make_rng(derive_seed(seed, "step1"));
  BagLatent latent = draw_parameters(config, label, step1);
  Rng step2 = make_rng(derive_seed(seed, "step2"));
  std::vector<double> xs = draw_instances(config, label, latent, step2);
  return {Bag::from_scalars(id, std::move(xs), label), label, std::move(latent), seed};
}

std::vector<double> replay_instances(const SimConfig& config, Label label,
                                     const BagLatent& latent, Seed seed) {
  BagLatent copy = latent;
  Rng step2 = make_rng(derive_seed(seed, "step2"));
  return draw_instances(config, label, copy, step2);
}

Experiment sample_experiment(const SimConfig& config, std::size_t n_train_pos,
                             std::size_t n_train_neg, std::size_t n_test, Seed seed) {
  config.validate();
  require(n_train_pos >= 1 && n_train_neg >= 1 && n_test >= 1, "bag counts must be >= 1");
  SimConfig cfg = config;
  if (cfg.nu_pos_per_experiment && cfg.nu_pos.size() > 1) {
    Rng rng = make_rng(derive_seed(seed, "nu-pos"));
    std::uniform_int_distribution<std::size_t> pick(0, cfg.nu_pos.size() - 1);
    cfg.nu_pos = {cfg.nu_pos[pick(rng)]};
  }

  Experiment ex;
  ex.train.name = "train";
  ex.test.name = "test";
  ex.train.dimension = ex.test.dimension = 1;
  const std::size_t n_train = n_train_pos + n_train_neg;
  for (std::size_t i = 0; i < n_train; ++i) {
    const Label label = i < n_train_pos ? Label::kPos : Label::kNeg;
    ex.train_bags.push_back(
        sample_bag(cfg, label, derive_seed(seed, "train-bag", {i}), bag_id("train", i)));
    ex.train.bags.push_back(ex.train_bags.back().bag);
  }
  const std::size_t test_pos = n_test / 2;
  for (std::size_t i = 0; i < n_test; ++i) {
    const Label label = i < test_pos ? Label::kPos : Label::kNeg;
    ex.test_bags.push_back(
        sample_bag(cfg, label, derive_seed(seed, "test-bag", {i}), bag_id("test", i)));
    ex.test.bags.push_back(ex.test_bags.back().bag);
  }
  return ex;
}

}  // namespace midiv

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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core.hpp"
#include "density.hpp"
#include "divergence.hpp"
#include "rng.hpp"
#include "roc.hpp"
#include "simulate.hpp"

namespace midiv {

enum class Estimator { kKdeEpanechnikov, kKdeGaussian, kGmmAic };

// Every method produces a score where lower means more POS-like.
enum class Method { kRdKl, kRdBh, kCkl, kBag2BagKl, kBag2BagBh, kSvmOnDivs };

const char* estimator_name(Estimator e);
const char* method_name(Method m);
std::optional<Estimator> parse_estimator(std::string_view name);
std::optional<Method> parse_method(std::string_view name);

struct ThresholdPolicy {
  enum class Kind { kNone, kLoocv, kFixed };
  Kind kind = Kind::kNone;
  double value = 0.0;

  static ThresholdPolicy none() { return {}; }
  static ThresholdPolicy loocv() { return {Kind::kLoocv, 0.0}; }
  static ThresholdPolicy fixed(double t) { return {Kind::kFixed, t}; }
};

// Accepts "loocv", "none" or "fixed:<t>".
std::optional<ThresholdPolicy> parse_threshold_policy(std::string_view text);

struct SvmConfig {
  double lambda = 1e-3;
  std::size_t epochs = 200;
};

struct PipelineConfig {
  Method method = Method::kCkl;
  Estimator estimator = Estimator::kKdeEpanechnikov;
  DivergenceSpec spec;
  ThresholdPolicy threshold = ThresholdPolicy::none();
  // Divergence feeding the SVM: kRdKl, kRdBh or kCkl.
  Method svm_feature = Method::kRdKl;
  SvmConfig svm;
  std::size_t gmm_max_components = 4;
  GmmOptions gmm;
  // Fixed KDE bandwidth; the rule of thumb is used when absent.
  std::optional<double> bandwidth;
  // Project onto this many principal components (fitted on training bags).
  std::optional<std::size_t> pca_components;

  void validate() const;
};

// Called with the data every class-level fit is about to see.
using FitObserver = std::function<void(std::string_view stage, const Dataset& fitted_on)>;

struct ClassDensities {
  std::vector<DensityModel> pos;
  std::vector<DensityModel> neg;
};

struct LinearSvm {
  std::vector<double> weights;
  double bias = 0.0;
  // Features are standardised with these before the dot product.
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;

  double margin(std::span<const double> features) const;
};

struct TrainBagDensity {
  std::string id;
  Label label = Label::kNeg;
  std::vector<DensityModel> densities;
};

struct ClassModel {
  PipelineConfig config;
  std::size_t dimension = 0;
  ClassDensities densities;
  double threshold = 0.0;
  bool has_threshold = false;
  LinearSvm svm;
  std::vector<TrainBagDensity> train_bags;
  std::optional<PcaTransform> pca;
};

DensityModel fit_density(std::span<const double> samples, const PipelineConfig& config,
                         Seed seed);

// One model per dimension per class, fitted to instances pooled by label.
ClassDensities fit_class_densities(const Dataset& train, const PipelineConfig& config,
                                   Seed seed, const FitObserver& observer = {});

// Per-dimension bag densities.
std::vector<DensityModel> fit_bag_densities(const Bag& bag, const PipelineConfig& config,
                                            Seed seed);

// KL and BH against both classes plus cKL, all on one set of evaluation
// points per dimension, summed over dimensions.
struct BagDivergences {
  double kl_pos = 0.0;
  double kl_neg = 0.0;
  double bh_pos = 0.0;
  double bh_neg = 0.0;
  double ckl = 0.0;
  double clipped_fraction = 0.0;

  double score(Method m) const;
};

BagDivergences bag_divergences(const ClassDensities& classes,
                               std::span<const DensityModel> bag_densities,
                               const DivergenceSpec& spec, Seed seed);

// Per-dimension feature vector for the SVM path.
std::vector<double> divergence_features(const ClassDensities& classes,
                                        std::span<const DensityModel> bag_densities,
                                        Method feature, const DivergenceSpec& spec, Seed seed);

// Fits everything the method needs. Threshold methods also get a threshold
// when config.threshold asks for one.
ClassModel fit_pipeline(const Dataset& train, const PipelineConfig& config, Seed seed,
                        const FitObserver& observer = {});

double score_bag(const ClassModel& model, const Bag& bag, Seed seed);

// Seed used for the i-th bag of a scored dataset.
Seed bag_score_seed(Seed seed, std::size_t i);
std::vector<double> score_dataset(const ClassModel& model, const Dataset& data, Seed seed);

LinearSvm train_linear_svm(const std::vector<std::vector<double>>& features,
                           std::span<const Label> labels, const SvmConfig& config, Seed seed);

ClassModel fit_svm_on_divergences(const Dataset& train, Method feature,
                                  const PipelineConfig& config, Seed seed,
                                  const FitObserver& observer = {});

// POS iff score < threshold.
Label predict(double score, double threshold);

// LOOCV candidates are midpoints of sorted unique scores; the one with the
// best accuracy wins, ties going to the candidate nearest the median one.
double choose_threshold(std::span<const double> scores, std::span<const Label> labels,
                        const ThresholdPolicy& policy);

struct EvalReport {
  std::vector<std::string> bag_ids;
  std::vector<double> scores;
  std::vector<Label> labels;
  std::vector<Label> predictions;
  double auc = 0.0;
  double accuracy = 0.0;
  double accuracy_sd = 0.0;
  std::vector<double> fold_accuracies;
  std::optional<double> per_fold_mean_auc;
  std::vector<RocPoint> roc;
  // folds[r][i]: fold of bag i in repeat r.
  std::vector<std::vector<std::size_t>> folds;
  double threshold = 0.0;
  Seed seed = 0;
};

EvalReport evaluate(const Dataset& train, const Dataset& test, const PipelineConfig& config,
                    Seed seed);

struct CvOptions {
  std::size_t k_folds = 10;
  std::size_t repeats = 1;
  bool per_fold_auc = false;
  FitObserver observer;
};

EvalReport cross_validate(const Dataset& data, const PipelineConfig& config,
                          const CvOptions& options, Seed seed);

// Stratified by label, bags never split. assignment[i] is bag i's fold.
std::vector<std::size_t> stratified_folds(const Dataset& data, std::size_t k, Seed seed);

struct GridCell {
  std::size_t pos = 0;
  std::size_t neg = 0;
};

std::vector<GridCell> table1_grid();

struct StudyCell {
  GridCell cell;
  // Indexed like StudyRequest::methods.
  std::vector<double> mean_auc;
  std::vector<double> sd_auc;
  std::vector<std::vector<double>> rep_auc;
};

struct StudyRequest {
  SimConfig sim;
  std::vector<GridCell> grid = table1_grid();
  std::size_t repetitions = 50;
  std::size_t n_test = 100;
  std::vector<Method> methods = {Method::kRdBh, Method::kRdKl, Method::kCkl};
  PipelineConfig pipeline;
  // 0 means MIDIV_THREADS or the hardware concurrency.
  std::size_t threads = 0;
};

std::vector<StudyCell> run_sim_study(const StudyRequest& request, Seed seed);

// Seed of one repetition. Its test-set AUCs equal those of
// evaluate(train, test, pipeline, seed) on sample_experiment(sim, pos, neg,
// n_test, derive_seed(seed, "experiment")).
Seed study_rep_seed(Seed seed, const GridCell& cell, std::size_t rep);

// Worker count from MIDIV_THREADS, falling back to the hardware.
std::size_t default_thread_count();

// Published Table 1 AUC x 100 for (rBH, rKL, cKL); reference data only.
std::optional<std::array<int, 3>> paper_table1(Scenario s, std::size_t pos, std::size_t neg);

}  // namespace midiv

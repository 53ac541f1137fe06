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

#include "classify.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "error.hpp"

namespace midiv {

const char* estimator_name(Estimator e) {
  switch (e) {
    case Estimator::kKdeEpanechnikov: return "kde-epan";
    case Estimator::kKdeGaussian: return "kde-gauss";
    case Estimator::kGmmAic: return "gmm-aic";
  }
  return "unknown";
}

const char* method_name(Method m) {
  switch (m) {
    case Method::kRdKl: return "rd-kl";
    case Method::kRdBh: return "rd-bh";
    case Method::kCkl: return "ckl";
    case Method::kBag2BagKl: return "b2b-kl";
    case Method::kBag2BagBh: return "b2b-bh";
    case Method::kSvmOnDivs: return "svm-divs";
  }
  return "unknown";
}

std::optional<Estimator> parse_estimator(std::string_view name) {
  for (Estimator e : {Estimator::kKdeEpanechnikov, Estimator::kKdeGaussian, Estimator::kGmmAic})
    if (name == estimator_name(e)) return e;
  return std::nullopt;
}

std::optional<Method> parse_method(std::string_view name) {
  for (Method m : {Method::kRdKl, Method::kRdBh, Method::kCkl, Method::kBag2BagKl,
                   Method::kBag2BagBh, Method::kSvmOnDivs})
    if (name == method_name(m)) return m;
  return std::nullopt;
}

std::optional<ThresholdPolicy> parse_threshold_policy(std::string_view text) {
  if (text == "loocv") return ThresholdPolicy::loocv();
  if (text == "none") return ThresholdPolicy::none();
  constexpr std::string_view kFixed = "fixed:";
  if (text.substr(0, kFixed.size()) != kFixed) return std::nullopt;
  const std::string_view number = text.substr(kFixed.size());
  double t = 0.0;
  const auto [end, ec] = std::from_chars(number.data(), number.data() + number.size(), t);
  if (ec != std::errc() || end != number.data() + number.size() || !std::isfinite(t))
    return std::nullopt;
  return ThresholdPolicy::fixed(t);
}

namespace {

bool is_threshold_method(Method m) {
  return m == Method::kRdKl || m == Method::kRdBh || m == Method::kCkl;
}

bool is_bag_to_bag(Method m) { return m == Method::kBag2BagKl || m == Method::kBag2BagBh; }

Kernel kernel_of(Estimator e) {
  return e == Estimator::kKdeGaussian ? Kernel::kGaussian : Kernel::kEpanechnikov;
}

// Re-throws a module error with context prepended, keeping its code.
[[noreturn]] void rethrow_with(const std::string& context, const Error& e) {
  throw Error(e.code(), context + ": " + e.what());
}

void require_both_classes(const Dataset& data, const std::string& what) {
  if (data.count(Label::kPos) == 0)
    fail(ErrorCode::kInvalidArgument, what + " has no POS bags");
  if (data.count(Label::kNeg) == 0)
    fail(ErrorCode::kInvalidArgument, what + " has no NEG bags");
}

double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_sd(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

}  // namespace

void PipelineConfig::validate() const {
  spec.validate();
  require(svm_feature == Method::kRdKl || svm_feature == Method::kRdBh ||
              svm_feature == Method::kCkl,
          "svm_feature must be rd-kl, rd-bh or ckl");
  require(svm.lambda > 0.0 && std::isfinite(svm.lambda), "svm lambda must be positive");
  require(svm.epochs >= 1, "svm epochs must be >= 1");
  require(gmm_max_components >= 1, "gmm_max_components must be >= 1");
  if (bandwidth) require(*bandwidth > 0.0 && std::isfinite(*bandwidth), "bandwidth must be positive");
  if (pca_components) require(*pca_components >= 1, "pca_components must be >= 1");
}

DensityModel fit_density(std::span<const double> samples, const PipelineConfig& config,
                         Seed seed) {
  if (config.estimator != Estimator::kGmmAic)
    return fit_kde(samples, kernel_of(config.estimator), config.bandwidth);
  // Each k needs at least three points per component.
  const std::size_t k_max = std::min(config.gmm_max_components, samples.size() / 3);
  if (k_max == 0)
    fail(ErrorCode::kInvalidArgument,
         "GMM needs at least 3 samples, got " + std::to_string(samples.size()));
  return select_gmm(samples, k_max, seed, config.gmm).model;
}

ClassDensities fit_class_densities(const Dataset& train, const PipelineConfig& config,
                                   Seed seed, const FitObserver& observer) {
  train.validate();
  require_both_classes(train, "training set");
  if (observer) observer("density", train);
  ClassDensities out;
  for (std::size_t j = 0; j < train.dimension; ++j) {
    for (Label label : {Label::kPos, Label::kNeg}) {
      const std::vector<double> pooled = train.pooled_column(j, label);
      try {
        DensityModel m = fit_density(
            pooled, config, derive_seed(seed, "class-density", {static_cast<std::uint64_t>(label), j}));
        (label == Label::kPos ? out.pos : out.neg).push_back(std::move(m));
      } catch (const Error& e) {
        rethrow_with(std::string(label_name(label)) + " class density, dimension " +
                         std::to_string(j),
                     e);
      }
    }
  }
  return out;
}

std::vector<DensityModel> fit_bag_densities(const Bag& bag, const PipelineConfig& config,
                                            Seed seed) {
  std::vector<DensityModel> out;
  out.reserve(bag.dimension());
  try {
    for (std::size_t j = 0; j < bag.dimension(); ++j)
      out.push_back(fit_density(bag.column(j), config, derive_seed(seed, "bag-density", {j})));
  } catch (const Error& e) {
    rethrow_with("bag '" + bag.id() + "'", e);
  }
  return out;
}

double BagDivergences::score(Method m) const {
  switch (m) {
    case Method::kRdKl: return kl_pos / std::max(kl_neg, kRatioDenominatorFloor);
    case Method::kRdBh: return bh_pos / std::max(bh_neg, kRatioDenominatorFloor);
    case Method::kCkl: return ckl;
    default: break;
  }
  fail(ErrorCode::kInvalidArgument, std::string("no bag-to-class score for ") + method_name(m));
}

BagDivergences bag_divergences(const ClassDensities& classes,
                               std::span<const DensityModel> bag_densities,
                               const DivergenceSpec& spec, Seed seed) {
  if (bag_densities.size() != classes.pos.size() || classes.pos.size() != classes.neg.size())
    fail(ErrorCode::kDimensionMismatch, "bag and class densities differ in dimension");
  BagDivergences d;
  // Independent dimensions: the joint KL and BH are sums of the marginal ones.
  for (std::size_t j = 0; j < bag_densities.size(); ++j) {
    const DensityModel* refs[] = {&classes.pos[j], &classes.neg[j]};
    DivergenceEvaluator ev(bag_densities[j], refs, spec, derive_seed(seed, "divergence", {j}));
    const auto vp = ev.values(classes.pos[j]);
    const auto vn = ev.values(classes.neg[j]);
    const DivergenceScore scores[] = {ev.kl(vp), ev.kl(vn), ev.bhattacharyya(vp),
                                      ev.bhattacharyya(vn), ev.ckl(vp, vn)};
    d.kl_pos += scores[0].value;
    d.kl_neg += scores[1].value;
    d.bh_pos += scores[2].value;
    d.bh_neg += scores[3].value;
    d.ckl += scores[4].value;
    for (const auto& s : scores) d.clipped_fraction += s.clipped_fraction;
  }
  if (!bag_densities.empty())
    d.clipped_fraction /= 5.0 * static_cast<double>(bag_densities.size());
  return d;
}

std::vector<double> divergence_features(const ClassDensities& classes,
                                        std::span<const DensityModel> bag_densities,
                                        Method feature, const DivergenceSpec& spec, Seed seed) {
  std::vector<double> out;
  out.reserve(bag_densities.size());
  for (std::size_t j = 0; j < bag_densities.size(); ++j) {
    ClassDensities one{{classes.pos.at(j)}, {classes.neg.at(j)}};
    out.push_back(bag_divergences(one, bag_densities.subspan(j, 1), spec,
                                  derive_seed(seed, "feature", {j}))
                      .score(feature));
  }
  return out;
}

double LinearSvm::margin(std::span<const double> features) const {
  require(features.size() == weights.size(), "SVM feature length mismatch");
  double m = bias;
  for (std::size_t i = 0; i < features.size(); ++i)
    m += weights[i] * (features[i] - feature_mean[i]) / feature_scale[i];
  return m;
}

LinearSvm train_linear_svm(const std::vector<std::vector<double>>& features,
                           std::span<const Label> labels, const SvmConfig& config, Seed seed) {
  require(!features.empty() && features.size() == labels.size(),
          "SVM needs one label per feature vector");
  require(config.lambda > 0.0 && config.epochs >= 1, "invalid SVM configuration");
  const std::size_t n = features.size();
  const std::size_t p = features.front().size();
  LinearSvm svm;
  svm.feature_mean.assign(p, 0.0);
  svm.feature_scale.assign(p, 1.0);
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) {
      require(features[i].size() == p, "SVM feature vectors differ in length");
      require(std::isfinite(features[i][j]), "SVM features must be finite");
      col[i] = features[i][j];
    }
    svm.feature_mean[j] = mean_of(col);
    double var = 0.0;
    for (double x : col) var += (x - svm.feature_mean[j]) * (x - svm.feature_mean[j]);
    const double sd = std::sqrt(var / static_cast<double>(n));
    if (sd > 0.0) svm.feature_scale[j] = sd;
  }

  // Pegasos on standardised features with a constant feature standing in for
  // the bias, so the bias is regularised along with the weights.
  std::vector<std::vector<double>> x(n, std::vector<double>(p + 1, 1.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j)
      x[i][j] = (features[i][j] - svm.feature_mean[j]) / svm.feature_scale[j];

  std::vector<double> w(p + 1, 0.0);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(derive_seed(seed, "svm-shuffle"));
  const double radius = 1.0 / std::sqrt(config.lambda);
  std::size_t t = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      ++t;
      const double eta = 1.0 / (config.lambda * static_cast<double>(t));
      const double y = labels[i] == Label::kPos ? 1.0 : -1.0;
      const double m = y * std::inner_product(w.begin(), w.end(), x[i].begin(), 0.0);
      const double shrink = 1.0 - eta * config.lambda;
      for (double& wj : w) wj *= shrink;
      if (m < 1.0)
        for (std::size_t j = 0; j <= p; ++j) w[j] += eta * y * x[i][j];
      const double norm = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
      if (norm > radius)
        for (double& wj : w) wj *= radius / norm;
    }
  }
  svm.weights.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(p));
  svm.bias = w[p];
  return svm;
}

namespace {

// Features for training bags use class densities that include the bag
// itself, so one density fit per class serves the whole training set.
LinearSvm fit_svm(const Dataset& train, const ClassDensities& classes,
                  const PipelineConfig& config, Seed seed) {
  std::vector<std::vector<double>> features;
  std::vector<Label> labels;
  for (std::size_t i = 0; i < train.bags.size(); ++i) {
    const Bag& bag = train.bags[i];
    const Seed s = bag_score_seed(derive_seed(seed, "svm-features"), i);
    const auto densities = fit_bag_densities(bag, config, s);
    features.push_back(divergence_features(classes, densities, config.svm_feature, config.spec, s));
    labels.push_back(*bag.label());
  }
  return train_linear_svm(features, labels, config.svm, derive_seed(seed, "svm-train"));
}

double bag_to_bag_score(const ClassModel& model, std::span<const DensityModel> bag_densities,
                        Seed seed) {
  const Measure measure =
      model.config.method == Method::kBag2BagKl ? Measure::kKl : Measure::kBh;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> total(model.train_bags.size(), 0.0);
  for (std::size_t j = 0; j < bag_densities.size(); ++j) {
    std::vector<const DensityModel*> refs;
    for (const auto& tb : model.train_bags) refs.push_back(&tb.densities[j]);
    DivergenceEvaluator ev(bag_densities[j], refs, model.config.spec,
                           derive_seed(seed, "b2b", {j}));
    for (std::size_t t = 0; t < refs.size(); ++t)
      total[t] += ev.divergence(measure, ev.values(*refs[t])).value;
  }
  double best_pos = inf;
  double best_neg = inf;
  for (std::size_t t = 0; t < total.size(); ++t) {
    double& best = model.train_bags[t].label == Label::kPos ? best_pos : best_neg;
    best = std::min(best, total[t]);
  }
  return best_pos - best_neg;
}

double score_projected(const ClassModel& model, const Bag& bag, Seed seed) {
  const auto densities = fit_bag_densities(bag, model.config, seed);
  const Method m = model.config.method;
  if (is_threshold_method(m))
    return bag_divergences(model.densities, densities, model.config.spec, seed).score(m);
  if (is_bag_to_bag(m)) return bag_to_bag_score(model, densities, seed);
  const auto f = divergence_features(model.densities, densities, model.config.svm_feature,
                                     model.config.spec, seed);
  return -model.svm.margin(f);
}

// Training scores with each bag left out of its class pool. A bag that is
// the only one of its class is scored against the full model instead.
std::vector<double> leave_one_bag_out_scores(const Dataset& train, const ClassModel& full,
                                             Seed seed) {
  std::vector<double> scores(train.bags.size());
  for (std::size_t i = 0; i < train.bags.size(); ++i) {
    const Bag& held = train.bags[i];
    const Seed s = bag_score_seed(seed, i);
    if (train.count(*held.label()) < 2) {
      scores[i] = score_projected(full, held, s);
      continue;
    }
    ClassModel reduced = full;
    Dataset rest{train.name, train.dimension, {}};
    for (std::size_t k = 0; k < train.bags.size(); ++k)
      if (k != i) rest.bags.push_back(train.bags[k]);
    if (is_bag_to_bag(full.config.method)) {
      reduced.train_bags.erase(reduced.train_bags.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      reduced.densities =
          fit_class_densities(rest, full.config, derive_seed(seed, "loo-density", {i}));
    }
    scores[i] = score_projected(reduced, held, s);
  }
  return scores;
}

}  // namespace

ClassModel fit_pipeline(const Dataset& train_in, const PipelineConfig& config, Seed seed,
                        const FitObserver& observer) {
  config.validate();
  train_in.validate();
  require_both_classes(train_in, "training set");
  for (const auto& b : train_in.bags)
    if (!b.label()) fail(ErrorCode::kInvalidArgument, "training bag '" + b.id() + "' has no label");

  ClassModel model;
  model.config = config;
  const Dataset* train = &train_in;
  Dataset projected;
  if (config.pca_components) {
    if (observer) observer("pca", train_in);
    model.pca = fit_pca(train_in, *config.pca_components);
    projected = apply_pca(*model.pca, train_in);
    train = &projected;
  }
  model.dimension = train->dimension;
  model.densities = fit_class_densities(*train, config, derive_seed(seed, "class"), observer);

  if (is_bag_to_bag(config.method)) {
    for (std::size_t i = 0; i < train->bags.size(); ++i) {
      const Bag& b = train->bags[i];
      model.train_bags.push_back(
          {b.id(), *b.label(), fit_bag_densities(b, config, derive_seed(seed, "train-bag", {i}))});
    }
  }
  if (config.method == Method::kSvmOnDivs) {
    model.svm = fit_svm(*train, model.densities, config, seed);
    // The sign of the margin decides.
    model.threshold = 0.0;
    model.has_threshold = true;
    return model;
  }

  switch (config.threshold.kind) {
    case ThresholdPolicy::Kind::kNone:
      // Nearest-bag rule: POS when the closest POS bag beats the closest NEG bag.
      if (is_bag_to_bag(config.method)) {
        model.threshold = 0.0;
        model.has_threshold = true;
      }
      break;
    case ThresholdPolicy::Kind::kFixed:
      model.threshold = config.threshold.value;
      model.has_threshold = true;
      break;
    case ThresholdPolicy::Kind::kLoocv: {
      const auto scores = leave_one_bag_out_scores(*train, model, derive_seed(seed, "loocv"));
      std::vector<Label> labels;
      for (const auto& b : train->bags) labels.push_back(*b.label());
      model.threshold = choose_threshold(scores, labels, config.threshold);
      model.has_threshold = true;
      break;
    }
  }
  return model;
}

ClassModel fit_svm_on_divergences(const Dataset& train, Method feature,
                                  const PipelineConfig& config, Seed seed,
                                  const FitObserver& observer) {
  PipelineConfig c = config;
  c.method = Method::kSvmOnDivs;
  c.svm_feature = feature;
  return fit_pipeline(train, c, seed, observer);
}

double score_bag(const ClassModel& model, const Bag& bag, Seed seed) {
  if (model.pca) {
    if (bag.dimension() != model.pca->input_dimension())
      fail(ErrorCode::kDimensionMismatch,
           "bag '" + bag.id() + "' has dimension " + std::to_string(bag.dimension()) +
               ", model expects " + std::to_string(model.pca->input_dimension()));
    Dataset one{"", bag.dimension(), {bag}};
    return score_projected(model, apply_pca(*model.pca, one).bags.front(), seed);
  }
  if (bag.dimension() != model.dimension)
    fail(ErrorCode::kDimensionMismatch,
         "bag '" + bag.id() + "' has dimension " + std::to_string(bag.dimension()) +
             ", model expects " + std::to_string(model.dimension));
  return score_projected(model, bag, seed);
}

Seed bag_score_seed(Seed seed, std::size_t i) { return derive_seed(seed, "bag", {i}); }

std::vector<double> score_dataset(const ClassModel& model, const Dataset& data, Seed seed) {
  std::vector<double> scores(data.bags.size());
  for (std::size_t i = 0; i < data.bags.size(); ++i)
    scores[i] = score_bag(model, data.bags[i], bag_score_seed(seed, i));
  return scores;
}

Label predict(double score, double threshold) {
  return score < threshold ? Label::kPos : Label::kNeg;
}

double choose_threshold(std::span<const double> scores, std::span<const Label> labels,
                        const ThresholdPolicy& policy) {
  switch (policy.kind) {
    case ThresholdPolicy::Kind::kFixed: return policy.value;
    case ThresholdPolicy::Kind::kNone:
      fail(ErrorCode::kInvalidArgument, "no threshold policy given");
    case ThresholdPolicy::Kind::kLoocv: break;
  }
  require(scores.size() == labels.size(), "scores and labels differ in length");
  require(scores.size() >= 2, "threshold selection needs at least 2 bags");
  std::vector<double> unique(scores.begin(), scores.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  if (unique.size() == 1) return unique.front();

  std::vector<double> candidates(unique.size() - 1);
  for (std::size_t i = 0; i + 1 < unique.size(); ++i)
    candidates[i] = unique[i] + 0.5 * (unique[i + 1] - unique[i]);

  std::vector<std::size_t> correct(candidates.size(), 0);
  for (std::size_t c = 0; c < candidates.size(); ++c)
    for (std::size_t i = 0; i < scores.size(); ++i)
      correct[c] += predict(scores[i], candidates[c]) == labels[i] ? 1 : 0;
  const std::size_t best = *std::max_element(correct.begin(), correct.end());

  const double median = 0.5 * static_cast<double>(candidates.size() - 1);
  std::size_t pick = 0;
  double pick_distance = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (correct[c] != best) continue;
    const double d = std::abs(static_cast<double>(c) - median);
    if (d < pick_distance) {
      pick = c;
      pick_distance = d;
    }
  }
  return candidates[pick];
}

namespace {

void finish_report(EvalReport& r) {
  r.auc = auc(r.scores, r.labels);
  r.roc = roc_curve(r.scores, r.labels);
}

std::vector<Label> require_labels(const Dataset& data, const std::string& what) {
  std::vector<Label> labels;
  for (const auto& b : data.bags) {
    if (!b.label()) fail(ErrorCode::kInvalidArgument, what + " bag '" + b.id() + "' has no label");
    labels.push_back(*b.label());
  }
  return labels;
}

}  // namespace

EvalReport evaluate(const Dataset& train, const Dataset& test, const PipelineConfig& config,
                    Seed seed) {
  EvalReport r;
  r.seed = seed;
  r.labels = require_labels(test, "test");
  const ClassModel model = fit_pipeline(train, config, derive_seed(seed, "fit"));
  r.scores = score_dataset(model, test, derive_seed(seed, "score"));
  for (const auto& b : test.bags) r.bag_ids.push_back(b.id());
  if (model.has_threshold) {
    r.threshold = model.threshold;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < r.scores.size(); ++i) {
      r.predictions.push_back(predict(r.scores[i], model.threshold));
      hits += r.predictions.back() == r.labels[i] ? 1 : 0;
    }
    r.accuracy = static_cast<double>(hits) / static_cast<double>(r.scores.size());
    r.fold_accuracies = {r.accuracy};
  }
  finish_report(r);
  return r;
}

std::vector<std::size_t> stratified_folds(const Dataset& data, std::size_t k, Seed seed) {
  require(k >= 2, "need at least 2 folds");
  require(k <= data.bags.size(), "more folds than bags");
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t i = 0; i < data.bags.size(); ++i) {
    const auto& label = data.bags[i].label();
    if (!label) fail(ErrorCode::kInvalidArgument, "bag '" + data.bags[i].id() + "' has no label");
    (*label == Label::kPos ? pos : neg).push_back(i);
  }
  Rng rng = make_rng(seed);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  // Dealing POS then NEG round-robin keeps each fold's class mix within one
  // bag of the overall proportion.
  std::vector<std::size_t> assignment(data.bags.size());
  std::size_t next = 0;
  for (const auto* group : {&pos, &neg})
    for (std::size_t i : *group) assignment[i] = next++ % k;
  return assignment;
}

EvalReport cross_validate(const Dataset& data, const PipelineConfig& config_in,
                          const CvOptions& options, Seed seed) {
  require(options.repeats >= 1, "repeats must be >= 1");
  data.validate();
  EvalReport r;
  r.seed = seed;
  const auto all_labels = require_labels(data, "dataset");
  PipelineConfig config = config_in;
  // Fold accuracy needs a decision rule, so threshold methods default to LOOCV.
  if (is_threshold_method(config.method) && config.threshold.kind == ThresholdPolicy::Kind::kNone)
    config.threshold = ThresholdPolicy::loocv();

  std::vector<double> fold_aucs;
  for (std::size_t rep = 0; rep < options.repeats; ++rep) {
    const auto folds =
        stratified_folds(data, options.k_folds, derive_seed(seed, "folds", {rep}));
    r.folds.push_back(folds);
    for (std::size_t f = 0; f < options.k_folds; ++f) {
      Dataset train{data.name, data.dimension, {}};
      Dataset test{data.name, data.dimension, {}};
      for (std::size_t i = 0; i < data.bags.size(); ++i)
        (folds[i] == f ? test : train).bags.push_back(data.bags[i]);
      const std::string where =
          "fold " + std::to_string(f) + " of repeat " + std::to_string(rep);
      for (Label l : {Label::kPos, Label::kNeg})
        if (train.count(l) == 0)
          fail(ErrorCode::kInvalidArgument,
               where + ": training part has no " + label_name(l) + " bags");

      const ClassModel model =
          fit_pipeline(train, config, derive_seed(seed, "cv-fit", {rep, f}), options.observer);
      const auto scores = score_dataset(model, test, derive_seed(seed, "cv-score", {rep, f}));
      std::size_t hits = 0;
      std::vector<Label> test_labels;
      for (std::size_t i = 0; i < scores.size(); ++i) {
        const Label truth = *test.bags[i].label();
        const Label guess = predict(scores[i], model.threshold);
        hits += guess == truth ? 1 : 0;
        r.bag_ids.push_back(test.bags[i].id());
        r.scores.push_back(scores[i]);
        r.labels.push_back(truth);
        r.predictions.push_back(guess);
        test_labels.push_back(truth);
      }
      r.fold_accuracies.push_back(static_cast<double>(hits) / static_cast<double>(scores.size()));
      const bool both = std::count(test_labels.begin(), test_labels.end(), Label::kPos) > 0 &&
                        std::count(test_labels.begin(), test_labels.end(), Label::kNeg) > 0;
      if (options.per_fold_auc && both) fold_aucs.push_back(auc(scores, test_labels));
    }
  }
  r.accuracy = mean_of(r.fold_accuracies);
  r.accuracy_sd = sample_sd(r.fold_accuracies);
  if (options.per_fold_auc) {
    if (fold_aucs.empty())
      fail(ErrorCode::kInvalidArgument, "no test fold holds both classes; per-fold AUC undefined");
    r.per_fold_mean_auc = mean_of(fold_aucs);
  }
  finish_report(r);
  return r;
}

std::vector<GridCell> table1_grid() {
  std::vector<GridCell> grid;
  for (std::size_t pos : {1, 5, 10})
    for (std::size_t neg : {5, 10, 25}) grid.push_back({pos, neg});
  return grid;
}

std::size_t default_thread_count() {
  if (const char* env = std::getenv("MIDIV_THREADS")) {
    std::size_t n = 0;
    const std::string_view s(env);
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec == std::errc() && end == s.data() + s.size() && n >= 1) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

// AUC of every requested method on one simulated train/test draw. Scores
// match evaluate(train, test, config, rep_seed) method by method.
std::vector<double> study_repetition(const StudyRequest& req, const GridCell& cell,
                                     Seed rep_seed) {
  const Experiment ex = sample_experiment(req.sim, cell.pos, cell.neg, req.n_test,
                                          derive_seed(rep_seed, "experiment"));
  std::vector<Label> labels;
  for (const auto& b : ex.test.bags) labels.push_back(*b.label());
  const Seed fit_seed = derive_seed(rep_seed, "fit");
  const Seed score_seed = derive_seed(rep_seed, "score");

  std::vector<double> out(req.methods.size());
  const bool any_bag_to_class =
      std::any_of(req.methods.begin(), req.methods.end(), is_threshold_method);
  std::vector<BagDivergences> shared;
  if (any_bag_to_class) {
    PipelineConfig c = req.pipeline;
    c.method = Method::kCkl;
    c.threshold = ThresholdPolicy::none();
    const ClassModel model = fit_pipeline(ex.train, c, fit_seed);
    for (std::size_t i = 0; i < ex.test.bags.size(); ++i) {
      const Seed s = bag_score_seed(score_seed, i);
      const auto densities = fit_bag_densities(ex.test.bags[i], c, s);
      shared.push_back(bag_divergences(model.densities, densities, c.spec, s));
    }
  }
  for (std::size_t m = 0; m < req.methods.size(); ++m) {
    const Method method = req.methods[m];
    std::vector<double> scores;
    if (is_threshold_method(method)) {
      for (const auto& d : shared) scores.push_back(d.score(method));
    } else {
      PipelineConfig c = req.pipeline;
      c.method = method;
      c.threshold = ThresholdPolicy::none();
      scores = score_dataset(fit_pipeline(ex.train, c, fit_seed), ex.test, score_seed);
    }
    out[m] = auc(scores, labels);
  }
  return out;
}

}  // namespace

Seed study_rep_seed(Seed seed, const GridCell& cell, std::size_t rep) {
  return derive_seed(seed, "study", {cell.pos, cell.neg, rep});
}

std::vector<StudyCell> run_sim_study(const StudyRequest& req, Seed seed) {
  req.sim.validate();
  req.pipeline.validate();
  require(req.repetitions >= 1, "repetitions must be >= 1");
  require(req.n_test >= 2, "need at least 2 test bags");
  require(!req.methods.empty(), "no methods requested");
  for (const auto& c : req.grid) require(c.pos >= 1 && c.neg >= 1, "grid counts must be >= 1");

  const std::size_t tasks = req.grid.size() * req.repetitions;
  std::vector<std::vector<double>> results(tasks);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks) return;
      {
        std::lock_guard lock(error_mutex);
        if (error) return;
      }
      const GridCell& cell = req.grid[t / req.repetitions];
      try {
        results[t] = study_repetition(req, cell, study_rep_seed(seed, cell, t % req.repetitions));
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const std::size_t n_threads =
      std::min(tasks, req.threads ? req.threads : default_thread_count());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);

  // Reduction in cell order, so the thread count never changes the output.
  std::vector<StudyCell> cells;
  for (std::size_t c = 0; c < req.grid.size(); ++c) {
    StudyCell sc;
    sc.cell = req.grid[c];
    sc.rep_auc.assign(req.methods.size(), {});
    for (std::size_t rep = 0; rep < req.repetitions; ++rep)
      for (std::size_t m = 0; m < req.methods.size(); ++m)
        sc.rep_auc[m].push_back(results[c * req.repetitions + rep][m]);
    for (const auto& v : sc.rep_auc) {
      sc.mean_auc.push_back(mean_of(v));
      sc.sd_auc.push_back(sample_sd(v));
    }
    cells.push_back(std::move(sc));
  }
  return cells;
}

std::optional<std::array<int, 3>> paper_table1(Scenario s, std::size_t pos, std::size_t neg) {
  // [scenario][pos 1,5,10][neg 5,10,25] -> (rBH, rKL, cKL), AUC x 100.
  static constexpr int kTable[6][3][3][3] = {
      {{{61, 69, 85}, {62, 72, 89}, {61, 73, 92}},
       {{63, 75, 86}, {64, 82, 94}, {68, 84, 97}},
       {{69, 86, 87}, {73, 91, 95}, {75, 91, 98}}},
      {{{57, 61, 75}, {59, 61, 78}, {58, 55, 75}},
       {{59, 67, 79}, {60, 68, 84}, {62, 63, 85}},
       {{64, 77, 80}, {66, 78, 86}, {68, 72, 86}}},
      {{{51, 55, 71}, {52, 58, 73}, {50, 57, 74}},
       {{53, 61, 76}, {53, 66, 81}, {52, 65, 83}},
       {{58, 73, 78}, {58, 76, 84}, {57, 76, 87}}},
      {{{55, 61, 70}, {56, 62, 73}, {56, 58, 69}},
       {{56, 63, 75}, {57, 64, 81}, {59, 59, 80}},
       {{60, 74, 77}, {62, 76, 85}, {63, 69, 84}}},
      {{{64, 61, 62}, {67, 63, 66}, {64, 62, 67}},
       {{73, 69, 63}, {74, 70, 67}, {75, 71, 72}},
       {{74, 70, 62}, {75, 73, 69}, {76, 74, 72}}},
      {{{68, 68, 67}, {66, 68, 68}, {68, 71, 68}},
       {{65, 64, 67}, {68, 68, 69}, {70, 71, 74}},
       {{66, 64, 66}, {70, 69, 72}, {72, 73, 74}}},
  };
  const int si = static_cast<int>(s);
  if (si < 0 || si >= 6) return std::nullopt;
  auto index = [](std::size_t v, std::initializer_list<std::size_t> allowed) -> int {
    int i = 0;
    for (std::size_t a : allowed) {
      if (a == v) return i;
      ++i;
    }
    return -1;
  };
  const int pi = index(pos, {1, 5, 10});
  const int ni = index(neg, {5, 10, 25});
  if (pi < 0 || ni < 0) return std::nullopt;
  const auto& row = kTable[si][pi][ni];
  return std::array<int, 3>{row[0], row[1], row[2]};
}

}  // namespace midiv

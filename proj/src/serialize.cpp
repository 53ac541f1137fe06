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

#include "serialize.hpp"

#include <cmath>
#include <string>

#include "error.hpp"

namespace midiv {

namespace {

// nlohmann reports type and key errors as its own exceptions; callers of
// this module only ever see midiv::Error.
template <typename F>
auto parsing(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("invalid ") + what + " JSON: " + e.what());
  }
}

// JSON has no infinity; non-finite values are written as null.
Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json numbers(const std::vector<double>& xs) {
  Json a = Json::array();
  for (double x : xs) a.push_back(number(x));
  return a;
}

const char* label_text(Label l) { return l == Label::kPos ? "POS" : "NEG"; }

Label label_from(const Json& j) {
  const auto s = j.get<std::string>();
  if (s == "POS") return Label::kPos;
  if (s == "NEG") return Label::kNeg;
  fail(ErrorCode::kParse, "unknown label '" + s + "'");
}

const char* kind_text(DensityKind k) {
  switch (k) {
    case DensityKind::kKdeEpanechnikov: return "kde-epan";
    case DensityKind::kKdeGaussian: return "kde-gauss";
    case DensityKind::kGmm: return "gmm";
  }
  return "unknown";
}

Measure measure_from(const std::string& s) {
  for (Measure m : {Measure::kKl, Measure::kBh, Measure::kCkl})
    if (s == measure_name(m)) return m;
  fail(ErrorCode::kParse, "unknown measure '" + s + "'");
}

Method method_from(const std::string& s) {
  if (auto m = parse_method(s)) return *m;
  fail(ErrorCode::kParse, "unknown method '" + s + "'");
}

Json densities_json(const std::vector<DensityModel>& ms) {
  Json a = Json::array();
  for (const auto& m : ms) a.push_back(to_json(m));
  return a;
}

std::vector<DensityModel> densities_from(const Json& a) {
  std::vector<DensityModel> out;
  for (const auto& j : a) out.push_back(density_from_json(j));
  return out;
}

}  // namespace

Json to_json(const DensityModel& m) {
  Json j;
  j["kind"] = kind_text(m.kind());
  if (m.is_kde()) {
    j["bandwidth"] = m.bandwidth();
    j["centers"] = m.centers();
  } else {
    Json comps = Json::array();
    for (const auto& c : m.components())
      comps.push_back({{"weight", c.weight}, {"mean", c.mean}, {"variance", c.variance}});
    j["components"] = comps;
  }
  const Interval s = m.support_hint();
  j["support_hint"] = {s.lo, s.hi};
  return j;
}

DensityModel density_from_json(const Json& j) {
  return parsing("density", [&] {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "kde-epan" || kind == "kde-gauss")
      return DensityModel::kde(j.at("centers").get<std::vector<double>>(),
                               kind == "kde-epan" ? Kernel::kEpanechnikov : Kernel::kGaussian,
                               j.at("bandwidth").get<double>());
    if (kind == "gmm") {
      std::vector<GaussianComponent> comps;
      for (const auto& c : j.at("components"))
        comps.push_back({c.at("weight").get<double>(), c.at("mean").get<double>(),
                         c.at("variance").get<double>()});
      return DensityModel::gmm(std::move(comps));
    }
    fail(ErrorCode::kParse, "unknown density kind '" + kind + "'");
  });
}

Json to_json(const EmFitReport& r) {
  return {{"component_count", r.component_count},
          {"log_likelihood", number(r.log_likelihood)},
          {"aic", number(r.aic)},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"log_likelihood_trace", numbers(r.log_likelihood_trace)}};
}

Json to_json(const DivergenceSpec& s) {
  return {{"measure", measure_name(s.measure)},
          {"integrator", integrator_name(s.integrator)},
          {"n_imp", s.n_imp},
          {"grid_points", s.grid_points},
          {"ratio_clip", s.ratio_clip},
          {"floor", s.floor}};
}

DivergenceSpec divergence_spec_from_json(const Json& j) {
  return parsing("divergence spec", [&] {
    DivergenceSpec s;
    s.measure = measure_from(j.value("measure", std::string("KL")));
    const auto integ = j.value("integrator", std::string("IMPORTANCE"));
    if (integ == "IMPORTANCE") {
      s.integrator = Integrator::kImportance;
    } else if (integ == "RIEMANN") {
      s.integrator = Integrator::kRiemann;
    } else {
      fail(ErrorCode::kParse, "unknown integrator '" + integ + "'");
    }
    s.n_imp = j.value("n_imp", s.n_imp);
    s.grid_points = j.value("grid_points", s.grid_points);
    s.ratio_clip = j.value("ratio_clip", s.ratio_clip);
    s.floor = j.value("floor", s.floor);
    s.validate();
    return s;
  });
}

Json to_json(const DivergenceScore& s) {
  return {{"measure", measure_name(s.measure)},
          {"value", number(s.value)},
          {"clipped_fraction", s.clipped_fraction},
          {"ess", s.ess},
          {"low_ess", s.low_ess}};
}

Json to_json(const SimConfig& c) {
  return {{"scenario", scenario_name(c.scenario)},
          {"family", c.family == BagFamily::kTwoComponent ? "two-component" : "lognormal-vs-mixture"},
          {"n_instances", c.n_instances},
          {"nu_pos", c.nu_pos},
          {"nu_pos_per_experiment", c.nu_pos_per_experiment},
          {"eta_pos", c.eta_pos},
          {"pi_neg", c.pi_neg},
          {"pi_pos", c.pi_pos},
          {"mu_neg_center", c.mu_neg_center},
          {"mu_prior_spread", c.mu_prior_spread},
          {"zeta_neg_center", c.zeta_neg_center},
          {"zeta_spread", c.zeta_spread},
          {"variance_notation",
           c.variance_notation == VarianceNotation::kVariance ? "variance" : "stddev"},
          {"variance_floor", c.variance_floor},
          {"lognormal_mu", c.lognormal_mu},
          {"lognormal_var", c.lognormal_var},
          {"mixture_mu1", c.mixture_mu1},
          {"mixture_mu2", c.mixture_mu2},
          {"mixture_var", c.mixture_var},
          {"mixture_pi1", c.mixture_pi1},
          {"lognormal_mu_hyper_var", c.lognormal_mu_hyper_var},
          {"mixture_mean_hyper_var", c.mixture_mean_hyper_var}};
}

// Missing keys keep the preset's value (or the CUSTOM defaults), so a
// config file only needs the fields it changes.
SimConfig sim_config_from_json(const Json& j) {
  return parsing("simulation config", [&] {
    const auto name = j.value("scenario", std::string("custom"));
    const auto scenario = parse_scenario(name);
    if (!scenario) fail(ErrorCode::kParse, "unknown scenario '" + name + "'");
    SimConfig c = SimConfig::preset(*scenario);
    if (j.contains("family")) {
      const auto f = j["family"].get<std::string>();
      if (f == "two-component") {
        c.family = BagFamily::kTwoComponent;
      } else if (f == "lognormal-vs-mixture") {
        c.family = BagFamily::kLognormalVsMixture;
      } else {
        fail(ErrorCode::kParse, "unknown family '" + f + "'");
      }
    }
    if (j.contains("variance_notation")) {
      const auto v = j["variance_notation"].get<std::string>();
      if (v == "variance") {
        c.variance_notation = VarianceNotation::kVariance;
      } else if (v == "stddev") {
        c.variance_notation = VarianceNotation::kStdDev;
      } else {
        fail(ErrorCode::kParse, "unknown variance_notation '" + v + "'");
      }
    }
    c.n_instances = j.value("n_instances", c.n_instances);
    c.nu_pos = j.value("nu_pos", c.nu_pos);
    c.nu_pos_per_experiment = j.value("nu_pos_per_experiment", c.nu_pos_per_experiment);
    c.eta_pos = j.value("eta_pos", c.eta_pos);
    c.pi_neg = j.value("pi_neg", c.pi_neg);
    c.pi_pos = j.value("pi_pos", c.pi_pos);
    c.mu_neg_center = j.value("mu_neg_center", c.mu_neg_center);
    c.mu_prior_spread = j.value("mu_prior_spread", c.mu_prior_spread);
    c.zeta_neg_center = j.value("zeta_neg_center", c.zeta_neg_center);
    c.zeta_spread = j.value("zeta_spread", c.zeta_spread);
    c.variance_floor = j.value("variance_floor", c.variance_floor);
    c.lognormal_mu = j.value("lognormal_mu", c.lognormal_mu);
    c.lognormal_var = j.value("lognormal_var", c.lognormal_var);
    c.mixture_mu1 = j.value("mixture_mu1", c.mixture_mu1);
    c.mixture_mu2 = j.value("mixture_mu2", c.mixture_mu2);
    c.mixture_var = j.value("mixture_var", c.mixture_var);
    c.mixture_pi1 = j.value("mixture_pi1", c.mixture_pi1);
    c.lognormal_mu_hyper_var = j.value("lognormal_mu_hyper_var", c.lognormal_mu_hyper_var);
    c.mixture_mean_hyper_var = j.value("mixture_mean_hyper_var", c.mixture_mean_hyper_var);
    c.validate();
    return c;
  });
}

Json latents_to_json(const std::vector<GeneratedBag>& bags) {
  Json a = Json::array();
  for (const auto& g : bags) {
    const BagLatent& l = g.latent;
    Json j = {{"id", g.bag.id()},
              {"label", label_text(g.true_label)},
              {"seed", g.seed},
              {"pi", l.pi},
              {"mu_pos", l.mu_pos},
              {"var_pos", l.var_pos},
              {"mu_neg", l.mu_neg},
              {"var_neg", l.var_neg},
              {"tau", l.tau}};
    if (l.lognormal_mu != 0.0 || l.mixture_mu1 != 0.0 || l.mixture_mu2 != 0.0) {
      j["lognormal_mu"] = l.lognormal_mu;
      j["mixture_mu1"] = l.mixture_mu1;
      j["mixture_mu2"] = l.mixture_mu2;
    }
    a.push_back(std::move(j));
  }
  return a;
}

Json to_json(const PipelineConfig& c) {
  Json threshold = {{"kind", "none"}};
  if (c.threshold.kind == ThresholdPolicy::Kind::kLoocv) threshold = {{"kind", "loocv"}};
  if (c.threshold.kind == ThresholdPolicy::Kind::kFixed)
    threshold = {{"kind", "fixed"}, {"value", c.threshold.value}};
  return {{"method", method_name(c.method)},
          {"estimator", estimator_name(c.estimator)},
          {"spec", to_json(c.spec)},
          {"threshold", threshold},
          {"svm_feature", method_name(c.svm_feature)},
          {"svm", {{"lambda", c.svm.lambda}, {"epochs", c.svm.epochs}}},
          {"gmm_max_components", c.gmm_max_components},
          {"gmm",
           {{"restarts", c.gmm.restarts},
            {"max_iterations", c.gmm.max_iterations},
            {"relative_tolerance", c.gmm.relative_tolerance},
            {"variance_floor_factor", c.gmm.variance_floor_factor}}},
          {"bandwidth", c.bandwidth ? Json(*c.bandwidth) : Json(nullptr)},
          {"pca_components", c.pca_components ? Json(*c.pca_components) : Json(nullptr)}};
}

PipelineConfig pipeline_config_from_json(const Json& j) {
  return parsing("pipeline config", [&] {
    PipelineConfig c;
    c.method = method_from(j.at("method").get<std::string>());
    const auto est = j.at("estimator").get<std::string>();
    const auto e = parse_estimator(est);
    if (!e) fail(ErrorCode::kParse, "unknown estimator '" + est + "'");
    c.estimator = *e;
    c.spec = divergence_spec_from_json(j.at("spec"));
    const auto& t = j.at("threshold");
    const auto kind = t.at("kind").get<std::string>();
    if (kind == "loocv") {
      c.threshold = ThresholdPolicy::loocv();
    } else if (kind == "fixed") {
      c.threshold = ThresholdPolicy::fixed(t.at("value").get<double>());
    } else if (kind != "none") {
      fail(ErrorCode::kParse, "unknown threshold kind '" + kind + "'");
    }
    c.svm_feature = method_from(j.at("svm_feature").get<std::string>());
    c.svm.lambda = j.at("svm").at("lambda").get<double>();
    c.svm.epochs = j.at("svm").at("epochs").get<std::size_t>();
    c.gmm_max_components = j.at("gmm_max_components").get<std::size_t>();
    const auto& g = j.at("gmm");
    c.gmm.restarts = g.at("restarts").get<std::size_t>();
    c.gmm.max_iterations = g.at("max_iterations").get<std::size_t>();
    c.gmm.relative_tolerance = g.at("relative_tolerance").get<double>();
    c.gmm.variance_floor_factor = g.at("variance_floor_factor").get<double>();
    if (!j.at("bandwidth").is_null()) c.bandwidth = j["bandwidth"].get<double>();
    if (!j.at("pca_components").is_null())
      c.pca_components = j["pca_components"].get<std::size_t>();
    c.validate();
    return c;
  });
}

Json to_json(const ClassModel& m) {
  Json j = {{"format", "midiv-class-model"},
            {"version", 1},
            {"config", to_json(m.config)},
            {"dimension", m.dimension},
            {"f_pos", densities_json(m.densities.pos)},
            {"f_neg", densities_json(m.densities.neg)},
            {"threshold", m.threshold},
            {"has_threshold", m.has_threshold},
            {"svm",
             {{"weights", m.svm.weights},
              {"bias", m.svm.bias},
              {"feature_mean", m.svm.feature_mean},
              {"feature_scale", m.svm.feature_scale}}}};
  Json bags = Json::array();
  for (const auto& b : m.train_bags)
    bags.push_back({{"id", b.id}, {"label", label_text(b.label)}, {"densities", densities_json(b.densities)}});
  j["train_bags"] = bags;
  if (m.pca) {
    j["pca"] = {{"mean", m.pca->mean},
                {"components", m.pca->components},
                {"explained_variance", m.pca->explained_variance}};
  } else {
    j["pca"] = nullptr;
  }
  return j;
}

ClassModel class_model_from_json(const Json& j) {
  return parsing("class model", [&] {
    if (j.value("format", std::string()) != "midiv-class-model")
      fail(ErrorCode::kParse, "not a midiv class model");
    ClassModel m;
    m.config = pipeline_config_from_json(j.at("config"));
    m.dimension = j.at("dimension").get<std::size_t>();
    m.densities.pos = densities_from(j.at("f_pos"));
    m.densities.neg = densities_from(j.at("f_neg"));
    if (m.densities.pos.size() != m.dimension || m.densities.neg.size() != m.dimension)
      fail(ErrorCode::kParse, "class densities do not match the model dimension");
    m.threshold = j.at("threshold").get<double>();
    m.has_threshold = j.at("has_threshold").get<bool>();
    const auto& s = j.at("svm");
    m.svm.weights = s.at("weights").get<std::vector<double>>();
    m.svm.bias = s.at("bias").get<double>();
    m.svm.feature_mean = s.at("feature_mean").get<std::vector<double>>();
    m.svm.feature_scale = s.at("feature_scale").get<std::vector<double>>();
    for (const auto& b : j.at("train_bags"))
      m.train_bags.push_back({b.at("id").get<std::string>(), label_from(b.at("label")),
                              densities_from(b.at("densities"))});
    if (!j.at("pca").is_null()) {
      PcaTransform p;
      p.mean = j["pca"].at("mean").get<std::vector<double>>();
      p.components = j["pca"].at("components").get<std::vector<std::vector<double>>>();
      p.explained_variance = j["pca"].at("explained_variance").get<std::vector<double>>();
      m.pca = std::move(p);
    }
    return m;
  });
}

Json to_json(const EvalReport& r) {
  Json bags = Json::array();
  for (std::size_t i = 0; i < r.scores.size(); ++i) {
    Json b = {{"id", i < r.bag_ids.size() ? r.bag_ids[i] : std::to_string(i)},
              {"label", label_text(r.labels[i])},
              {"score", number(r.scores[i])}};
    if (i < r.predictions.size()) b["prediction"] = label_text(r.predictions[i]);
    bags.push_back(std::move(b));
  }
  Json roc = Json::array();
  for (const auto& p : r.roc) roc.push_back({p.fpr, p.tpr});
  Json j = {{"seed", r.seed},
            {"auc", r.auc},
            {"bags", bags},
            {"roc", roc},
            {"folds", r.folds}};
  if (!r.predictions.empty()) {
    j["threshold"] = number(r.threshold);
    j["accuracy"] = r.accuracy;
    j["accuracy_sd"] = r.accuracy_sd;
    j["fold_accuracies"] = r.fold_accuracies;
  }
  if (r.per_fold_mean_auc) j["per_fold_mean_auc"] = *r.per_fold_mean_auc;
  return j;
}

Json to_json(const CheckReport& r) {
  Json measures = Json::array();
  for (const auto& t : r.measures) {
    Json m = {{"measure", measure_name(t.measure)},
              {"pass", t.pass},
              {"contributions", numbers(t.contributions)}};
    if (!t.dual_contributions.empty()) m["dual_contributions"] = numbers(t.dual_contributions);
    measures.push_back(std::move(m));
  }
  return {{"property", property_name(r.property)},
          {"parameters", r.parameters},
          {"measures", measures}};
}

Json study_to_json(const StudyRequest& request, const std::vector<StudyCell>& cells) {
  Json methods = Json::array();
  for (Method m : request.methods) methods.push_back(method_name(m));
  Json out_cells = Json::array();
  for (const auto& c : cells) {
    Json results = Json::array();
    const auto paper = paper_table1(request.sim.scenario, c.cell.pos, c.cell.neg);
    for (std::size_t m = 0; m < request.methods.size(); ++m) {
      Json r = {{"method", method_name(request.methods[m])},
                {"mean_auc", c.mean_auc[m]},
                {"sd_auc", c.sd_auc[m]},
                {"rep_auc", c.rep_auc[m]}};
      const int column = request.methods[m] == Method::kRdBh   ? 0
                         : request.methods[m] == Method::kRdKl ? 1
                         : request.methods[m] == Method::kCkl  ? 2
                                                               : -1;
      if (paper && column >= 0) r["paper_reported_auc100"] = (*paper)[column];
      results.push_back(std::move(r));
    }
    out_cells.push_back({{"pos", c.cell.pos}, {"neg", c.cell.neg}, {"results", results}});
  }
  return {{"scenario", scenario_name(request.sim.scenario)},
          {"repetitions", request.repetitions},
          {"n_test", request.n_test},
          {"methods", methods},
          {"pipeline", to_json(request.pipeline)},
          {"sim", to_json(request.sim)},
          {"cells", out_cells}};
}

}  // namespace midiv

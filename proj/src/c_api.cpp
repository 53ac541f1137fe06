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

#include "midiv/midiv.h"

#include <openssl/evp.h>

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "classify.hpp"
#include "core.hpp"
#include "density.hpp"
#include "divergence.hpp"
#include "error.hpp"
#include "properties.hpp"
#include "serialize.hpp"
#include "simulate.hpp"

struct midiv_dataset {
  midiv::Dataset data;
};

struct midiv_density {
  midiv::DensityModel model;
};

struct midiv_model {
  midiv::ClassModel model;
};

namespace {

using midiv::ErrorCode;
using midiv::fail;

thread_local std::string g_last_error;

template <typename F>
midiv_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return MIDIV_OK;
  } catch (const midiv::Error& e) {
    g_last_error = e.what();
    return static_cast<midiv_status>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MIDIV_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MIDIV_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return MIDIV_ERR_INTERNAL;
  }
}

template <typename T>
T& need(T* p, const char* name) {
  if (!p) fail(ErrorCode::kInvalidArgument, std::string(name) + " must not be NULL");
  return *p;
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

midiv::Json parse_json(const char* text, const char* what) {
  need(text, what);
  try {
    return midiv::Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string(what) + " is not valid JSON: " + e.what());
  }
}

midiv::Measure to_measure(midiv_measure m) {
  switch (m) {
    case MIDIV_MEASURE_KL: return midiv::Measure::kKl;
    case MIDIV_MEASURE_BH: return midiv::Measure::kBh;
    case MIDIV_MEASURE_CKL: return midiv::Measure::kCkl;
  }
  fail(ErrorCode::kInvalidArgument, "unknown measure");
}

midiv::Method to_method(midiv_method m) {
  if (m < MIDIV_METHOD_RD_KL || m > MIDIV_METHOD_SVM_ON_DIVS)
    fail(ErrorCode::kInvalidArgument, "unknown method");
  return static_cast<midiv::Method>(m);
}

midiv::DivergenceSpec to_spec(const midiv_divergence_spec& s) {
  midiv::DivergenceSpec out;
  out.measure = to_measure(s.measure);
  if (s.integrator != MIDIV_INTEGRATOR_IMPORTANCE && s.integrator != MIDIV_INTEGRATOR_RIEMANN)
    fail(ErrorCode::kInvalidArgument, "unknown integrator");
  out.integrator = s.integrator == MIDIV_INTEGRATOR_IMPORTANCE ? midiv::Integrator::kImportance
                                                               : midiv::Integrator::kRiemann;
  out.n_imp = s.n_imp;
  out.grid_points = s.grid_points;
  out.ratio_clip = s.ratio_clip;
  out.floor = s.floor;
  out.validate();
  return out;
}

midiv::PipelineConfig to_pipeline(const midiv_pipeline_config& c) {
  midiv::PipelineConfig out;
  out.method = to_method(c.method);
  if (c.estimator < MIDIV_ESTIMATOR_KDE_EPANECHNIKOV || c.estimator > MIDIV_ESTIMATOR_GMM_AIC)
    fail(ErrorCode::kInvalidArgument, "unknown estimator");
  out.estimator = static_cast<midiv::Estimator>(c.estimator);
  out.spec = to_spec(c.spec);
  switch (c.threshold_kind) {
    case MIDIV_THRESHOLD_NONE: out.threshold = midiv::ThresholdPolicy::none(); break;
    case MIDIV_THRESHOLD_LOOCV: out.threshold = midiv::ThresholdPolicy::loocv(); break;
    case MIDIV_THRESHOLD_FIXED:
      out.threshold = midiv::ThresholdPolicy::fixed(c.threshold_value);
      break;
    default: fail(ErrorCode::kInvalidArgument, "unknown threshold kind");
  }
  out.svm_feature = to_method(c.svm_feature);
  out.svm.lambda = c.svm_lambda;
  out.svm.epochs = c.svm_epochs;
  out.gmm_max_components = c.gmm_max_components;
  if (c.bandwidth > 0.0) out.bandwidth = c.bandwidth;
  if (c.pca_components > 0) out.pca_components = c.pca_components;
  out.validate();
  return out;
}

std::vector<midiv::Label> to_labels(const int* labels, std::size_t n) {
  std::vector<midiv::Label> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 0 && labels[i] != 1)
      fail(ErrorCode::kInvalidArgument, "labels must be 0 (NEG) or 1 (POS)");
    out[i] = labels[i] == 1 ? midiv::Label::kPos : midiv::Label::kNeg;
  }
  return out;
}

}  // namespace

extern "C" {

const char* midiv_version(void) { return "0.1.0"; }

const char* midiv_last_error(void) { return g_last_error.c_str(); }

const char* midiv_status_name(midiv_status status) {
  switch (status) {
    case MIDIV_OK: return "ok";
    case MIDIV_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MIDIV_ERR_PARSE: return "parse error";
    case MIDIV_ERR_DIMENSION_MISMATCH: return "dimension mismatch";
    case MIDIV_ERR_IO: return "I/O error";
    case MIDIV_ERR_NUMERIC: return "numeric error";
    case MIDIV_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void midiv_string_free(char* s) { std::free(s); }

midiv_status midiv_sha256_file(const char* path, char out_hex[65]) {
  return guarded([&] {
    need(path, "path");
    need(out_hex, "out_hex");
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::kIo, std::string("cannot open '") + path + "'");
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
      fail(ErrorCode::kInternal, "SHA-256 initialisation failed");
    std::vector<char> buf(1 << 16);
    while (in) {
      in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
      if (in.gcount() > 0 &&
          EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount())) != 1)
        fail(ErrorCode::kInternal, "SHA-256 update failed");
    }
    if (in.bad()) fail(ErrorCode::kIo, std::string("read error on '") + path + "'");
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
      fail(ErrorCode::kInternal, "SHA-256 finalisation failed");
    for (unsigned int i = 0; i < len; ++i) std::snprintf(out_hex + 2 * i, 3, "%02x", digest[i]);
    out_hex[2 * len] = '\0';
  });
}

midiv_status midiv_dataset_load(const char* path, midiv_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new midiv_dataset{midiv::load_dataset(path)};
  });
}

midiv_status midiv_dataset_write(const midiv_dataset* data, const char* path) {
  return guarded([&] {
    need(path, "path");
    midiv::write_dataset(path, need(data, "data").data);
  });
}

void midiv_dataset_free(midiv_dataset* data) { delete data; }

size_t midiv_dataset_bag_count(const midiv_dataset* data) {
  return data ? data->data.bags.size() : 0;
}

size_t midiv_dataset_dimension(const midiv_dataset* data) {
  return data ? data->data.dimension : 0;
}

size_t midiv_dataset_instance_count(const midiv_dataset* data) {
  return data ? data->data.instance_count() : 0;
}

size_t midiv_dataset_label_count(const midiv_dataset* data, int label) {
  if (!data || (label != 0 && label != 1)) return 0;
  return data->data.count(label == 1 ? midiv::Label::kPos : midiv::Label::kNeg);
}

const char* midiv_dataset_bag_id(const midiv_dataset* data, size_t i) {
  if (!data || i >= data->data.bags.size()) return nullptr;
  return data->data.bags[i].id().c_str();
}

int midiv_dataset_bag_label(const midiv_dataset* data, size_t i) {
  if (!data || i >= data->data.bags.size()) return -1;
  const auto& label = data->data.bags[i].label();
  if (!label) return -1;
  return *label == midiv::Label::kPos ? 1 : 0;
}

midiv_status midiv_sim_config_preset(const char* scenario, char** out_json) {
  return guarded([&] {
    need(scenario, "scenario");
    need(out_json, "out_json");
    const auto s = midiv::parse_scenario(scenario);
    if (!s) fail(ErrorCode::kInvalidArgument, std::string("unknown scenario '") + scenario + "'");
    *out_json = copy_string(midiv::to_json(midiv::SimConfig::preset(*s)).dump(2));
  });
}

midiv_status midiv_simulate(const char* config_json, size_t n_train_pos, size_t n_train_neg,
                            size_t n_test, uint64_t seed, midiv_dataset** train,
                            midiv_dataset** test, char** latents_json) {
  return guarded([&] {
    need(train, "train");
    need(test, "test");
    const midiv::SimConfig config =
        midiv::sim_config_from_json(parse_json(config_json, "simulation config"));
    midiv::require(n_train_pos >= 1 && n_train_neg >= 1 && n_test >= 1,
                   "bag counts must be >= 1");
    midiv::Experiment ex =
        midiv::sample_experiment(config, n_train_pos, n_train_neg, n_test, seed);
    std::string latents;
    if (latents_json)
      latents = midiv::Json{{"train", midiv::latents_to_json(ex.train_bags)},
                            {"test", midiv::latents_to_json(ex.test_bags)}}
                    .dump(2);
    auto tr = std::make_unique<midiv_dataset>(midiv_dataset{std::move(ex.train)});
    auto te = std::make_unique<midiv_dataset>(midiv_dataset{std::move(ex.test)});
    if (latents_json) *latents_json = copy_string(latents);
    *train = tr.release();
    *test = te.release();
  });
}

midiv_status midiv_density_fit_kde(const double* samples, size_t n, midiv_kernel kernel,
                                   double bandwidth, midiv_density** out) {
  return guarded([&] {
    need(out, "out");
    if (n > 0) need(samples, "samples");
    if (kernel != MIDIV_KERNEL_EPANECHNIKOV && kernel != MIDIV_KERNEL_GAUSSIAN)
      fail(ErrorCode::kInvalidArgument, "unknown kernel");
    std::optional<double> h;
    if (bandwidth > 0.0) h = bandwidth;
    *out = new midiv_density{midiv::fit_kde(
        std::span<const double>(samples, n),
        kernel == MIDIV_KERNEL_GAUSSIAN ? midiv::Kernel::kGaussian : midiv::Kernel::kEpanechnikov,
        h)};
  });
}

midiv_status midiv_density_fit_gmm(const double* samples, size_t n, size_t k_max, uint64_t seed,
                                   midiv_density** out) {
  return guarded([&] {
    need(out, "out");
    if (n > 0) need(samples, "samples");
    *out = new midiv_density{
        midiv::select_gmm(std::span<const double>(samples, n), k_max, seed).model};
  });
}

void midiv_density_free(midiv_density* d) { delete d; }

midiv_status midiv_density_eval(const midiv_density* d, const double* x, size_t n, double* out) {
  return guarded([&] {
    const auto& m = need(d, "density").model;
    if (n == 0) return;
    need(x, "x");
    need(out, "out");
    m.eval(std::span<const double>(x, n), std::span<double>(out, n));
  });
}

midiv_status midiv_density_sample(const midiv_density* d, size_t n, uint64_t seed, double* out) {
  return guarded([&] {
    const auto& m = need(d, "density").model;
    if (n == 0) return;
    need(out, "out");
    const auto xs = m.sample(n, seed);
    std::copy(xs.begin(), xs.end(), out);
  });
}

midiv_status midiv_density_to_json(const midiv_density* d, char** out_json) {
  return guarded([&] {
    need(out_json, "out_json");
    *out_json = copy_string(midiv::to_json(need(d, "density").model).dump());
  });
}

midiv_status midiv_density_from_json(const char* json, midiv_density** out) {
  return guarded([&] {
    need(out, "out");
    *out = new midiv_density{midiv::density_from_json(parse_json(json, "density"))};
  });
}

void midiv_divergence_spec_default(midiv_divergence_spec* spec) {
  if (!spec) return;
  const midiv::DivergenceSpec d;
  spec->measure = MIDIV_MEASURE_KL;
  spec->integrator = MIDIV_INTEGRATOR_IMPORTANCE;
  spec->n_imp = d.n_imp;
  spec->grid_points = d.grid_points;
  spec->ratio_clip = d.ratio_clip;
  spec->floor = d.floor;
}

midiv_status midiv_divergence(const midiv_density* bag, const midiv_density* ref,
                              const midiv_density* neg, const midiv_divergence_spec* spec,
                              uint64_t seed, midiv_score* out) {
  return guarded([&] {
    const midiv::DivergenceSpec s = to_spec(need(spec, "spec"));
    const auto& b = need(bag, "bag").model;
    const auto& r = need(ref, "ref").model;
    need(out, "out");
    midiv::DivergenceScore score;
    switch (s.measure) {
      case midiv::Measure::kKl: score = midiv::kl(b, r, s, seed); break;
      case midiv::Measure::kBh: score = midiv::bhattacharyya(b, r, s, seed); break;
      case midiv::Measure::kCkl: score = midiv::ckl(b, r, need(neg, "neg").model, s, seed); break;
    }
    *out = {score.value, score.clipped_fraction, score.ess, score.low_ess ? 1 : 0};
  });
}

midiv_status midiv_rd_ratio(const midiv_density* bag, const midiv_density* pos,
                            const midiv_density* neg, midiv_measure measure,
                            const midiv_divergence_spec* spec, uint64_t seed, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = midiv::rd_ratio(need(bag, "bag").model, need(pos, "pos").model, need(neg, "neg").model,
                           to_measure(measure), to_spec(need(spec, "spec")), seed);
  });
}

midiv_status midiv_check_property(midiv_property property, char** out_json) {
  return guarded([&] {
    need(out_json, "out_json");
    if (property < MIDIV_PROPERTY_P1 || property > MIDIV_PROPERTY_P3)
      fail(ErrorCode::kInvalidArgument, "unknown property");
    const auto id = static_cast<midiv::PropertyId>(property - 1);
    const auto report = midiv::check_property(id, midiv::default_property_scenario(id));
    *out_json = copy_string(midiv::to_json(report).dump(2));
  });
}

void midiv_pipeline_config_default(midiv_pipeline_config* config) {
  if (!config) return;
  const midiv::PipelineConfig d;
  config->method = MIDIV_METHOD_CKL;
  config->estimator = MIDIV_ESTIMATOR_KDE_EPANECHNIKOV;
  midiv_divergence_spec_default(&config->spec);
  config->threshold_kind = MIDIV_THRESHOLD_NONE;
  config->threshold_value = 0.0;
  config->svm_feature = MIDIV_METHOD_RD_KL;
  config->svm_lambda = d.svm.lambda;
  config->svm_epochs = d.svm.epochs;
  config->gmm_max_components = d.gmm_max_components;
  config->bandwidth = 0.0;
  config->pca_components = 0;
}

midiv_status midiv_auc(const double* scores, const int* labels, size_t n, double* out) {
  return guarded([&] {
    need(out, "out");
    if (n > 0) {
      need(scores, "scores");
      need(labels, "labels");
    }
    const auto l = to_labels(labels, n);
    *out = midiv::auc(std::span<const double>(scores, n), l);
  });
}

midiv_status midiv_model_fit(const midiv_dataset* train, const midiv_pipeline_config* config,
                             uint64_t seed, midiv_model** out) {
  return guarded([&] {
    need(out, "out");
    *out = new midiv_model{
        midiv::fit_pipeline(need(train, "train").data, to_pipeline(need(config, "config")), seed)};
  });
}

void midiv_model_free(midiv_model* model) { delete model; }

midiv_status midiv_model_to_json(const midiv_model* model, char** out_json) {
  return guarded([&] {
    need(out_json, "out_json");
    *out_json = copy_string(midiv::to_json(need(model, "model").model).dump());
  });
}

midiv_status midiv_model_from_json(const char* json, midiv_model** out) {
  return guarded([&] {
    need(out, "out");
    *out = new midiv_model{midiv::class_model_from_json(parse_json(json, "model"))};
  });
}

midiv_status midiv_model_score(const midiv_model* model, const midiv_dataset* data,
                               uint64_t seed, double* scores) {
  return guarded([&] {
    const auto& d = need(data, "data").data;
    const auto s = midiv::score_dataset(need(model, "model").model, d, seed);
    if (s.empty()) return;
    need(scores, "scores");
    std::copy(s.begin(), s.end(), scores);
  });
}

midiv_status midiv_model_threshold(const midiv_model* model, double* out) {
  return guarded([&] {
    const auto& m = need(model, "model").model;
    need(out, "out");
    if (!m.has_threshold) fail(ErrorCode::kInvalidArgument, "model has no decision threshold");
    *out = m.threshold;
  });
}

midiv_status midiv_evaluate(const midiv_dataset* train, const midiv_dataset* test,
                            const midiv_pipeline_config* config, uint64_t seed,
                            char** report_json) {
  return guarded([&] {
    need(report_json, "report_json");
    const auto report = midiv::evaluate(need(train, "train").data, need(test, "test").data,
                                        to_pipeline(need(config, "config")), seed);
    *report_json = copy_string(midiv::to_json(report).dump(2));
  });
}

midiv_status midiv_cross_validate(const midiv_dataset* data, const midiv_pipeline_config* config,
                                  size_t k_folds, size_t repeats, int per_fold_auc, uint64_t seed,
                                  char** report_json) {
  return guarded([&] {
    need(report_json, "report_json");
    midiv::CvOptions options;
    options.k_folds = k_folds;
    options.repeats = repeats;
    options.per_fold_auc = per_fold_auc != 0;
    const auto report = midiv::cross_validate(need(data, "data").data,
                                              to_pipeline(need(config, "config")), options, seed);
    *report_json = copy_string(midiv::to_json(report).dump(2));
  });
}

midiv_status midiv_sim_study(const char* sim_config_json, const size_t* cells, size_t n_cells,
                             size_t repetitions, size_t n_test, const midiv_method* methods,
                             size_t n_methods, const midiv_pipeline_config* config,
                             uint64_t seed, size_t threads, char** out_json) {
  return guarded([&] {
    need(out_json, "out_json");
    midiv::StudyRequest req;
    req.sim = midiv::sim_config_from_json(parse_json(sim_config_json, "simulation config"));
    if (n_cells > 0) {
      need(cells, "cells");
      req.grid.clear();
      for (std::size_t i = 0; i < n_cells; ++i) req.grid.push_back({cells[2 * i], cells[2 * i + 1]});
    }
    if (n_methods > 0) {
      need(methods, "methods");
      req.methods.clear();
      for (std::size_t i = 0; i < n_methods; ++i) req.methods.push_back(to_method(methods[i]));
    }
    req.repetitions = repetitions;
    req.n_test = n_test;
    req.pipeline = to_pipeline(need(config, "config"));
    req.threads = threads;
    const auto result = midiv::run_sim_study(req, seed);
    *out_json = copy_string(midiv::study_to_json(req, result).dump(2));
  });
}

}  // extern "C"

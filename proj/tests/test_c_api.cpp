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

// Exercises the shared library through its C header only.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "midiv/midiv.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  midiv_string_free(s);
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "midiv_c_api_test";
  fs::create_directories(dir);
  return dir / name;
}

struct Experiment {
  midiv_dataset* train = nullptr;
  midiv_dataset* test = nullptr;
  ~Experiment() {
    midiv_dataset_free(train);
    midiv_dataset_free(test);
  }
};

void simulate(Experiment& ex, std::size_t pos, std::size_t neg, std::size_t n_test, std::uint64_t seed) {
  char* cfg = nullptr;
  REQUIRE(midiv_sim_config_preset("sim1", &cfg) == MIDIV_OK);
  const std::string config = take(cfg);
  REQUIRE(midiv_simulate(config.c_str(), pos, neg, n_test, seed, &ex.train, &ex.test, nullptr) == MIDIV_OK);
}

midiv_pipeline_config quick_config(midiv_method m) {
  midiv_pipeline_config c;
  midiv_pipeline_config_default(&c);
  c.method = m;
  c.spec.n_imp = 300;
  return c;
}

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::string(midiv_version()).size() > 0);
  CHECK(std::string(midiv_status_name(MIDIV_OK)) == "ok");
  CHECK(std::string(midiv_status_name(MIDIV_ERR_PARSE)) == "parse error");
  midiv_string_free(nullptr);
  midiv_dataset_free(nullptr);
  midiv_density_free(nullptr);
  midiv_model_free(nullptr);
}

TEST_CASE("null arguments are rejected, not dereferenced") {
  midiv_dataset* d = nullptr;
  CHECK(midiv_dataset_load(nullptr, &d) == MIDIV_ERR_INVALID_ARGUMENT);
  CHECK(std::string(midiv_last_error()).size() > 0);
  CHECK(midiv_dataset_load("x.csv", nullptr) == MIDIV_ERR_INVALID_ARGUMENT);
  double v = 0;
  CHECK(midiv_auc(nullptr, nullptr, 3, &v) == MIDIV_ERR_INVALID_ARGUMENT);
  midiv_score sc;
  CHECK(midiv_divergence(nullptr, nullptr, nullptr, nullptr, 1, &sc) == MIDIV_ERR_INVALID_ARGUMENT);
  CHECK(midiv_model_fit(nullptr, nullptr, 1, nullptr) == MIDIV_ERR_INVALID_ARGUMENT);
  CHECK(midiv_dataset_bag_count(nullptr) == 0);
  CHECK(midiv_dataset_bag_id(nullptr, 0) == nullptr);
  CHECK(midiv_dataset_bag_label(nullptr, 0) == -1);
}

TEST_CASE("errors carry status and message") {
  midiv_dataset* d = nullptr;
  const std::string missing = scratch("does_not_exist.csv").string();
  CHECK(midiv_dataset_load(missing.c_str(), &d) == MIDIV_ERR_IO);
  CHECK(d == nullptr);
  CHECK(std::string(midiv_last_error()).find("does_not_exist.csv") != std::string::npos);

  const auto bad = scratch("bad.csv");
  std::ofstream(bad) << "bag_id,label,f1\nb1,1,0.5\nb1,0,0.7\n";
  CHECK(midiv_dataset_load(bad.string().c_str(), &d) == MIDIV_ERR_PARSE);

  double v = 0;
  const double s[] = {1, 2};
  const int one_class[] = {1, 1};
  CHECK(midiv_auc(s, one_class, 2, &v) == MIDIV_ERR_INVALID_ARGUMENT);

  char* out = nullptr;
  CHECK(midiv_sim_config_preset("sim9", &out) != MIDIV_OK);
  CHECK(out == nullptr);
  CHECK(std::string(midiv_last_error()).find("sim9") != std::string::npos);
}

TEST_CASE("auc") {
  const double s[] = {1, 2, 3, 4};
  const int l[] = {1, 1, 0, 0};
  double v = -1;
  REQUIRE(midiv_auc(s, l, 4, &v) == MIDIV_OK);
  CHECK(v == 1.0);
}

TEST_CASE("dataset handles") {
  Experiment ex;
  simulate(ex, 3, 4, 10, 7);
  CHECK(midiv_dataset_bag_count(ex.train) == 7);
  CHECK(midiv_dataset_dimension(ex.train) == 1);
  CHECK(midiv_dataset_instance_count(ex.train) == 350);
  CHECK(midiv_dataset_label_count(ex.train, 1) == 3);
  CHECK(midiv_dataset_label_count(ex.test, 0) == 5);
  CHECK(std::string(midiv_dataset_bag_id(ex.train, 0)) == "train0000");
  CHECK(midiv_dataset_bag_label(ex.train, 0) == 1);
  CHECK(midiv_dataset_bag_id(ex.train, 7) == nullptr);

  const auto path = scratch("train.csv").string();
  REQUIRE(midiv_dataset_write(ex.train, path.c_str()) == MIDIV_OK);
  midiv_dataset* back = nullptr;
  REQUIRE(midiv_dataset_load(path.c_str(), &back) == MIDIV_OK);
  CHECK(midiv_dataset_instance_count(back) == 350);
  midiv_dataset_free(back);

  char hex[65];
  REQUIRE(midiv_sha256_file(path.c_str(), hex) == MIDIV_OK);
  CHECK(std::string(hex).size() == 64);
}

TEST_CASE("sha256 of a known file") {
  const auto p = scratch("abc.txt");
  std::ofstream(p, std::ios::binary) << "abc";
  char hex[65];
  REQUIRE(midiv_sha256_file(p.string().c_str(), hex) == MIDIV_OK);
  CHECK(std::string(hex) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("densities and divergences") {
  std::vector<double> xs;
  for (int i = 0; i < 200; ++i) xs.push_back(std::sin(i * 1.7) * 2.0);
  midiv_density* kde = nullptr;
  midiv_density* gmm = nullptr;
  REQUIRE(midiv_density_fit_kde(xs.data(), xs.size(), MIDIV_KERNEL_EPANECHNIKOV, 0.0, &kde) == MIDIV_OK);
  REQUIRE(midiv_density_fit_gmm(xs.data(), xs.size(), 3, 1, &gmm) == MIDIV_OK);
  CHECK(midiv_density_fit_kde(xs.data(), 1, MIDIV_KERNEL_GAUSSIAN, 0.0, &kde) != MIDIV_OK);

  const double probe[] = {-1.0, 0.0, 0.5};
  double pdf[3];
  REQUIRE(midiv_density_eval(kde, probe, 3, pdf) == MIDIV_OK);
  for (double p : pdf) CHECK(p >= 0.0);

  double draws[10];
  REQUIRE(midiv_density_sample(gmm, 10, 4, draws) == MIDIV_OK);
  double again[10];
  REQUIRE(midiv_density_sample(gmm, 10, 4, again) == MIDIV_OK);
  CHECK(std::equal(draws, draws + 10, again));

  char* js = nullptr;
  REQUIRE(midiv_density_to_json(kde, &js) == MIDIV_OK);
  midiv_density* copy = nullptr;
  REQUIRE(midiv_density_from_json(js, &copy) == MIDIV_OK);
  midiv_string_free(js);
  double pdf2[3];
  REQUIRE(midiv_density_eval(copy, probe, 3, pdf2) == MIDIV_OK);
  CHECK(std::equal(pdf, pdf + 3, pdf2));
  CHECK(midiv_density_from_json("{not json", &copy) == MIDIV_ERR_PARSE);

  midiv_divergence_spec spec;
  midiv_divergence_spec_default(&spec);
  CHECK(spec.ratio_clip == 1e6);
  midiv_score sc;
  REQUIRE(midiv_divergence(kde, kde, nullptr, &spec, 1, &sc) == MIDIV_OK);
  CHECK(sc.value == 0.0);
  spec.measure = MIDIV_MEASURE_CKL;
  CHECK(midiv_divergence(kde, gmm, nullptr, &spec, 1, &sc) == MIDIV_ERR_INVALID_ARGUMENT);
  REQUIRE(midiv_divergence(kde, gmm, gmm, &spec, 1, &sc) == MIDIV_OK);
  CHECK(sc.value >= 0.0);
  double r = 0;
  REQUIRE(midiv_rd_ratio(gmm, gmm, kde, MIDIV_MEASURE_BH, &spec, 1, &r) == MIDIV_OK);
  CHECK(r < 1e-3);

  midiv_density_free(copy);
  midiv_density_free(kde);
  midiv_density_free(gmm);
}

TEST_CASE("property checks report the pass pattern") {
  char* js = nullptr;
  REQUIRE(midiv_check_property(MIDIV_PROPERTY_P3, &js) == MIDIV_OK);
  const auto j = json::parse(take(js));
  CHECK(j.dump().find("pass") != std::string::npos);
  CHECK(midiv_check_property(static_cast<midiv_property>(7), &js) == MIDIV_ERR_INVALID_ARGUMENT);
}

TEST_CASE("model lifecycle") {
  Experiment ex;
  simulate(ex, 5, 5, 20, 3);
  auto cfg = quick_config(MIDIV_METHOD_CKL);
  cfg.threshold_kind = MIDIV_THRESHOLD_LOOCV;
  midiv_model* model = nullptr;
  REQUIRE(midiv_model_fit(ex.train, &cfg, 9, &model) == MIDIV_OK);
  double t = 0;
  CHECK(midiv_model_threshold(model, &t) == MIDIV_OK);

  std::vector<double> scores(midiv_dataset_bag_count(ex.test));
  REQUIRE(midiv_model_score(model, ex.test, 2, scores.data()) == MIDIV_OK);

  char* js = nullptr;
  REQUIRE(midiv_model_to_json(model, &js) == MIDIV_OK);
  midiv_model* back = nullptr;
  REQUIRE(midiv_model_from_json(js, &back) == MIDIV_OK);
  midiv_string_free(js);
  std::vector<double> again(scores.size());
  REQUIRE(midiv_model_score(back, ex.test, 2, again.data()) == MIDIV_OK);
  CHECK(again == scores);
  midiv_model_free(back);
  midiv_model_free(model);

  cfg = quick_config(MIDIV_METHOD_RD_KL);
  REQUIRE(midiv_model_fit(ex.train, &cfg, 9, &model) == MIDIV_OK);
  CHECK(midiv_model_threshold(model, &t) != MIDIV_OK);
  midiv_model_free(model);

  cfg.spec.n_imp = 5;
  CHECK(midiv_model_fit(ex.train, &cfg, 9, &model) == MIDIV_ERR_INVALID_ARGUMENT);
}

TEST_CASE("evaluate, cross-validate and study return json reports") {
  Experiment ex;
  simulate(ex, 5, 5, 20, 4);
  const auto cfg = quick_config(MIDIV_METHOD_RD_KL);
  char* js = nullptr;
  REQUIRE(midiv_evaluate(ex.train, ex.test, &cfg, 1, &js) == MIDIV_OK);
  const auto eval = json::parse(take(js));
  CHECK(eval["auc"].get<double>() >= 0.0);
  CHECK(eval["bags"].size() == 20);

  REQUIRE(midiv_cross_validate(ex.train, &cfg, 5, 2, 0, 1, &js) == MIDIV_OK);
  const auto cv = json::parse(take(js));
  CHECK(cv["fold_accuracies"].size() == 10);
  CHECK(midiv_cross_validate(ex.train, &cfg, 1, 1, 0, 1, &js) == MIDIV_ERR_INVALID_ARGUMENT);

  char* sim = nullptr;
  REQUIRE(midiv_sim_config_preset("sim1", &sim) == MIDIV_OK);
  const std::string sim_cfg = take(sim);
  const std::size_t cells[] = {1, 5};
  REQUIRE(midiv_sim_study(sim_cfg.c_str(), cells, 1, 2, 20, nullptr, 0, &cfg, 5, 1, &js) == MIDIV_OK);
  const auto study = json::parse(take(js));
  CHECK(study.dump().find("mean_auc") != std::string::npos);
}

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

// Command-line front end. Talks to the library only through midiv.h.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "midiv/midiv.h"

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RuntimeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(midiv_status s) {
  if (s != MIDIV_OK) throw RuntimeError(midiv_last_error());
}

struct DatasetDeleter {
  void operator()(midiv_dataset* d) const { midiv_dataset_free(d); }
};
struct ModelDeleter {
  void operator()(midiv_model* m) const { midiv_model_free(m); }
};
using DatasetPtr = std::unique_ptr<midiv_dataset, DatasetDeleter>;
using ModelPtr = std::unique_ptr<midiv_model, ModelDeleter>;

// Takes ownership of a library-allocated string.
std::string take(char* s) {
  std::string out = s ? s : "";
  midiv_string_free(s);
  return out;
}

DatasetPtr load(const std::string& path) {
  midiv_dataset* d = nullptr;
  check(midiv_dataset_load(path.c_str(), &d));
  return DatasetPtr(d);
}

std::string sha256(const fs::path& p) {
  char hex[65];
  check(midiv_sha256_file(p.string().c_str(), hex));
  return hex;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw RuntimeError("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw RuntimeError("cannot write '" + p.string() + "'");
  out << text;
  if (!out) throw RuntimeError("write failed on '" + p.string() + "'");
}

// Everything a command touched, for the manifest.
struct RunRecord {
  std::string command;
  fs::path out_dir;
  std::vector<fs::path> inputs;
  std::vector<std::string> outputs;  // names relative to out_dir
  Json config = Json::object();
  std::uint64_t seed = 0;

  fs::path output(const std::string& name) {
    outputs.push_back(name);
    return out_dir / name;
  }
};

void prepare_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw RuntimeError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

std::string fmt(double x, int digits = 17) {
  std::ostringstream ss;
  ss << std::setprecision(digits) << x;
  return ss.str();
}

// ---- pipeline flags shared by evaluate, cv, fit and table1 ----

struct PipelineFlags {
  std::string method = "ckl";
  std::string estimator = "kde-epan";
  std::string integrator = "importance";
  std::size_t n_imp = 1000;
  std::size_t grid_points = 4096;
  double ratio_clip = 1e6;
  double floor = 1e-12;
  std::string threshold = "none";
  std::string svm_feature = "rd-kl";
  double svm_lambda = 1e-3;
  std::size_t svm_epochs = 200;
  std::size_t gmm_max = 4;
  double bandwidth = 0.0;
  std::size_t pca = 0;
};

const std::map<std::string, midiv_method> kMethods = {
    {"rd-kl", MIDIV_METHOD_RD_KL},   {"rd-bh", MIDIV_METHOD_RD_BH},   {"ckl", MIDIV_METHOD_CKL},
    {"b2b-kl", MIDIV_METHOD_B2B_KL}, {"b2b-bh", MIDIV_METHOD_B2B_BH}, {"svm-divs", MIDIV_METHOD_SVM_ON_DIVS}};

const std::map<std::string, midiv_estimator> kEstimators = {
    {"kde-epan", MIDIV_ESTIMATOR_KDE_EPANECHNIKOV},
    {"kde-gauss", MIDIV_ESTIMATOR_KDE_GAUSSIAN},
    {"gmm-aic", MIDIV_ESTIMATOR_GMM_AIC}};

std::vector<std::string> keys(const auto& m) {
  std::vector<std::string> out;
  for (const auto& [k, v] : m) out.push_back(k);
  return out;
}

void add_pipeline_flags(CLI::App* app, PipelineFlags& f, bool with_method = true) {
  if (with_method)
    app->add_option("--method", f.method, "Classifier")->check(CLI::IsMember(keys(kMethods)));
  app->add_option("--estimator", f.estimator, "Density estimator")
      ->check(CLI::IsMember(keys(kEstimators)));
  app->add_option("--integrator", f.integrator, "Integral approximation")
      ->check(CLI::IsMember({"importance", "riemann"}));
  app->add_option("--n-imp", f.n_imp, "Importance samples per integral")->check(CLI::Range(100, 100000000));
  app->add_option("--grid-points", f.grid_points, "Riemann grid size")->check(CLI::Range(256, 100000000));
  app->add_option("--ratio-clip", f.ratio_clip, "Cap on density ratios");
  app->add_option("--floor", f.floor, "Density floor");
  app->add_option("--threshold", f.threshold, "Decision threshold: loocv, none or fixed:<t>");
  app->add_option("--svm-feature", f.svm_feature, "Divergence fed to the SVM")
      ->check(CLI::IsMember({"rd-kl", "rd-bh", "ckl"}));
  app->add_option("--svm-lambda", f.svm_lambda, "SVM regularisation");
  app->add_option("--svm-epochs", f.svm_epochs, "SVM epochs");
  app->add_option("--gmm-max", f.gmm_max, "Largest GMM component count tried");
  app->add_option("--bandwidth", f.bandwidth, "Fixed KDE bandwidth (default: rule of thumb)");
  app->add_option("--pca", f.pca, "Project onto this many principal components");
}

midiv_pipeline_config to_config(const PipelineFlags& f) {
  midiv_pipeline_config c;
  midiv_pipeline_config_default(&c);
  c.method = kMethods.at(f.method);
  c.estimator = kEstimators.at(f.estimator);
  c.spec.integrator = f.integrator == "riemann" ? MIDIV_INTEGRATOR_RIEMANN : MIDIV_INTEGRATOR_IMPORTANCE;
  c.spec.n_imp = f.n_imp;
  c.spec.grid_points = f.grid_points;
  c.spec.ratio_clip = f.ratio_clip;
  c.spec.floor = f.floor;
  if (f.threshold == "loocv") {
    c.threshold_kind = MIDIV_THRESHOLD_LOOCV;
  } else if (f.threshold.rfind("fixed:", 0) == 0) {
    c.threshold_kind = MIDIV_THRESHOLD_FIXED;
    const std::string num = f.threshold.substr(6);
    std::size_t used = 0;
    try {
      c.threshold_value = std::stod(num, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != num.size()) throw UsageError("bad --threshold value '" + f.threshold + "'");
  } else if (f.threshold != "none") {
    throw UsageError("--threshold must be loocv, none or fixed:<t>");
  }
  c.svm_feature = kMethods.at(f.svm_feature);
  c.svm_lambda = f.svm_lambda;
  c.svm_epochs = f.svm_epochs;
  c.gmm_max_components = f.gmm_max;
  c.bandwidth = f.bandwidth;
  c.pca_components = f.pca;
  return c;
}

Json config_json(const PipelineFlags& f) {
  return {{"method", f.method},         {"estimator", f.estimator},   {"integrator", f.integrator},
          {"n_imp", f.n_imp},           {"grid_points", f.grid_points}, {"ratio_clip", f.ratio_clip},
          {"floor", f.floor},           {"threshold", f.threshold},   {"svm_feature", f.svm_feature},
          {"svm_lambda", f.svm_lambda}, {"svm_epochs", f.svm_epochs}, {"gmm_max", f.gmm_max},
          {"bandwidth", f.bandwidth},   {"pca", f.pca}};
}

void write_roc_csv(const fs::path& p, const Json& report) {
  std::ostringstream out;
  out << "fpr,tpr\n";
  for (const auto& pt : report.at("roc")) out << fmt(pt[0].get<double>()) << ',' << fmt(pt[1].get<double>()) << '\n';
  write_file(p, out.str());
}

std::string sim_config_for(const std::string& scenario, const std::string& config_path) {
  if (!config_path.empty()) return read_file(config_path);
  char* json = nullptr;
  if (midiv_sim_config_preset(scenario.c_str(), &json) != MIDIV_OK)
    throw UsageError("unknown scenario '" + scenario + "'");
  return take(json);
}

// ---- commands ----

struct SimulateArgs {
  std::string scenario = "sim1";
  std::string config;
  std::size_t pos = 10;
  std::size_t neg = 10;
  std::size_t test = 100;
};

void cmd_simulate(const SimulateArgs& a, RunRecord& run) {
  const std::string config = sim_config_for(a.scenario, a.config);
  if (!a.config.empty()) run.inputs.push_back(a.config);
  midiv_dataset* train = nullptr;
  midiv_dataset* test = nullptr;
  char* latents = nullptr;
  check(midiv_simulate(config.c_str(), a.pos, a.neg, a.test, run.seed, &train, &test, &latents));
  DatasetPtr tr(train);
  DatasetPtr te(test);
  const std::string latent_text = take(latents);
  check(midiv_dataset_write(tr.get(), run.output("train.csv").string().c_str()));
  check(midiv_dataset_write(te.get(), run.output("test.csv").string().c_str()));
  write_file(run.output("latents.json"), latent_text + "\n");
  run.config = {{"simulation", Json::parse(config)}, {"pos", a.pos}, {"neg", a.neg}, {"test", a.test}};
  std::cerr << "simulated " << midiv_dataset_bag_count(tr.get()) << " training and "
            << midiv_dataset_bag_count(te.get()) << " test bags into " << run.out_dir.string() << "\n";
}

struct EvaluateArgs {
  std::string train;
  std::string test;
  PipelineFlags pipeline;
};

void cmd_evaluate(const EvaluateArgs& a, RunRecord& run) {
  const midiv_pipeline_config config = to_config(a.pipeline);
  DatasetPtr train = load(a.train);
  DatasetPtr test = load(a.test);
  run.inputs = {a.train, a.test};
  char* report = nullptr;
  check(midiv_evaluate(train.get(), test.get(), &config, run.seed, &report));
  const std::string text = take(report);
  const Json j = Json::parse(text);
  write_file(run.output("report.json"), text + "\n");
  write_roc_csv(run.output("roc.csv"), j);
  run.config = config_json(a.pipeline);
  std::cout << "auc " << fmt(j.at("auc").get<double>(), 6);
  if (j.contains("accuracy")) std::cout << "  accuracy " << fmt(j["accuracy"].get<double>(), 6);
  std::cout << "\n";
}

struct CvArgs {
  std::string data;
  std::size_t folds = 10;
  std::size_t repeats = 1;
  bool per_fold_auc = false;
  PipelineFlags pipeline;
};

void cmd_cv(const CvArgs& a, RunRecord& run) {
  const midiv_pipeline_config config = to_config(a.pipeline);
  DatasetPtr data = load(a.data);
  run.inputs = {a.data};
  char* report = nullptr;
  check(midiv_cross_validate(data.get(), &config, a.folds, a.repeats, a.per_fold_auc ? 1 : 0,
                             run.seed, &report));
  const std::string text = take(report);
  const Json j = Json::parse(text);
  write_file(run.output("cv_report.json"), text + "\n");
  write_roc_csv(run.output("roc.csv"), j);
  run.config = config_json(a.pipeline);
  run.config["folds"] = a.folds;
  run.config["repeats"] = a.repeats;
  run.config["per_fold_auc"] = a.per_fold_auc;
  std::cout << "auc " << fmt(j.at("auc").get<double>(), 6) << "  accuracy "
            << fmt(j.at("accuracy").get<double>(), 6) << " (sd " << fmt(j.at("accuracy_sd").get<double>(), 4)
            << ")\n";
}

struct FitArgs {
  std::string train;
  PipelineFlags pipeline;
};

void cmd_fit(const FitArgs& a, RunRecord& run) {
  const midiv_pipeline_config config = to_config(a.pipeline);
  DatasetPtr train = load(a.train);
  run.inputs = {a.train};
  midiv_model* m = nullptr;
  check(midiv_model_fit(train.get(), &config, run.seed, &m));
  ModelPtr model(m);
  char* json = nullptr;
  check(midiv_model_to_json(model.get(), &json));
  write_file(run.output("model.json"), take(json) + "\n");
  run.config = config_json(a.pipeline);
}

struct ScoreArgs {
  std::string model;
  std::string data;
};

void cmd_score(const ScoreArgs& a, RunRecord& run) {
  midiv_model* m = nullptr;
  check(midiv_model_from_json(read_file(a.model).c_str(), &m));
  ModelPtr model(m);
  DatasetPtr data = load(a.data);
  run.inputs = {a.model, a.data};
  std::vector<double> scores(midiv_dataset_bag_count(data.get()));
  check(midiv_model_score(model.get(), data.get(), run.seed, scores.data()));
  double threshold = 0.0;
  const bool has_threshold = midiv_model_threshold(model.get(), &threshold) == MIDIV_OK;
  std::ostringstream out;
  out << "bag_id,score" << (has_threshold ? ",prediction" : "") << "\n";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out << midiv_dataset_bag_id(data.get(), i) << ',' << fmt(scores[i]);
    if (has_threshold) out << ',' << (scores[i] < threshold ? 1 : 0);
    out << "\n";
  }
  write_file(run.output("scores.csv"), out.str());
}

struct Table1Args {
  std::string scenario = "sim1";
  std::string config;
  std::size_t reps = 50;
  std::size_t test = 100;
  std::vector<std::string> cells;
  std::vector<std::string> methods;
  std::size_t threads = 0;
  PipelineFlags pipeline;
};

std::pair<std::size_t, std::size_t> parse_cell(const std::string& text) {
  std::size_t pos = 0;
  std::size_t neg = 0;
  if (std::sscanf(text.c_str(), "pos=%zu,neg=%zu", &pos, &neg) != 2 || pos == 0 || neg == 0)
    throw UsageError("--cell expects pos=<n>,neg=<m>, got '" + text + "'");
  return {pos, neg};
}

void cmd_table1(const Table1Args& a, RunRecord& run) {
  const std::string sim = sim_config_for(a.scenario, a.config);
  if (!a.config.empty()) run.inputs.push_back(a.config);
  midiv_pipeline_config config = to_config(a.pipeline);
  std::vector<std::size_t> cells;
  for (const auto& c : a.cells) {
    const auto [p, n] = parse_cell(c);
    cells.push_back(p);
    cells.push_back(n);
  }
  std::vector<std::string> method_names = a.methods;
  if (method_names.empty()) method_names = {"rd-bh", "rd-kl", "ckl"};
  std::vector<midiv_method> methods;
  for (const auto& m : method_names) {
    const auto it = kMethods.find(m);
    if (it == kMethods.end()) throw UsageError("unknown method '" + m + "'");
    methods.push_back(it->second);
  }
  char* out = nullptr;
  check(midiv_sim_study(sim.c_str(), cells.empty() ? nullptr : cells.data(), cells.size() / 2,
                        a.reps, a.test, methods.data(), methods.size(), &config, run.seed,
                        a.threads, &out));
  const std::string text = take(out);
  const Json j = Json::parse(text);
  write_file(run.output("table1.json"), text + "\n");

  // Wide layout of the published table: one row per pos count, one column per
  // (neg count, method). Cells not computed stay empty.
  const std::string scenario = j.at("scenario").get<std::string>();
  std::vector<std::size_t> pos_values;
  std::vector<std::size_t> neg_values;
  std::map<std::pair<std::size_t, std::size_t>, const Json*> by_cell;
  for (const auto& c : j.at("cells")) {
    const auto p = c.at("pos").get<std::size_t>();
    const auto n = c.at("neg").get<std::size_t>();
    if (std::find(pos_values.begin(), pos_values.end(), p) == pos_values.end()) pos_values.push_back(p);
    if (std::find(neg_values.begin(), neg_values.end(), n) == neg_values.end()) neg_values.push_back(n);
    by_cell[{p, n}] = &c;
  }
  std::ostringstream wide;
  wide << "scenario,pos";
  for (auto n : neg_values)
    for (const auto& m : method_names) wide << ",neg" << n << '_' << m;
  wide << "\n";
  std::ostringstream diff;
  diff << "scenario,pos,neg,method,auc100,sd100,paper_reported_auc100,diff\n";
  for (auto p : pos_values) {
    wide << scenario << ',' << p;
    for (auto n : neg_values) {
      const auto it = by_cell.find({p, n});
      for (std::size_t m = 0; m < method_names.size(); ++m) {
        wide << ',';
        if (it == by_cell.end()) continue;
        const Json& r = it->second->at("results")[m];
        const double mean = 100.0 * r.at("mean_auc").get<double>();
        const double sd = 100.0 * r.at("sd_auc").get<double>();
        wide << fmt(mean, 4);
        diff << scenario << ',' << p << ',' << n << ',' << method_names[m] << ',' << fmt(mean, 4)
             << ',' << fmt(sd, 3) << ',';
        if (r.contains("paper_reported_auc100")) {
          const int paper = r["paper_reported_auc100"].get<int>();
          diff << paper << ',' << fmt(mean - paper, 3);
        } else {
          diff << ',';
        }
        diff << "\n";
      }
    }
    wide << "\n";
  }
  write_file(run.output("table1.csv"), wide.str());
  write_file(run.output("table1_vs_paper.csv"), diff.str());
  run.config = config_json(a.pipeline);
  run.config["simulation"] = Json::parse(sim);
  run.config["reps"] = a.reps;
  run.config["test"] = a.test;
  run.config["cells"] = a.cells;
  run.config["methods"] = method_names;
  std::cout << diff.str();
}

void cmd_properties(RunRecord& run) {
  Json all = Json::array();
  for (midiv_property p : {MIDIV_PROPERTY_P1, MIDIV_PROPERTY_P2, MIDIV_PROPERTY_P3}) {
    char* out = nullptr;
    check(midiv_check_property(p, &out));
    all.push_back(Json::parse(take(out)));
  }
  write_file(run.output("properties.json"), all.dump(2) + "\n");
  for (const auto& r : all) {
    std::cout << r.at("property").get<std::string>();
    for (const auto& m : r.at("measures"))
      std::cout << "  " << m.at("measure").get<std::string>() << '=' << (m.at("pass").get<bool>() ? "pass" : "fail");
    std::cout << "\n";
  }
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const RunRecord& run, const std::vector<std::string>& argv, double seconds) {
  Json inputs = Json::array();
  for (const auto& p : run.inputs)
    inputs.push_back({{"path", fs::absolute(p).string()}, {"sha256", sha256(p)}});
  Json outputs = Json::array();
  for (const auto& name : run.outputs)
    outputs.push_back({{"path", name}, {"sha256", sha256(run.out_dir / name)}});
  const Json manifest = {{"tool", "midiv"},
                         {"versions", {{"midiv", midiv_version()}, {"manifest", 1}}},
                         {"command", run.command},
                         {"argv", argv},
                         {"cwd", fs::current_path().string()},
                         {"config", run.config},
                         {"seed", run.seed},
                         {"inputs", inputs},
                         {"out_dir", fs::absolute(run.out_dir).string()},
                         {"outputs", outputs},
                         {"started_at", utc_now()},
                         {"wall_clock_seconds", seconds}};
  write_file(run.out_dir / "manifest.json", manifest.dump(2) + "\n");
}

int run_command(const std::vector<std::string>& args);

// Re-runs a recorded command into a fresh directory and compares digests.
int cmd_replay(const std::string& manifest_path, const std::string& out_dir) {
  const Json m = Json::parse(read_file(manifest_path));
  std::vector<std::string> argv = m.at("argv").get<std::vector<std::string>>();
  const fs::path target = out_dir.empty() ? fs::path(manifest_path).parent_path() / "replay" : fs::path(out_dir);
  for (const auto& in : m.at("inputs")) {
    const std::string path = in.at("path").get<std::string>();
    if (!fs::exists(path)) throw RuntimeError("recorded input '" + path + "' no longer exists");
    if (sha256(path) != in.at("sha256").get<std::string>())
      throw RuntimeError("recorded input '" + path + "' has changed since the run");
  }
  bool replaced = false;
  for (std::size_t i = 0; i < argv.size(); ++i) {
    if ((argv[i] == "-o" || argv[i] == "--out-dir") && i + 1 < argv.size()) {
      argv[i + 1] = fs::absolute(target).string();
      replaced = true;
    } else if (argv[i].rfind("--out-dir=", 0) == 0) {
      argv[i] = "--out-dir=" + fs::absolute(target).string();
      replaced = true;
    }
  }
  if (!replaced) {
    argv.push_back("--out-dir");
    argv.push_back(fs::absolute(target).string());
  }
  const fs::path previous = fs::current_path();
  fs::current_path(m.at("cwd").get<std::string>());
  const int code = run_command(argv);
  fs::current_path(previous);
  if (code != kExitOk) return code;

  std::size_t mismatches = 0;
  for (const auto& out : m.at("outputs")) {
    const std::string name = out.at("path").get<std::string>();
    const std::string now = sha256(target / name);
    if (now != out.at("sha256").get<std::string>()) {
      std::cerr << "differs: " << name << "\n";
      ++mismatches;
    }
  }
  if (mismatches > 0) {
    std::cerr << mismatches << " output(s) differ from the recorded run\n";
    return kExitRuntime;
  }
  std::cout << "replay identical: " << m.at("outputs").size() << " output(s) in " << target.string() << "\n";
  return kExitOk;
}

int run_command(const std::vector<std::string>& args) {
  CLI::App app{"midiv: multi-instance bag classification with bag-to-class divergences"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(midiv_version()));

  std::uint64_t seed = 1;
  std::string out_dir = "midiv-out";
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Base seed; every random stream derives from it");
    sub->add_option("-o,--out-dir", out_dir, "Output directory");
  };

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Draw a train/test experiment");
  simulate->add_option("--scenario", sim.scenario, "sim1..sim6 or custom");
  simulate->add_option("--config", sim.config, "Simulation config JSON (overrides --scenario)");
  simulate->add_option("--pos", sim.pos, "POS training bags")->check(CLI::PositiveNumber);
  simulate->add_option("--neg", sim.neg, "NEG training bags")->check(CLI::PositiveNumber);
  simulate->add_option("--test", sim.test, "Test bags (half POS)")->check(CLI::PositiveNumber);
  add_common(simulate);

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Fit on a training file, score a test file");
  evaluate->add_option("--train", ev.train, "Training BAG_CSV")->required();
  evaluate->add_option("--test", ev.test, "Test BAG_CSV")->required();
  add_pipeline_flags(evaluate, ev.pipeline);
  add_common(evaluate);

  CvArgs cv;
  auto* cross = app.add_subcommand("cv", "Stratified k-fold cross-validation");
  cross->add_option("--data", cv.data, "BAG_CSV")->required();
  cross->add_option("--folds", cv.folds, "Folds")->check(CLI::Range(2, 1000000));
  cross->add_option("--repeats", cv.repeats, "Repeats")->check(CLI::PositiveNumber);
  cross->add_flag("--per-fold-auc", cv.per_fold_auc, "Also report the mean of per-fold AUCs");
  add_pipeline_flags(cross, cv.pipeline);
  add_common(cross);

  FitArgs fit;
  auto* fitc = app.add_subcommand("fit", "Fit a model and save it as JSON");
  fitc->add_option("--train", fit.train, "Training BAG_CSV")->required();
  add_pipeline_flags(fitc, fit.pipeline);
  add_common(fitc);

  ScoreArgs sc;
  auto* score = app.add_subcommand("score", "Score bags with a saved model");
  score->add_option("--model", sc.model, "model.json from fit")->required();
  score->add_option("--data", sc.data, "BAG_CSV to score")->required();
  add_common(score);

  Table1Args t1;
  auto* table1 = app.add_subcommand("table1", "Simulation study over the pos x neg grid");
  table1->add_option("--scenario", t1.scenario, "sim1..sim6 or custom");
  table1->add_option("--config", t1.config, "Simulation config JSON (overrides --scenario)");
  table1->add_option("--reps", t1.reps, "Repetitions per cell")->check(CLI::PositiveNumber);
  table1->add_option("--test", t1.test, "Test bags per repetition")->check(CLI::Range(2, 1000000));
  table1->add_option("--cell", t1.cells, "Restrict to pos=<n>,neg=<m> (repeatable)");
  table1->add_option("--method", t1.methods, "Methods (repeatable; default rd-bh rd-kl ckl)")
      ->check(CLI::IsMember(keys(kMethods)));
  table1->add_option("--threads", t1.threads, "Worker threads (default MIDIV_THREADS or all cores)");
  add_pipeline_flags(table1, t1.pipeline, false);
  add_common(table1);

  auto* props = app.add_subcommand("properties", "Check Properties 1-3 on exact scenarios");
  add_common(props);

  std::string manifest;
  std::string replay_out;
  auto* replay = app.add_subcommand("replay", "Re-run a command from its manifest and compare outputs");
  replay->add_option("manifest", manifest, "manifest.json of an earlier run")->required();
  replay->add_option("-o,--out-dir", replay_out, "Where to write the replayed outputs");

  std::vector<const char*> argv{"midiv"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (replay->parsed()) return cmd_replay(manifest, replay_out);

    RunRecord run;
    run.seed = seed;
    run.out_dir = out_dir;
    const auto start = std::chrono::steady_clock::now();
    CLI::App* chosen = app.get_subcommands().front();
    run.command = chosen->get_name();
    // Argument problems that CLI11 cannot see are usage errors too.
    if (simulate->parsed() && sim.config.empty()) sim_config_for(sim.scenario, "");
    if (table1->parsed() && t1.config.empty()) sim_config_for(t1.scenario, "");
    prepare_out_dir(run.out_dir);
    if (simulate->parsed()) cmd_simulate(sim, run);
    if (evaluate->parsed()) cmd_evaluate(ev, run);
    if (cross->parsed()) cmd_cv(cv, run);
    if (fitc->parsed()) cmd_fit(fit, run);
    if (score->parsed()) cmd_score(sc, run);
    if (table1->parsed()) cmd_table1(t1, run);
    if (props->parsed()) cmd_properties(run);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(run, args, seconds);
    return kExitOk;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_command(args);
}

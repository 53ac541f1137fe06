/* Copyright 2026 The midiv Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the midiv multi-instance learning library.
 *
 * Conventions:
 *   - Every fallible call returns midiv_status. On failure the message is
 *     available from midiv_last_error() on the same thread until the next
 *     call into the library.
 *   - Handles are opaque and owned by the caller; free them with the
 *     matching *_free function. Passing NULL to a *_free function is a no-op.
 *   - Strings returned through char** are allocated by the library and must
 *     be released with midiv_string_free.
 *   - Scores follow "lower means more POS-like". Labels are 1 (POS),
 *     0 (NEG) or -1 (unlabelled).
 */

#ifndef MIDIV_MIDIV_H_
#define MIDIV_MIDIV_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(MIDIV_BUILDING)
#define MIDIV_API __declspec(dllexport)
#else
#define MIDIV_API __declspec(dllimport)
#endif
#else
#define MIDIV_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum midiv_status {
  MIDIV_OK = 0,
  MIDIV_ERR_INVALID_ARGUMENT = 1,
  MIDIV_ERR_PARSE = 2,
  MIDIV_ERR_DIMENSION_MISMATCH = 3,
  MIDIV_ERR_IO = 4,
  MIDIV_ERR_NUMERIC = 5,
  MIDIV_ERR_INTERNAL = 6
} midiv_status;

typedef enum midiv_kernel { MIDIV_KERNEL_EPANECHNIKOV = 0, MIDIV_KERNEL_GAUSSIAN = 1 } midiv_kernel;

typedef enum midiv_measure { MIDIV_MEASURE_KL = 0, MIDIV_MEASURE_BH = 1, MIDIV_MEASURE_CKL = 2 } midiv_measure;

typedef enum midiv_integrator {
  MIDIV_INTEGRATOR_IMPORTANCE = 0,
  MIDIV_INTEGRATOR_RIEMANN = 1
} midiv_integrator;

typedef enum midiv_method {
  MIDIV_METHOD_RD_KL = 0,
  MIDIV_METHOD_RD_BH = 1,
  MIDIV_METHOD_CKL = 2,
  MIDIV_METHOD_B2B_KL = 3,
  MIDIV_METHOD_B2B_BH = 4,
  MIDIV_METHOD_SVM_ON_DIVS = 5
} midiv_method;

typedef enum midiv_estimator {
  MIDIV_ESTIMATOR_KDE_EPANECHNIKOV = 0,
  MIDIV_ESTIMATOR_KDE_GAUSSIAN = 1,
  MIDIV_ESTIMATOR_GMM_AIC = 2
} midiv_estimator;

typedef enum midiv_threshold_kind {
  MIDIV_THRESHOLD_NONE = 0,
  MIDIV_THRESHOLD_LOOCV = 1,
  MIDIV_THRESHOLD_FIXED = 2
} midiv_threshold_kind;

typedef enum midiv_property { MIDIV_PROPERTY_P1 = 1, MIDIV_PROPERTY_P2 = 2, MIDIV_PROPERTY_P3 = 3 } midiv_property;

typedef struct midiv_dataset midiv_dataset;
typedef struct midiv_density midiv_density;
typedef struct midiv_model midiv_model;

typedef struct midiv_divergence_spec {
  midiv_measure measure;
  midiv_integrator integrator;
  size_t n_imp;
  size_t grid_points;
  double ratio_clip;
  double floor;
} midiv_divergence_spec;

typedef struct midiv_score {
  double value;
  double clipped_fraction;
  double ess;
  int low_ess;
} midiv_score;

typedef struct midiv_pipeline_config {
  midiv_method method;
  midiv_estimator estimator;
  midiv_divergence_spec spec;
  midiv_threshold_kind threshold_kind;
  double threshold_value;
  /* Divergence feeding the SVM: RD_KL, RD_BH or CKL. */
  midiv_method svm_feature;
  double svm_lambda;
  size_t svm_epochs;
  size_t gmm_max_components;
  /* <= 0 selects the rule-of-thumb bandwidth. */
  double bandwidth;
  /* 0 disables PCA. */
  size_t pca_components;
} midiv_pipeline_config;

MIDIV_API const char* midiv_version(void);
MIDIV_API const char* midiv_last_error(void);
MIDIV_API const char* midiv_status_name(midiv_status status);
MIDIV_API void midiv_string_free(char* s);

/* SHA-256 of a file as 64 lowercase hex characters plus a terminator. */
MIDIV_API midiv_status midiv_sha256_file(const char* path, char out_hex[65]);

/* ---- datasets (BAG_CSV: header "bag_id,label,f1,...,fd") ---- */
MIDIV_API midiv_status midiv_dataset_load(const char* path, midiv_dataset** out);
MIDIV_API midiv_status midiv_dataset_write(const midiv_dataset* data, const char* path);
MIDIV_API void midiv_dataset_free(midiv_dataset* data);
MIDIV_API size_t midiv_dataset_bag_count(const midiv_dataset* data);
MIDIV_API size_t midiv_dataset_dimension(const midiv_dataset* data);
MIDIV_API size_t midiv_dataset_instance_count(const midiv_dataset* data);
/* Number of bags with the given label (1 or 0). */
MIDIV_API size_t midiv_dataset_label_count(const midiv_dataset* data, int label);
/* Id of bag i, valid while the dataset lives; NULL when i is out of range. */
MIDIV_API const char* midiv_dataset_bag_id(const midiv_dataset* data, size_t i);
/* Label of bag i: 1, 0, or -1 when unlabelled or out of range. */
MIDIV_API int midiv_dataset_bag_label(const midiv_dataset* data, size_t i);

/* ---- simulation ---- */
/* JSON configuration of a named preset ("sim1".."sim6", "custom"). */
MIDIV_API midiv_status midiv_sim_config_preset(const char* scenario, char** out_json);
/* Draws one train/test experiment. latents_json (may be NULL) receives
 * {"train": [...], "test": [...]} with each bag's latent variables. */
MIDIV_API midiv_status midiv_simulate(const char* config_json, size_t n_train_pos,
                                      size_t n_train_neg, size_t n_test, uint64_t seed,
                                      midiv_dataset** train, midiv_dataset** test,
                                      char** latents_json);

/* ---- densities ---- */
MIDIV_API midiv_status midiv_density_fit_kde(const double* samples, size_t n, midiv_kernel kernel,
                                             double bandwidth, midiv_density** out);
MIDIV_API midiv_status midiv_density_fit_gmm(const double* samples, size_t n, size_t k_max,
                                             uint64_t seed, midiv_density** out);
MIDIV_API void midiv_density_free(midiv_density* d);
MIDIV_API midiv_status midiv_density_eval(const midiv_density* d, const double* x, size_t n,
                                          double* out);
MIDIV_API midiv_status midiv_density_sample(const midiv_density* d, size_t n, uint64_t seed,
                                            double* out);
MIDIV_API midiv_status midiv_density_to_json(const midiv_density* d, char** out_json);
MIDIV_API midiv_status midiv_density_from_json(const char* json, midiv_density** out);

/* ---- divergences ---- */
MIDIV_API void midiv_divergence_spec_default(midiv_divergence_spec* spec);
/* neg is required for CKL and ignored otherwise. */
MIDIV_API midiv_status midiv_divergence(const midiv_density* bag, const midiv_density* ref,
                                        const midiv_density* neg,
                                        const midiv_divergence_spec* spec, uint64_t seed,
                                        midiv_score* out);
MIDIV_API midiv_status midiv_rd_ratio(const midiv_density* bag, const midiv_density* pos,
                                      const midiv_density* neg, midiv_measure measure,
                                      const midiv_divergence_spec* spec, uint64_t seed,
                                      double* out);
MIDIV_API midiv_status midiv_check_property(midiv_property property, char** out_json);

/* ---- classification ---- */
MIDIV_API void midiv_pipeline_config_default(midiv_pipeline_config* config);
MIDIV_API midiv_status midiv_auc(const double* scores, const int* labels, size_t n, double* out);

MIDIV_API midiv_status midiv_model_fit(const midiv_dataset* train,
                                       const midiv_pipeline_config* config, uint64_t seed,
                                       midiv_model** out);
MIDIV_API void midiv_model_free(midiv_model* model);
MIDIV_API midiv_status midiv_model_to_json(const midiv_model* model, char** out_json);
MIDIV_API midiv_status midiv_model_from_json(const char* json, midiv_model** out);
/* scores must hold midiv_dataset_bag_count(data) values. */
MIDIV_API midiv_status midiv_model_score(const midiv_model* model, const midiv_dataset* data,
                                         uint64_t seed, double* scores);
/* Writes the model's decision threshold; fails when it has none. */
MIDIV_API midiv_status midiv_model_threshold(const midiv_model* model, double* out);

/* Fit on train, score test; EvalReport as JSON. */
MIDIV_API midiv_status midiv_evaluate(const midiv_dataset* train, const midiv_dataset* test,
                                      const midiv_pipeline_config* config, uint64_t seed,
                                      char** report_json);
MIDIV_API midiv_status midiv_cross_validate(const midiv_dataset* data,
                                            const midiv_pipeline_config* config, size_t k_folds,
                                            size_t repeats, int per_fold_auc, uint64_t seed,
                                            char** report_json);

/* Simulation study over a pos x neg grid. cells holds n_cells (pos, neg)
 * pairs; NULL with n_cells = 0 selects the Table 1 grid. methods holds
 * n_methods entries; NULL selects (RD_BH, RD_KL, CKL). threads = 0 uses
 * MIDIV_THREADS or the hardware concurrency. */
MIDIV_API midiv_status midiv_sim_study(const char* sim_config_json, const size_t* cells,
                                       size_t n_cells, size_t repetitions, size_t n_test,
                                       const midiv_method* methods, size_t n_methods,
                                       const midiv_pipeline_config* config, uint64_t seed,
                                       size_t threads, char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* MIDIV_MIDIV_H_ */

/* C interface to libfixrocket.
 *
 * Every function returns an fxr_status; on failure the message of the last
 * error on the calling thread is available from fxr_last_error(). Objects are
 * opaque handles released with their *_free function (NULL is accepted).
 * Strings returned through char** are owned by the caller and released with
 * fxr_string_free().
 */
#ifndef FIXROCKET_H
#define FIXROCKET_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FXR_API __declspec(dllexport)
#else
#define FXR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fxr_status {
  FXR_OK = 0,
  FXR_ERR_FORMAT = 1,
  FXR_ERR_SEQUENCING = 2,
  FXR_ERR_SCHEMA = 3,
  FXR_ERR_INCOMPATIBLE = 4,
  FXR_ERR_INTEGRITY = 5,
  FXR_ERR_DOMAIN = 6,
  FXR_ERR_INSUFFICIENT_DATA = 7,
  FXR_ERR_DEGENERATE = 8,
  FXR_ERR_DESIGN = 9,
  FXR_ERR_DATA = 10,
  FXR_ERR_SHAPE = 11,
  FXR_ERR_SPLIT = 12,
  FXR_ERR_FOLD = 13,
  FXR_ERR_AGGREGATION = 14,
  FXR_ERR_SPEC = 15,
  FXR_ERR_IO = 16,
  FXR_ERR_INVALID_ARGUMENT = 17,
  FXR_ERR_OUT_OF_MEMORY = 100,
  FXR_ERR_INTERNAL = 101
} fxr_status;

typedef enum fxr_passes { FXR_PASSES_SINGLE = 0, FXR_PASSES_FORWARD_BACKWARD = 1 } fxr_passes;
typedef enum fxr_balance { FXR_BALANCE_NONE = 0, FXR_BALANCE_WEIGHTS = 1, FXR_BALANCE_RESAMPLE = 2 } fxr_balance;
typedef enum fxr_split_kind { FXR_SPLIT_TRAIN = 0, FXR_SPLIT_VAL = 1, FXR_SPLIT_TEST = 2 } fxr_split_kind;

typedef struct fxr_cohort fxr_cohort;
typedef struct fxr_dataset fxr_dataset;
typedef struct fxr_bank fxr_bank;
typedef struct fxr_features fxr_features;
typedef struct fxr_split fxr_split;
typedef struct fxr_model fxr_model;
typedef struct fxr_trace fxr_trace;
typedef struct fxr_evaluation fxr_evaluation;

FXR_API const char* fxr_version(void);
FXR_API const char* fxr_last_error(void);
FXR_API const char* fxr_status_name(fxr_status status);
FXR_API void fxr_string_free(char* s);

/* ---- synthetic cohorts -------------------------------------------------- */

typedef struct fxr_cohort_spec {
  size_t subjects_per_class;
  size_t sessions_per_subject;
  size_t trials_per_session;
  double noise_level;
  double noise_knee_hz;
  double microsaccade_rate_hz;
  double microsaccade_amplitude;
  double tremor_amplitude;
  double tremor_min_hz;
  double tremor_max_hz;
  double signature_multiplier;
  double signature_lo_hz;
  double signature_hi_hz;
  double idiosyncrasy;
  double reference_cutoff_hz;
  double sample_rate;
  uint64_t seed;
} fxr_cohort_spec;

FXR_API void fxr_cohort_spec_default(fxr_cohort_spec* spec);
FXR_API fxr_status fxr_cohort_spec_manifest(const fxr_cohort_spec* spec, char** text);
FXR_API fxr_status fxr_cohort_generate(const fxr_cohort_spec* spec, unsigned threads, fxr_cohort** out);
FXR_API fxr_status fxr_cohort_write(const fxr_cohort* cohort, const fxr_cohort_spec* spec, const char* dir);
FXR_API fxr_status fxr_cohort_read(const char* dir, fxr_cohort** out);
FXR_API size_t fxr_cohort_size(const fxr_cohort* cohort);
FXR_API void fxr_cohort_free(fxr_cohort* cohort);

typedef struct fxr_filter_spec {
  int order;
  double cutoff_hz;
  double sample_rate;
  fxr_passes passes;
} fxr_filter_spec;

FXR_API void fxr_filter_spec_default(fxr_filter_spec* spec);

/* bands: n_bands (lo, hi) pairs in Hz. filter may be NULL. The table has one
 * CSV row per band with HC and PD mean power and their ratio. */
FXR_API fxr_status fxr_cohort_audit(const fxr_cohort* cohort, const double* bands, size_t n_bands,
                                    const fxr_filter_spec* filter, char** table);

/* ---- preprocessing and datasets ----------------------------------------- */

/* filter may be NULL to skip high-pass filtering. report may be NULL. */
FXR_API fxr_status fxr_preprocess(const fxr_cohort* cohort, const fxr_filter_spec* filter, fxr_dataset** out,
                                  char** report);
FXR_API fxr_status fxr_dataset_save(const fxr_dataset* dataset, const char* path);
FXR_API fxr_status fxr_dataset_load(const char* path, fxr_dataset** out);
FXR_API size_t fxr_dataset_size(const fxr_dataset* dataset);
FXR_API size_t fxr_dataset_subject_count(const fxr_dataset* dataset);
FXR_API void fxr_dataset_free(fxr_dataset* dataset);

/* ---- splits ------------------------------------------------------------- */

/* ratios: train, val, test fractions, or NULL for the defaults. */
FXR_API fxr_status fxr_split_make(const fxr_dataset* dataset, const double* ratios, uint64_t seed, fxr_split** out);
/* Writes k handles into out[0..k). */
FXR_API fxr_status fxr_folds_make(const fxr_dataset* dataset, size_t k, uint64_t seed, fxr_split** out);
FXR_API fxr_status fxr_split_save(const fxr_split* split, const char* path);
FXR_API fxr_status fxr_split_load(const char* path, fxr_split** out);
/* Trials of the dataset in each split. */
FXR_API fxr_status fxr_split_counts(const fxr_split* split, const fxr_dataset* dataset, size_t counts[3]);
FXR_API void fxr_split_free(fxr_split* split);

/* ---- kernels and features ----------------------------------------------- */

/* Named sub-stream of a global seed: "split", "folds", "kernels", "sampling". */
FXR_API uint64_t fxr_derive_seed(uint64_t seed, const char* stream);
FXR_API uint64_t fxr_kernel_seed(uint64_t seed);
FXR_API fxr_status fxr_bank_generate(size_t num_kernels, uint64_t kernel_seed, fxr_bank** out);
FXR_API fxr_status fxr_bank_save(const fxr_bank* bank, const char* path);
FXR_API void fxr_bank_free(fxr_bank* bank);

FXR_API fxr_status fxr_transform(const fxr_dataset* dataset, const fxr_bank* bank, unsigned threads,
                                 fxr_features** out);
FXR_API fxr_status fxr_features_save(const fxr_features* features, const char* path);
FXR_API fxr_status fxr_features_load(const char* path, fxr_features** out);
FXR_API size_t fxr_features_rows(const fxr_features* features);
FXR_API size_t fxr_features_columns(const fxr_features* features);
FXR_API uint64_t fxr_features_kernel_seed(const fxr_features* features);
FXR_API void fxr_features_free(fxr_features* features);

/* ---- models ------------------------------------------------------------- */

typedef struct fxr_model_config {
  size_t num_kernels;
  double alpha;
  fxr_balance balance;
  double threshold;
  unsigned threads;
} fxr_model_config;

FXR_API void fxr_model_config_default(fxr_model_config* config);

typedef struct fxr_model_info {
  double alpha;
  uint64_t kernel_seed;
  size_t num_kernels;
  size_t num_features;
  size_t active_features;
  size_t surviving_kernels;
} fxr_model_info;

/* Normalizer and ridge fitted on the split's training rows. */
FXR_API fxr_status fxr_train(const fxr_features* features, const fxr_split* split, const fxr_model_config* config,
                             uint64_t kernel_seed, fxr_model** out);
FXR_API fxr_status fxr_model_save(const fxr_model* model, const char* path);
FXR_API fxr_status fxr_model_load(const char* path, fxr_model** out);
FXR_API fxr_status fxr_model_info_get(const fxr_model* model, fxr_model_info* info);
FXR_API void fxr_model_free(fxr_model* model);

/* ---- feature detachment ------------------------------------------------- */

typedef struct fxr_sfd_options {
  double drop_per_step;
  double tradeoff_c;
  size_t min_features;
  int refit_on_train_val;
} fxr_sfd_options;

FXR_API void fxr_sfd_options_default(fxr_sfd_options* options);

typedef struct fxr_trace_info {
  size_t steps;
  size_t selected_step;
  size_t total_features;
  size_t retained_count;
  double retained_fraction;
  double full_val_accuracy;
  double selected_val_accuracy;
  double selected_score;
} fxr_trace_info;

FXR_API fxr_status fxr_detach(const fxr_features* features, const fxr_split* split, const fxr_model_config* config,
                              const fxr_sfd_options* options, uint64_t kernel_seed, fxr_model** model,
                              fxr_trace** trace);
FXR_API fxr_status fxr_trace_save(const fxr_trace* trace, const char* path);
FXR_API fxr_status fxr_trace_info_get(const fxr_trace* trace, fxr_trace_info* info);
FXR_API void fxr_trace_free(fxr_trace* trace);

/* Raw (unnormalized) values of the model's active feature columns. */
FXR_API fxr_status fxr_export_features(const fxr_model* model, const fxr_features* features, const char* path);

/* ---- evaluation and reports --------------------------------------------- */

typedef struct fxr_metrics {
  size_t count;
  size_t true_pd, false_pd, true_hc, false_hc;
  double accuracy;
  double uf1;
  double hc_f1;
  double pd_f1;
} fxr_metrics;

FXR_API fxr_status fxr_evaluate(const fxr_model* model, const fxr_features* features, const fxr_split* split,
                                fxr_split_kind which, double threshold, fxr_evaluation** out);
FXR_API fxr_status fxr_evaluation_metrics(const fxr_evaluation* evaluation, fxr_metrics* trial,
                                          fxr_metrics* subject);
FXR_API fxr_status fxr_evaluation_save_predictions(const fxr_evaluation* evaluation, const char* path);
FXR_API void fxr_evaluation_free(fxr_evaluation* evaluation);

/* Summary table and flat key=value metrics rebuilt from a predictions file. */
FXR_API fxr_status fxr_report_predictions(const char* predictions_path, double threshold, char** table,
                                          char** metrics);

/* ---- experiments -------------------------------------------------------- */

/* Per seed: kernel bank, transform, train, test evaluation. Outputs may be NULL. */
FXR_API fxr_status fxr_experiment(const fxr_dataset* dataset, const fxr_split* split, const fxr_model_config* config,
                                  const uint64_t* seeds, size_t n_seeds, char** table, char** long_table,
                                  char** attribute_table);

typedef struct fxr_grid_config {
  const size_t* kernel_counts;
  size_t n_kernel_counts;
  const double* alphas;
  size_t n_alphas;
  size_t folds;
  uint64_t seed;
  fxr_balance balance;
  unsigned threads;
} fxr_grid_config;

FXR_API fxr_status fxr_grid_search(const fxr_dataset* dataset, const fxr_grid_config* config, char** table,
                                   char** long_table, size_t* best_kernels, double* best_alpha);

typedef struct fxr_sweep_config {
  const double* cutoffs; /* 0 disables filtering */
  size_t n_cutoffs;
  int order;
  fxr_passes passes;
  fxr_model_config model;
  uint64_t split_seed;
  const uint64_t* seeds;
  size_t n_seeds;
} fxr_sweep_config;

FXR_API fxr_status fxr_cutoff_sweep(const fxr_cohort* cohort, const fxr_sweep_config* config, char** table,
                                    char** long_table);

#ifdef __cplusplus
}
#endif

#endif

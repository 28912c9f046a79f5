/*
 * C interface to the entropy-weighted semi-supervised contrastive learning
 * library.
 *
 * Objects are opaque handles created by *_create / *_load functions and
 * released with the matching *_destroy. Every function returns an
 * ssce_status; on failure a description is available from
 * ssce_last_error() on the calling thread until the next failing call.
 *
 * String outputs use the (buffer, capacity, required) convention: the
 * function writes at most `capacity` bytes including the terminator and
 * stores the full length (excluding the terminator) in `*required`. Pass a
 * NULL buffer to query the length.
 */
#ifndef SSCE_SSCE_H
#define SSCE_SSCE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SSCE_BUILDING_LIBRARY)
#    define SSCE_API __declspec(dllexport)
#  else
#    define SSCE_API __declspec(dllimport)
#  endif
#else
#  define SSCE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ssce_status {
  SSCE_OK = 0,
  SSCE_ERR_INVALID_ARGUMENT = 1,
  SSCE_ERR_CONFIG = 2,
  SSCE_ERR_IO = 3,
  SSCE_ERR_PARSE = 4,
  SSCE_ERR_NUMERICAL = 5,
  SSCE_ERR_INTERNAL = 6
} ssce_status;

typedef struct ssce_config ssce_config;
typedef struct ssce_dataset ssce_dataset;
typedef struct ssce_trainer ssce_trainer;
typedef struct ssce_prob_table ssce_prob_table;

SSCE_API const char* ssce_last_error(void);
SSCE_API const char* ssce_status_string(ssce_status status);
SSCE_API const char* ssce_version(void);

/* ------------------------------------------------------------------ config */

/* preset: "full" or "desk". */
SSCE_API ssce_status ssce_config_create(const char* preset, ssce_config** out);
SSCE_API void ssce_config_destroy(ssce_config* config);
SSCE_API ssce_status ssce_config_clone(const ssce_config* config, ssce_config** out);
/* Applies `section.key = value` lines from a file on top of the current values. */
SSCE_API ssce_status ssce_config_load_file(ssce_config* config, const char* path);
SSCE_API ssce_status ssce_config_set(ssce_config* config, const char* key, const char* value);
SSCE_API ssce_status ssce_config_get(const ssce_config* config, const char* key, char* buffer,
                                     size_t capacity, size_t* required);
SSCE_API ssce_status ssce_config_validate(const ssce_config* config);
/* Full canonical text, one `section.key = value` per line. */
SSCE_API ssce_status ssce_config_to_string(const ssce_config* config, char* buffer,
                                           size_t capacity, size_t* required);
SSCE_API size_t ssce_config_key_count(void);
SSCE_API const char* ssce_config_key_at(size_t index);

/* ----------------------------------------------------------------- dataset */

typedef struct ssce_cluster_params {
  int num_classes;
  int dim;
  int per_class;
  double cluster_sigma;
  double separation;
  uint64_t seed;
} ssce_cluster_params;

typedef struct ssce_dataset_info {
  size_t rows;
  size_t dim;
  int num_classes;
  size_t labeled;
  size_t unlabeled;
  size_t test;
} ssce_dataset_info;

SSCE_API ssce_status ssce_dataset_generate(const ssce_cluster_params* params, ssce_dataset** out);
SSCE_API ssce_status ssce_dataset_split(ssce_dataset* dataset, int labels_per_class,
                                        double test_fraction, uint64_t seed);
/* `comment` may be NULL; otherwise each of its lines is written as `# line`. */
SSCE_API ssce_status ssce_dataset_save_csv(const ssce_dataset* dataset, const char* path,
                                           const char* comment);
/* Same, with unlabeled labels replaced by -1. */
SSCE_API ssce_status ssce_dataset_save_trainer_view_csv(const ssce_dataset* dataset,
                                                        const char* path, const char* comment);
SSCE_API ssce_status ssce_dataset_load_csv(const char* path, ssce_dataset** out);
SSCE_API ssce_status ssce_dataset_info_get(const ssce_dataset* dataset, ssce_dataset_info* out);
SSCE_API void ssce_dataset_destroy(ssce_dataset* dataset);

/* ----------------------------------------------------------------- trainer */

typedef struct ssce_metric_row {
  uint64_t step;
  int epoch;
  double lr;
  double loss;
  size_t confident;
  size_t entropy_selected;
  double mean_unlabeled_weight;
  int has_test_acc;
  double test_acc;
} ssce_metric_row;

#define SSCE_WEIGHT_BINS 10

typedef struct ssce_eval_report {
  double test_accuracy;
  double pseudo_coverage;
  int has_pseudo_precision;
  double pseudo_precision;
  size_t unlabeled_count;
  size_t weight_histogram[SSCE_WEIGHT_BINS];
} ssce_eval_report;

/* Fresh model for the dataset's dimension and class count. */
SSCE_API ssce_status ssce_trainer_create(const ssce_config* config, const ssce_dataset* dataset,
                                         ssce_trainer** out);
SSCE_API ssce_status ssce_trainer_load_checkpoint(const char* path, ssce_trainer** out);
SSCE_API ssce_status ssce_trainer_save_checkpoint(const ssce_trainer* trainer, const char* path);
/* Runs at most max_steps further steps (or to the end when max_steps is 0).
 * When checkpoint_path is non-NULL a checkpoint is written there every
 * train.checkpoint_every steps. */
SSCE_API ssce_status ssce_trainer_run(ssce_trainer* trainer, const ssce_dataset* dataset,
                                      uint64_t max_steps, const char* checkpoint_path);
SSCE_API ssce_status ssce_trainer_progress(const ssce_trainer* trainer, uint64_t* step,
                                           uint64_t* total_steps);
SSCE_API ssce_status ssce_trainer_metric_count(const ssce_trainer* trainer, size_t* count);
SSCE_API ssce_status ssce_trainer_metric_at(const ssce_trainer* trainer, size_t index,
                                            ssce_metric_row* out);
SSCE_API ssce_status ssce_trainer_write_metrics(const ssce_trainer* trainer, const char* path,
                                                const char* comment);
/* Copy of the configuration the trainer runs with. */
SSCE_API ssce_status ssce_trainer_config(const ssce_trainer* trainer, ssce_config** out);
SSCE_API ssce_status ssce_trainer_evaluate(const ssce_trainer* trainer,
                                           const ssce_dataset* dataset, ssce_eval_report* out);
/* Plain-text and CSV renderings of a report. */
SSCE_API ssce_status ssce_eval_report_format(const ssce_eval_report* report, int csv,
                                             char* buffer, size_t capacity, size_t* required);
SSCE_API void ssce_trainer_destroy(ssce_trainer* trainer);

/* -------------------------------------------------------------- gradcheck */

typedef struct ssce_gradcheck_params {
  double epsilon;
  uint64_t seed;
  int trials;
  int check_ssc;
  int check_ssc_e;
  int check_encoder;
} ssce_gradcheck_params;

typedef struct ssce_gradcheck_result {
  int has_ssc;
  double ssc_max_rel_error;
  int has_ssc_e;
  double ssc_e_max_rel_error;
  int has_encoder;
  double encoder_max_rel_error;
  double tolerance;
} ssce_gradcheck_result;

SSCE_API void ssce_gradcheck_defaults(ssce_gradcheck_params* params);
SSCE_API ssce_status ssce_gradcheck_run(const ssce_gradcheck_params* params,
                                        ssce_gradcheck_result* out);

/* ------------------------------------------------------------ entropy gate */

typedef enum ssce_decision_kind {
  SSCE_DECISION_CONFIDENT = 0,
  SSCE_DECISION_ENTROPY_SELECTED = 1,
  SSCE_DECISION_REJECTED = 2
} ssce_decision_kind;

typedef struct ssce_gate_params {
  double tau;
  double tau_ent;
  double w_min;
  double lambda_reject;
  int entropy_gate_enabled;
} ssce_gate_params;

typedef struct ssce_decision {
  size_t sample_index;
  ssce_decision_kind kind;
  int assigned_label;
  double weight;
  double entropy;
  double max_prob;
} ssce_decision;

SSCE_API const char* ssce_decision_kind_name(ssce_decision_kind kind);

/* Probability rows: CSV with header p_0,...,p_{C-1}. */
SSCE_API ssce_status ssce_prob_table_load_csv(const char* path, ssce_prob_table** out);
/* Random rows: softmax of Gaussian scores scaled by `sharpness`. */
SSCE_API ssce_status ssce_prob_table_synthetic(size_t rows, int num_classes, double sharpness,
                                               uint64_t seed, ssce_prob_table** out);
SSCE_API ssce_status ssce_prob_table_shape(const ssce_prob_table* table, size_t* rows,
                                           int* num_classes);
SSCE_API void ssce_prob_table_destroy(ssce_prob_table* table);

/* `out` must hold one decision per table row. */
SSCE_API ssce_status ssce_gate_assign(const ssce_prob_table* table, const ssce_gate_params* params,
                                      ssce_decision* out);

/* ------------------------------------------------------------ metrics logs */

typedef struct ssce_log_summary {
  char method[16];
  int labels_per_class; /* -1 when the log does not record it */
  uint64_t seed;
  int has_final_test_acc;
  double final_test_acc;
  size_t rows;
} ssce_log_summary;

SSCE_API ssce_status ssce_metrics_log_summary(const char* path, ssce_log_summary* out);

#ifdef __cplusplus
}
#endif

#endif /* SSCE_SSCE_H */

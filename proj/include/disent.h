/* Copyright 2026 The Disent Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

/* C API of the disent shared library.
 *
 * Conventions:
 *   - every function returns a dsnt_status; DSNT_OK is 0
 *   - on failure, dsnt_last_error() returns a thread-local message
 *   - objects are opaque handles released with their dsnt_*_close function
 *   - strings produced by the library are heap-allocated and must be
 *     released with dsnt_string_free
 *   - configuration strings use `key = value` lines ('#' starts a comment)
 */

#ifndef DISENT_H_
#define DISENT_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dsnt_status {
  DSNT_OK = 0,
  DSNT_ERR_INVALID_ARGUMENT = 1,
  DSNT_ERR_DIMENSION = 2,
  DSNT_ERR_CONTRACT = 3,
  DSNT_ERR_EMPTY_INPUT = 4,
  DSNT_ERR_PARSE = 5,
  DSNT_ERR_IO = 6,
  DSNT_ERR_PERSISTENCE = 7,
  DSNT_ERR_TRAINING = 8,
  DSNT_ERR_INTERNAL = 9
} dsnt_status;

const char* dsnt_status_name(dsnt_status status);
const char* dsnt_version_string(void);

/* Thread-local message describing the most recent failure in this thread. */
const char* dsnt_last_error(void);

void dsnt_string_free(char* s);

typedef struct dsnt_model dsnt_model;
typedef struct dsnt_dataset dsnt_dataset;
typedef struct dsnt_synonyms dsnt_synonyms;

/* --- synthetic data ------------------------------------------------------ */

/* Writes train.tsv, test_source.tsv, test_target.tsv, vocab.txt and
 * synonyms.tsv into out_dir. spec_kv keys: classes, rho_core, rho_src,
 * rho_tgt, len_min, len_max, core_variants, spur_variants, spur_tokens,
 * filler_groups, filler_group_size, filler_rare_mass, seed, n_train,
 * n_test_source, n_test_target. summary_json_out (optional) receives
 * per-file example counts. */
dsnt_status dsnt_gen_data(const char* spec_kv, const char* out_dir,
                          char** summary_json_out);

/* --- datasets ------------------------------------------------------------- */

dsnt_status dsnt_dataset_open(const char* path, const char* vocab_path,
                              dsnt_dataset** out);
void dsnt_dataset_close(dsnt_dataset* ds);
size_t dsnt_dataset_size(const dsnt_dataset* ds);

dsnt_status dsnt_synonyms_open(const char* path, const char* vocab_path,
                               dsnt_synonyms** out);
void dsnt_synonyms_close(dsnt_synonyms* syn);

/* --- training ------------------------------------------------------------- */

/* config_kv keys follow the train config (family, encoder, d, hidden, latent,
 * heads, classes, beta, lambda_tc, train_samples, eval_samples, lr, adam_b1,
 * adam_b2, adam_eps, batch, epochs, patience, seed, ...). vocab_size is
 * derived from the dataset vocabulary. Pass val_set = NULL to carve a
 * deterministic validation split out of train_set (config key val_fraction,
 * default 0.15). record_json_out (optional) receives the experiment record
 * as one JSON line. */
dsnt_status dsnt_train(const char* config_kv, const dsnt_dataset* train_set,
                       const dsnt_dataset* val_set, dsnt_model** out,
                       char** record_json_out);

dsnt_status dsnt_model_save(const dsnt_model* model, const char* path);
dsnt_status dsnt_model_load(const char* path, dsnt_model** out);
void dsnt_model_close(dsnt_model* model);

/* Resolved model configuration as `key = value` text. */
dsnt_status dsnt_model_config(const dsnt_model* model, char** config_kv_out);

/* probs_out must hold `classes` doubles; label_out receives the argmax.
 * mode: 0 = family default, 1 = regularizer, 2 = vib, 3 = vib_tc. */
dsnt_status dsnt_model_predict(const dsnt_model* model, const int32_t* tokens,
                               size_t n_tokens, int mode, int eval_samples,
                               uint64_t seed, int32_t* label_out,
                               double* probs_out);

/* Accuracy of the model on a dataset under its default decoding. */
dsnt_status dsnt_evaluate_accuracy(const dsnt_model* model,
                                   const dsnt_dataset* ds, int eval_samples,
                                   uint64_t seed, double* accuracy_out);

/* --- robustness ------------------------------------------------------------ */

/* attack_kv keys: attack (greedy|genetic), scoring (prob_drop|saliency),
 * budget_frac, budget, max_queries, population, generations, seed,
 * eval_samples. report receives JSON
 * {"clean":..., "under_attack":..., "mean_queries":..., "mean_substitutions":...}. */
dsnt_status dsnt_evaluate_attack(const dsnt_model* model,
                                 const dsnt_dataset* test,
                                 const dsnt_synonyms* synonyms,
                                 const char* attack_kv, char** report_json_out);

/* Sweep one hyperparameter (sweep_kv: param = beta|lambda_tc|gamma,
 * grid = comma list, seeds = comma list, jobs = int, plus attack keys).
 * records receives one experiment-record JSON object per line. */
dsnt_status dsnt_sweep(const char* config_kv, const char* sweep_kv,
                       const dsnt_dataset* train_set,
                       const dsnt_dataset* val_set, const dsnt_dataset* test,
                       const dsnt_synonyms* synonyms,
                       char** records_jsonl_out);

/* --- information oracle ----------------------------------------------------- */

/* kv keys: joints (count), nx, ny, nz, seed, betas (comma list).
 * summary receives JSON with per-check counts; status is DSNT_OK only if
 * every sampled joint satisfied the bound chain. */
dsnt_status dsnt_verify_bounds(const char* kv, char** summary_json_out);

/* --- saliency ---------------------------------------------------------------- */

/* Tokenizes text on whitespace against vocab (unknown tokens map to <unk>),
 * writes the heatmap JSON to out_path (optional) and optionally returns the
 * document via heatmap_json_out. When the model has K >= 2 heads the head
 * divergence is stored in divergence_out and *divergence_defined_out is set
 * to 1; otherwise *divergence_defined_out is set to 0. */
dsnt_status dsnt_saliency(const dsnt_model* model, const char* vocab_path,
                          const char* text, const char* out_path,
                          char** heatmap_json_out, double* divergence_out,
                          int* divergence_defined_out);

#ifdef __cplusplus
}
#endif

#endif /* DISENT_H_ */

/* Copyright 2026 The Colo Authors.
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

/* C interface of libcolo. Every call returns a status; on failure the
 * message is available from colo_last_error() on the same thread until the
 * next failing call. Handles are opaque and owned by the caller. */

#ifndef COLO_COLO_H_
#define COLO_COLO_H_

#include <stddef.h>
#include <stdint.h>

#if defined(COLO_BUILDING_LIBRARY)
#define COLO_API __attribute__((visibility("default")))
#else
#define COLO_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum colo_status {
  COLO_OK = 0,
  COLO_ERR_INVALID_ARGUMENT = 1,
  COLO_ERR_IO = 2,
  COLO_ERR_PARSE = 3,
  COLO_ERR_CONFIG = 4,
  COLO_ERR_STATE = 5,
  COLO_ERR_INTERNAL = 6
} colo_status;

typedef enum colo_regime {
  COLO_REGIME_ONLINE = 0,
  COLO_REGIME_NAIVE = 1,
  COLO_REGIME_BCE = 2
} colo_regime;

typedef struct colo_scores {
  double r1;
  double r2;
  double rl;
  double js2;
} colo_scores;

typedef struct colo_config colo_config;
typedef struct colo_model colo_model;

COLO_API const char* colo_version(void);
COLO_API const char* colo_last_error(void);

/* Configuration: defaults, then files, then single-key overrides. */
COLO_API colo_status colo_config_new(colo_config** out);
COLO_API void colo_config_free(colo_config* config);
COLO_API colo_status colo_config_load(colo_config* config, const char* path);
/* `key` is "section.key". */
COLO_API colo_status colo_config_set(colo_config* config, const char* key,
                                     const char* value);
/* Copies the value with a terminating NUL; `len` receives the full length. */
COLO_API colo_status colo_config_get(const colo_config* config, const char* key,
                                     char* buf, size_t cap, size_t* len);
/* Checks every value without running anything. */
COLO_API colo_status colo_config_validate(const colo_config* config);
COLO_API colo_status colo_config_write(const colo_config* config,
                                       const char* path);

/* Whole runs. An empty or NULL data_dir synthesizes the corpus from the
 * config. Each writes resolved.cfg into out_dir. */
COLO_API colo_status colo_run_synth(const colo_config* config,
                                    const char* out_dir);
COLO_API colo_status colo_run_train_ext(const colo_config* config,
                                        const char* data_dir,
                                        const char* out_dir,
                                        colo_regime regime);
COLO_API colo_status colo_run_eval(const colo_config* config,
                                   const char* checkpoint, const char* data_dir,
                                   const char* out_dir, const char* systems,
                                   const char* reranker_checkpoint);
COLO_API colo_status colo_run_train_abs(const colo_config* config,
                                        const char* data_dir,
                                        const char* out_dir);
COLO_API colo_status colo_run_eval_abs(const colo_config* config,
                                       const char* checkpoint,
                                       const char* data_dir,
                                       const char* out_dir);
COLO_API colo_status colo_run_bench(const colo_config* config,
                                    const char* checkpoint,
                                    const char* data_dir, const char* out_dir);
COLO_API colo_status colo_run_cost(const colo_config* config,
                                   const char* data_dir, const char* out_dir);
COLO_API colo_status colo_run_viz(const colo_config* config,
                                  const char* checkpoint, const char* data_dir,
                                  const char* out_dir, int svg, int raw,
                                  size_t* docs, size_t* ordered);
COLO_API colo_status colo_run_score(const char* hyp_path, const char* ref_path,
                                    const char* out_dir, colo_scores* mean);

/* Metrics over token ids. */
COLO_API colo_status colo_score_tokens(const int32_t* cand, size_t cand_len,
                                       const int32_t* ref, size_t ref_len,
                                       colo_scores* out);
/* Number of candidates enumerated from `clipped` sentences. */
COLO_API colo_status colo_candidate_count(size_t clipped, const int* sizes,
                                          size_t num_sizes, size_t* out);

/* Extractive models. */
COLO_API colo_status colo_model_load(const char* path, colo_model** out);
COLO_API void colo_model_free(colo_model* model);
COLO_API colo_status colo_model_num_params(const colo_model* model,
                                           size_t* out);
/* Selects sentences of a tokenized document by candidate cosine. Writes up
 * to `cap` indices; `count` receives the number selected. */
COLO_API colo_status colo_model_select(const colo_model* model,
                                       const int32_t* const* sentences,
                                       const size_t* lengths,
                                       size_t num_sentences, const int* sizes,
                                       size_t num_sizes, int n_prime,
                                       int* indices, size_t cap,
                                       size_t* count);

#ifdef __cplusplus
}  /* extern "C" */
#endif

#endif  /* COLO_COLO_H_ */

/* Copyright (c) the JRC Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* Public C API of libjrc, a unified lossy/lossless JPEG recompression codec.
 *
 * A loaded model (entropy-model checkpoint plus optional learned
 * quantization tables) is held behind an opaque handle. All functions
 * return a jrc_status; on failure jrc_last_error() gives a detail
 * message for the calling thread. Buffers returned through out-pointers
 * are owned by the caller and released with jrc_buffer_free().
 */

#ifndef JRC_JRC_H_
#define JRC_JRC_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum jrc_status {
  JRC_OK = 0,
  JRC_ERR_IO = 1,               /* file not readable/writable */
  JRC_ERR_FORMAT = 2,           /* malformed input (JPEG, container, config) */
  JRC_ERR_UNSUPPORTED = 3,      /* valid but out-of-scope input (e.g. progressive JPEG) */
  JRC_ERR_CORRUPT = 4,          /* checksum or truncation detected */
  JRC_ERR_MODEL_MISMATCH = 5,   /* container was made with a different checkpoint */
  JRC_ERR_INVALID_ARGUMENT = 6,
  JRC_ERR_NUMERIC = 7,          /* non-finite loss or value during training */
  JRC_ERR_INTERNAL = 8
} jrc_status;

typedef enum jrc_mode {
  JRC_MODE_LOSSLESS = 0, /* Q_t = Q_t' = the input's own tables */
  JRC_MODE_LOSSY = 1     /* learned tables from the checkpoint */
} jrc_mode;

typedef struct jrc_model_t jrc_model_t;

const char* jrc_version(void);
const char* jrc_status_string(jrc_status status);

/* Thread-local message describing the most recent failure ("" if none). */
const char* jrc_last_error(void);

/* Load a "JRNN" checkpoint file. */
jrc_status jrc_model_load(const char* checkpoint_path, jrc_model_t** out_model);
void jrc_model_free(jrc_model_t* model);

/* SHA-256 content hash of the checkpoint; embedded in every container. */
jrc_status jrc_model_hash(const jrc_model_t* model, uint8_t out_hash[32]);

/* Entropy-model estimate of the emitted stream, filled by jrc_compress.
 * total_bits slightly overshoots the actual payload (the estimate prices
 * each symbol from the continuous model; the coder then pays small
 * table-quantization and carry overheads). */
typedef struct jrc_rate_report {
  double bits_coeffs; /* masked DCT coefficient planes */
  double bits_latent; /* dense latent grids */
  double bits_hyper;  /* dense hyper-latent grids */
  double total_bits;
  double bpp; /* total_bits over the image's pixel count */
} jrc_rate_report;

/* Re-encode a baseline JFIF file into a JRC container. out_report may be
 * NULL. */
jrc_status jrc_compress(const jrc_model_t* model, const uint8_t* jpeg_data,
                        size_t jpeg_size, jrc_mode mode, uint8_t** out_data,
                        size_t* out_size, jrc_rate_report* out_report);

/* Decode a JRC container back into a baseline JFIF file. */
jrc_status jrc_decompress(const jrc_model_t* model, const uint8_t* container_data,
                          size_t container_size, uint8_t** out_jpeg,
                          size_t* out_size);

/* Releases any buffer handed out through an out-pointer above, including
 * the text from jrc_tables_dump. */
void jrc_buffer_free(void* data);

/* Run the two-stage training procedure and write the checkpoint to
 * out_checkpoint_path. config_json fields:
 *   "train_config": model/schedule/lambda/seed block (see README);
 *                   missing fields take their built-in defaults
 *   "corpus_jpegs": array of baseline JPEG tile paths
 *   "init_checkpoint": optional path; resume from it (config must match)
 *   "run_stage1", "run_stage2": optional booleans (default true) */
jrc_status jrc_train(const char* config_json, const char* out_checkpoint_path);

/* Deterministically crop + JPEG-encode a training corpus from a JSON
 * manifest ({"sources": [...], "crop_size", "quality", "seed",
 * "crops_per_source", "out_dir"}). */
jrc_status jrc_prepare_corpus(const char* manifest_json);

/* Rate-distortion sweep; writes a CSV to out_csv_path. config_json:
 *   "lossless_checkpoint": path coded in lossless mode for the first row
 *   "entries": array of {"checkpoint", "lambda_r", "lambda_d"}
 *   "test_jpegs": array of baseline JPEG paths */
jrc_status jrc_eval(const char* config_json, const char* out_csv_path);

/* Human-readable dump of the learned tables stored in a checkpoint. */
jrc_status jrc_tables_dump(const char* checkpoint_path, char** out_text);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* JRC_JRC_H_ */

/*
 * Copyright 2026 The BiasLens Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface to the BiasLens workbench.
 *
 * Every function returns a bl_status. On failure a human-readable message
 * is available from bl_last_error() on the calling thread until the next
 * call into the library. Buffers handed out by the library are released
 * with bl_buffer_free().
 */

#ifndef BIASLENS_BIASLENS_H_
#define BIASLENS_BIASLENS_H_

#include <stddef.h>
#include <stdint.h>

#if defined(BIASLENS_BUILDING_LIBRARY)
#define BL_API __attribute__((visibility("default")))
#else
#define BL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bl_status {
  BL_OK = 0,
  BL_INVALID_ARGUMENT = 1,
  BL_NOT_FOUND = 2,
  BL_PARSE_ERROR = 3,
  BL_IO_ERROR = 4,
  BL_CONFLICT = 5,
  BL_CORRUPT = 6,
  BL_UNPROCESSABLE = 7,
  BL_INTERNAL = 8
} bl_status;

BL_API const char* bl_version(void);
BL_API const char* bl_status_name(bl_status status);
BL_API const char* bl_last_error(void);

typedef struct bl_buffer {
  char* data;
  size_t size;
} bl_buffer;

BL_API void bl_buffer_free(bl_buffer* buffer);

/* ---- offline computation ---------------------------------------------- */

typedef struct bl_compute_summary {
  uint64_t total_points;
  uint64_t vocabulary_size;
  uint32_t attribute_count;
  uint32_t direction_count; /* summed over attributes */
  uint64_t rows_written;
  double elapsed_seconds;
} bl_compute_summary;

/*
 * Loads one corpus, counts co-occurrences over `shards` slices in parallel
 * and writes `<out_dir>/<run_name>.metrics.tsv` holding every requested
 * metric kind ("npmi", "pmi", "jaccard", "dice") for every attribute. The
 * file appears atomically; on failure nothing is left behind.
 */
BL_API bl_status bl_compute(const char* run_name, const char* corpus_path, const char* attributes_path,
                            const char* const* metric_kinds, size_t metric_count, const char* out_dir,
                            uint32_t shards, bl_compute_summary* summary);

/* Writes `<dir>/<run_name>.metrics.tsv` path into `out` (NUL-terminated). */
BL_API bl_status bl_artifact_path(const char* dir, const char* run_name, bl_buffer* out);

/* ---- report export ----------------------------------------------------- */

/*
 * Report of the flagged labels in `session_path` across every artifact in
 * `artifacts_dir` and every direction column, as "tsv" or "lines". The
 * bytes match GET /api/export for the same state.
 */
BL_API bl_status bl_export_report(const char* artifacts_dir, const char* session_path, const char* format,
                                  bl_buffer* out);

/* ---- fixtures ---------------------------------------------------------- */

typedef struct bl_fixture_options {
  const char* name; /* tiny, continent, random, scale, clusters */
  const char* out_path;
  const char* attributes_path; /* optional: attribute vocabulary file */
  uint64_t seed;
  uint64_t points; /* 0: fixture default */
  uint64_t labels; /* 0: fixture default */
} bl_fixture_options;

BL_API bl_status bl_write_fixture(const bl_fixture_options* options);

/* ---- interactive service ----------------------------------------------- */

typedef struct bl_server bl_server;

typedef struct bl_server_config {
  const char* artifacts_dir;
  const char* embeddings_path; /* optional */
  const char* session_path;
  const char* workspace_id;    /* optional: defaults to the artifact dir name */
  const char* host;            /* optional: defaults to 127.0.0.1 */
  int port;                    /* 0 picks a free port */
  const char* static_dir;      /* optional */
  const char* cors_origin;     /* optional: defaults to "*" */
  int init_session;            /* nonzero: start empty when the file is missing */
  int bind_socket;             /* zero: request handling only, no listener */
} bl_server_config;

/*
 * Checks the inputs and binds the listening socket. Artifacts load in the
 * background once bl_server_run() starts; until then the API answers 503.
 */
BL_API bl_status bl_server_create(const bl_server_config* config, bl_server** out);
BL_API int bl_server_port(const bl_server* server);
/* Loads the workspace synchronously (no-op once loaded). */
BL_API bl_status bl_server_load(bl_server* server);
/* Serves until bl_server_stop(). Returns the load error, if loading failed. */
BL_API bl_status bl_server_run(bl_server* server);
/* Thread-safe. */
BL_API bl_status bl_server_stop(bl_server* server);
/* Handles one request in-process. `query` is the raw query string or NULL. */
BL_API bl_status bl_server_handle(bl_server* server, const char* method, const char* path, const char* query,
                                  const char* body, int* http_status, bl_buffer* response);
/* Persists the session and releases the server. */
BL_API bl_status bl_server_destroy(bl_server* server);

#ifdef __cplusplus
}
#endif

#endif /* BIASLENS_BIASLENS_H_ */

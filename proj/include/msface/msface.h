#ifndef MSFACE_MSFACE_H
#define MSFACE_MSFACE_H

#include <stddef.h>

#if defined(_WIN32)
#if defined(MSFACE_BUILDING)
#define MSF_API __declspec(dllexport)
#else
#define MSF_API __declspec(dllimport)
#endif
#else
#define MSF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum msf_status {
  MSF_OK = 0,
  MSF_MALFORMED_CODE,
  MSF_OUT_OF_RANGE,
  MSF_DUPLICATE_KEY,
  MSF_IO_FAILURE,
  MSF_EMPTY_SPLIT,
  MSF_INVALID_SPLIT,
  MSF_UNSUPPORTED_FORMAT,
  MSF_RAGGED_ROWS,
  MSF_NON_NUMERIC_CELL,
  MSF_BAD_FRACTION,
  MSF_TOO_SMALL,
  MSF_SHAPE_MISMATCH,
  MSF_EMPTY_TRAINING,
  MSF_BAD_DIMENSION,
  MSF_DIMENSION_MISMATCH,
  MSF_BAD_EXPONENT,
  MSF_LENGTH_MISMATCH,
  MSF_EMPTY,
  MSF_LABEL_MISMATCH,
  MSF_WEIGHT_COUNT_MISMATCH,
  MSF_BAD_CONFIG,
  MSF_INVALID_ARGUMENT,
  MSF_INTERNAL
} msf_status;

/* Message of the most recent failure on the calling thread. */
MSF_API const char* msf_last_error(void);
MSF_API const char* msf_status_string(msf_status status);
MSF_API const char* msf_version(void);

typedef struct msf_sample_key {
  int person;
  int session;
  int sensor;       /* 0 VIS, 1 NIR, 2 TH */
  int illumination; /* 0 NA, 1 IR, 2 AR */
  int sample;
} msf_sample_key;

MSF_API msf_status msf_parse_code(const char* code, int strict, msf_sample_key* out);
/* Writes the 8-character code plus terminator; buffer needs 9 bytes. */
MSF_API msf_status msf_format_code(const msf_sample_key* key, char* buffer, size_t size);

/* Configuration: known keys with defaults, set from files or key/value. */
typedef struct msf_config msf_config;

MSF_API msf_status msf_config_create(msf_config** out);
MSF_API void msf_config_destroy(msf_config* config);
MSF_API msf_status msf_config_load(msf_config* config, const char* path);
MSF_API msf_status msf_config_set(msf_config* config, const char* key, const char* value);
/* The returned string stays valid until the key is changed or the config destroyed. */
MSF_API msf_status msf_config_get(const msf_config* config, const char* key, const char** value);
MSF_API size_t msf_config_key_count(void);
MSF_API const char* msf_config_key_name(size_t index);
MSF_API const char* msf_config_key_default(size_t index);
MSF_API const char* msf_config_key_help(size_t index);

typedef void (*msf_log_fn)(const char* message, void* user);

/* Runs synth, scan, extract, sweep, mismatch, fuse or grid. */
MSF_API msf_status msf_run(const msf_config* config, const char* command, msf_log_fn log, void* user);
MSF_API size_t msf_command_count(void);
MSF_API const char* msf_command_name(size_t index);

/* Distance tables (probe rows by template columns). */
typedef struct msf_table msf_table;

MSF_API msf_status msf_table_load(const char* path, msf_table** out);
MSF_API void msf_table_destroy(msf_table* table);
MSF_API size_t msf_table_rows(const msf_table* table);
MSF_API size_t msf_table_cols(const msf_table* table);
MSF_API double msf_table_at(const msf_table* table, size_t probe, size_t tmpl);
MSF_API int msf_table_template_person(const msf_table* table, size_t tmpl);
/* Predicted person per probe into out[rows]. */
MSF_API msf_status msf_table_identify(const msf_table* table, int* out, size_t count);
/* Truth labels from a "probe,person" file into out[rows]. */
MSF_API msf_status msf_table_load_truth(const msf_table* table, const char* path, int* out, size_t count);

MSF_API msf_status msf_fractional_distance(const double* x, const double* y, size_t n, double p,
                                           double* out);

/* Weight grid search over two or three aligned tables. */
typedef struct msf_grid msf_grid;

MSF_API msf_status msf_grid_search(const msf_table* const* tables, size_t count, const int* truth,
                                   size_t n, double step, msf_grid** out);
MSF_API void msf_grid_destroy(msf_grid* grid);
MSF_API double msf_grid_best_alpha(const msf_grid* grid);
MSF_API double msf_grid_best_beta(const msf_grid* grid);
MSF_API double msf_grid_best_rate(const msf_grid* grid);
MSF_API int msf_grid_best_in_simplex(const msf_grid* grid);
MSF_API size_t msf_grid_points(const msf_grid* grid);
/* Rate at alpha index ia and beta index ib (ib = 0 for two tables). */
MSF_API double msf_grid_rate(const msf_grid* grid, size_t ia, size_t ib);
MSF_API msf_status msf_grid_export(const msf_grid* grid, const char* path);

#ifdef __cplusplus
}
#endif

#endif

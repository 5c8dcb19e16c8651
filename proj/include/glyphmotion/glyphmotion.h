/* glyphmotion C API.
 *
 * Every function returns a gm_status. On failure the calling thread's
 * gm_last_error() holds a message and gm_last_error_stage() names the
 * pipeline stage that failed (empty when the failure happened outside a
 * stage, e.g. invalid configuration). Strings and buffers handed out by the
 * library are released with gm_string_free / gm_buffer_free; handles with
 * their matching destroy function.
 */
#ifndef GLYPHMOTION_H
#define GLYPHMOTION_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define GM_API __declspec(dllexport)
#else
#define GM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gm_status {
  GM_OK = 0,
  GM_ERR_INVALID_ARGUMENT = 1,
  GM_ERR_CONFIG = 2,
  GM_ERR_FONT = 3,
  GM_ERR_GIF = 4,
  GM_ERR_TRAJECTORY = 5,
  GM_ERR_LAYOUT = 6,
  GM_ERR_NUMERIC = 7,
  GM_ERR_UNIMPLEMENTED = 8,
  GM_ERR_IO = 9,
  GM_ERR_NOT_FOUND = 10,
  GM_ERR_INTERNAL = 11
} gm_status;

typedef struct gm_config gm_config;
typedef struct gm_result gm_result;
typedef struct gm_studio gm_studio;

GM_API const char* gm_version(void);
GM_API const char* gm_status_name(gm_status status);
GM_API const char* gm_last_error(void);
GM_API const char* gm_last_error_stage(void);

GM_API void gm_string_free(char* text);
GM_API void gm_buffer_free(uint8_t* buffer);

/* Pipeline configuration. Keys follow the config file schema:
 * text, font, mode, gif, trajectory, alpha, e, k, n, max_iterations, step,
 * tolerance, weights, trajectory_source, threads, seedless, width, height,
 * margin, background, fill, supersample, flatten_tolerance, delay_cs,
 * control_edits, word_layout, out, svg_dir, report. */
GM_API gm_status gm_config_create(gm_config** out);
/* Merges a JSON object over the current values. Relative paths resolve
 * against base_dir (NULL or "" for the working directory). */
GM_API gm_status gm_config_merge_json(gm_config* config, const char* json, const char* base_dir);
GM_API gm_status gm_config_to_json(const gm_config* config, char** out_json);
GM_API gm_status gm_config_validate(const gm_config* config);
GM_API void gm_config_destroy(gm_config* config);

/* Runs the whole pipeline in memory. Nothing is written to disk. */
GM_API gm_status gm_run(const gm_config* config, gm_result** out);
/* Borrowed view of the encoded GIF; valid until the result is destroyed. */
GM_API gm_status gm_result_gif(const gm_result* result, const uint8_t** data, size_t* size);
/* Line-delimited JSON report. */
GM_API gm_status gm_result_report(const gm_result* result, char** out_jsonl);
/* JSON array of warning strings. */
GM_API gm_status gm_result_warnings(const gm_result* result, char** out_json);
GM_API size_t gm_result_frame_count(const gm_result* result);
GM_API double gm_result_ms_per_frame(const gm_result* result);
/* Writes the outputs named in the config the result was produced from. */
GM_API gm_status gm_result_write(const gm_result* result);
GM_API void gm_result_destroy(gm_result* result);

/* Tracks `keypoints` points through a GIF and returns the trajectory JSON. */
GM_API gm_status gm_extract_trajectories(const uint8_t* gif, size_t size, int keypoints, char** out_json);

/* Studio service. Options: {"fonts": {"id": "path"}, "default_font": "id",
 * "persist_dir": "dir", "threads": 0}. */
GM_API gm_status gm_studio_create(const char* options_json, gm_studio** out);
/* Dispatches one request without a network round trip. */
GM_API gm_status gm_studio_handle(gm_studio* studio, const char* method, const char* path, const uint8_t* body,
                                  size_t body_size, int* http_status, char** content_type, uint8_t** response,
                                  size_t* response_size);
/* Starts serving HTTP on a background thread. Port 0 picks a free port. */
GM_API gm_status gm_studio_listen(gm_studio* studio, const char* host, int port, int* bound_port);
/* Blocks until the server stops. */
GM_API gm_status gm_studio_wait(gm_studio* studio);
GM_API gm_status gm_studio_stop(gm_studio* studio);
GM_API void gm_studio_destroy(gm_studio* studio);

#ifdef __cplusplus
}
#endif

#endif

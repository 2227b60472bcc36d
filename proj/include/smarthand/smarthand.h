/* C interface to the smarthand tactile pipeline.
 *
 * Every function returns an sh_status. On failure the message of the most
 * recent error on the calling thread is available from sh_last_error().
 * Strings returned through char** outputs are owned by the caller and must be
 * released with sh_string_free(). Handles are released with their *_free
 * function; passing NULL to any *_free function is a no-op. */
#ifndef SMARTHAND_H
#define SMARTHAND_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SH_API __declspec(dllexport)
#else
#define SH_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define SH_GRID_ROWS 32
#define SH_GRID_COLS 32
#define SH_TAXELS 1024
#define SH_NUM_CLASSES 17
#define SH_IMU_FEATURES 6

typedef enum sh_status {
  SH_OK = 0,
  SH_ERR_IO = 1,
  SH_ERR_BAD_MAGIC = 2,
  SH_ERR_TRUNCATED = 3,
  SH_ERR_VALIDATION = 4,
  SH_ERR_INVALID_ARGUMENT = 5,
  SH_ERR_BUFFER_LIMIT = 6,
  SH_ERR_SINGULAR = 7,
  SH_ERR_NON_CONVERGENCE = 8,
  SH_ERR_MISSING_CACHE = 9,
  SH_ERR_CONFIG = 10,
  SH_ERR_INTERNAL = 11
} sh_status;

typedef struct sh_config sh_config;
typedef struct sh_dataset sh_dataset;
typedef struct sh_thresholds sh_thresholds;
typedef struct sh_model sh_model;

/* Receives one human-readable progress line (no trailing newline). */
typedef void (*sh_progress_fn)(const char* line, void* user);

SH_API const char* sh_last_error(void);
SH_API const char* sh_status_name(sh_status status);
SH_API void sh_string_free(char* s);
SH_API const char* sh_version(void);

/* ---- run configuration ------------------------------------------------ */

SH_API sh_status sh_config_default(sh_config** out);
SH_API sh_status sh_config_parse(const char* json_text, sh_config** out);
SH_API sh_status sh_config_load(const char* path, sh_config** out);
SH_API void sh_config_free(sh_config* cfg);
SH_API sh_status sh_config_set_seed(sh_config* cfg, uint64_t seed);
SH_API sh_status sh_config_seed(const sh_config* cfg, uint64_t* out);
/* Scan cadence in frames per second (simulation and timestamps). */
SH_API sh_status sh_config_set_scan_rate(sh_config* cfg, double hz);
/* Zero-signal ADC level of the configured readout. */
SH_API sh_status sh_config_baseline(const sh_config* cfg, uint16_t* out);
/* Resolved configuration, defaults included. */
SH_API sh_status sh_config_to_json(const sh_config* cfg, char** out);
/* Configured artifact file name: "dataset", "calibration", "thresholds",
 * "model" or "slip". */
SH_API sh_status sh_config_path(const sh_config* cfg, const char* which, char** out);

/* ---- datasets ---------------------------------------------------------- */

SH_API sh_status sh_simulate_dataset(const sh_config* cfg, sh_dataset** out);
/* Empty-hand frames for threshold calibration. */
SH_API sh_status sh_simulate_calibration(const sh_config* cfg, sh_dataset** out);
/* One slide recording per configured slip run; NULL output when none. */
SH_API sh_status sh_simulate_slip(const sh_config* cfg, sh_dataset** out);

SH_API sh_status sh_dataset_read(const char* path, sh_dataset** out);
SH_API sh_status sh_dataset_write(const sh_dataset* ds, const char* path);
SH_API void sh_dataset_free(sh_dataset* ds);
SH_API sh_status sh_dataset_frame_count(const sh_dataset* ds, size_t* out);
SH_API sh_status sh_dataset_recording_count(const sh_dataset* ds, size_t* out);
/* Per-session, per-class frame counts and frame statistics as JSON. */
SH_API sh_status sh_dataset_summary_json(const sh_dataset* ds, char** out);
/* Copies frame `frame` of recording `recording` (file order) into 1024
 * row-major counts. */
SH_API sh_status sh_dataset_frame(const sh_dataset* ds, size_t recording, size_t frame,
                                  uint16_t* values, uint64_t* timestamp_us);
/* One 16-bit PGM per frame: <dir>/s<session>_c<label>_r<rec>_f<frame>.pgm */
SH_API sh_status sh_dataset_dump_pgm(const sh_dataset* ds, const char* dir);

/* ---- calibration ------------------------------------------------------- */

SH_API sh_status sh_calibrate(const sh_dataset* empty_frames, sh_thresholds** out);
SH_API sh_status sh_thresholds_read(const char* path, sh_thresholds** out);
SH_API sh_status sh_thresholds_write(const sh_thresholds* t, const char* path);
SH_API void sh_thresholds_free(sh_thresholds* t);
SH_API sh_status sh_is_contact(const sh_thresholds* t, const uint16_t* values, int* out);

/* ---- model ------------------------------------------------------------- */

SH_API sh_status sh_model_build(int with_imu, uint64_t seed, sh_model** out);
SH_API sh_status sh_model_read(const char* path, sh_model** out);
SH_API sh_status sh_model_write(const sh_model* m, const char* path);
SH_API void sh_model_free(sh_model* m);
SH_API sh_status sh_model_has_imu(const sh_model* m, int* out);
SH_API sh_status sh_model_profile_json(const sh_model* m, char** out);

/* 32-bit inference on one frame. imu may be NULL for tactile-only models.
 * probs receives 17 softmax probabilities. Not thread-safe per handle. */
SH_API sh_status sh_model_infer(sh_model* m, const uint16_t* values, const double* imu,
                                uint16_t baseline, float* probs);

/* Trains a fresh network on every frame that enters evaluation, holding out
 * one random fold for validation. Writes the model handle, a JSON report and
 * CSV learning curves. */
SH_API sh_status sh_train(const sh_config* cfg, const sh_dataset* ds, const sh_thresholds* t,
                          sh_progress_fn progress, void* user, sh_model** model,
                          char** report_json, char** curves_csv);

/* method: "cv" or "loso". Writes report.json, learning_curves.csv,
 * confusion.csv and confusion.pgm to out_dir and returns the JSON. */
SH_API sh_status sh_eval(const sh_config* cfg, const sh_dataset* ds, const sh_thresholds* t,
                         const char* method, const char* out_dir, sh_progress_fn progress,
                         void* user, char** report_json);

/* Classifies every frame of a dataset; writes predictions.csv to out_dir and
 * returns a JSON summary including accuracy and latency statistics. rate_hz
 * is the frame cadence the latency budget is compared against. t may be
 * NULL, in which case the contact column is omitted. */
SH_API sh_status sh_infer_dataset(sh_model* m, const sh_dataset* ds, const sh_thresholds* t,
                                  uint16_t baseline, double rate_hz, const char* out_dir,
                                  char** summary_json);

/* ---- analyses ---------------------------------------------------------- */

SH_API sh_status sh_analyze_degradation(const sh_dataset* ds, const sh_thresholds* t,
                                        uint16_t baseline, char** report_json);
/* Mean of one class's contact frames in one session (1024 doubles). */
SH_API sh_status sh_class_average_frame(const sh_dataset* ds, const sh_thresholds* t,
                                        int class_id, int session, double* out);
SH_API sh_status sh_write_average_frame(const double* frame, const char* csv_path,
                                        const char* pgm_path);
/* Runs slip detection on every recording; writes slip_track_<i>.csv files to
 * out_dir and returns a JSON array of reports. */
SH_API sh_status sh_analyze_slip(const sh_dataset* ds, const sh_thresholds* t, int window,
                                 const char* out_dir, char** report_json);

/* ---- power ------------------------------------------------------------- */

SH_API sh_status sh_duty_cycle(double t_on_s, double t_off_s, double* out);
/* Average power of the configured profile, in mW. */
SH_API sh_status sh_average_power(const sh_config* cfg, double dc, double* out_mw);
SH_API sh_status sh_power_report(const sh_config* cfg, char** table, char** report_json);

#ifdef __cplusplus
}
#endif

#endif

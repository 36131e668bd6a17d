/* vbp — video blood pressure estimation toolkit, C API.
 *
 * All functions return vbp_status; VBP_OK is 0 and the nonzero codes match
 * the CLI exit codes. On failure, vbp_last_error() returns a thread-local
 * message describing what went wrong. Handles are opaque and must be released
 * with their _free function.
 */
#ifndef VBP_H
#define VBP_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vbp_status {
  VBP_OK = 0,
  VBP_ERR_DATA = 1,    /* unreadable/malformed/inconsistent inputs */
  VBP_ERR_CONFIG = 2,  /* invalid configuration or arguments */
  VBP_ERR_NUMERIC = 3  /* numerical failure (non-finite loss, ...) */
} vbp_status;

const char* vbp_version(void);
/* Thread-local message for the most recent failing call. */
const char* vbp_last_error(void);

/* ---- configuration ----------------------------------------------------- */

typedef struct vbp_config vbp_config;

vbp_config* vbp_config_new(void); /* schema defaults */
void vbp_config_free(vbp_config* cfg);
vbp_status vbp_config_load_file(vbp_config* cfg, const char* path);
/* key "preset" expands tiny/desk/full model presets. */
vbp_status vbp_config_set(vbp_config* cfg, const char* key, const char* value);
vbp_status vbp_config_get(const vbp_config* cfg, const char* key, char* buf, size_t buf_size);
vbp_status vbp_config_save_file(const vbp_config* cfg, const char* path);

/* ---- pipeline commands -------------------------------------------------- */

/* Generates a synthetic dataset (manifest.tsv + <id>.stm files) in out_dir. */
vbp_status vbp_synth(const vbp_config* cfg, const char* out_dir);

/* frames+landmarks -> normalized STM files + prepared.tsv index in out_dir.
 * Per-sample failures are reported through vbp_last_error and the return
 * status, but every loadable sample is still written. */
vbp_status vbp_prepare(const vbp_config* cfg, const char* manifest_path, const char* out_dir);

/* Cross-validation training; writes per-fold checkpoints, fold plans, loss
 * curves, metric CSVs and Bland-Altman data into out_dir. */
vbp_status vbp_train(const vbp_config* cfg, const char* manifest_path, const char* out_dir);

/* Evaluates checkpoints against a labeled manifest; writes metric CSVs and
 * Bland-Altman data into out_dir. */
vbp_status vbp_evaluate(const vbp_config* cfg, const char* manifest_path,
                        const char* const* checkpoint_paths, size_t checkpoint_count,
                        const char* out_dir);

/* ---- prediction ---------------------------------------------------------- */

typedef struct vbp_model vbp_model;

typedef struct vbp_prediction {
  double fused;          /* final output, mmHg */
  double regressed;      /* value head output, mmHg */
  int group;             /* 0-based blood-pressure interval index */
  double class_probs[4]; /* softmax over the four intervals */
  char target[4];        /* "sbp" or "dbp" */
} vbp_prediction;

vbp_status vbp_model_open(const char* checkpoint_path, vbp_model** out_model);
void vbp_model_free(vbp_model* model);
/* Predicts from a precomputed .stm map file. */
vbp_status vbp_model_predict_file(vbp_model* model, const char* stm_path, vbp_prediction* out);
/* Predicts from a frame directory/blob plus a landmark CSV. */
vbp_status vbp_model_predict_raw(vbp_model* model, const char* frames_path,
                                 const char* landmarks_path, vbp_prediction* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* VBP_H */

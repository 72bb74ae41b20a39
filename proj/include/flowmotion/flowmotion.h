/* Copyright 2026 The flowmotion Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface of the flowmotion library. Every function returns an
 * fm_status; on failure fm_last_error() describes the problem. Handles are
 * opaque and owned by the caller until released with the matching _free.
 */
#ifndef FLOWMOTION_FLOWMOTION_H
#define FLOWMOTION_FLOWMOTION_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(FM_BUILDING_LIBRARY)
#define FM_API __declspec(dllexport)
#else
#define FM_API __declspec(dllimport)
#endif
#else
#define FM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fm_status {
  FM_OK = 0,
  FM_ERR_INTERNAL = 1,
  FM_ERR_CONFIG = 2,   /* malformed or inconsistent configuration, bad arguments */
  FM_ERR_LEGALITY = 3, /* conditions do not match the task */
  FM_ERR_NUMERIC = 4,  /* non-finite values, divergence */
  FM_ERR_IO = 5,
  FM_ERR_ARGUMENT = 6  /* null handle or pointer */
} fm_status;

typedef struct fm_motion fm_motion;
typedef struct fm_model fm_model;

/* Message of the last failure on the calling thread; empty after success. */
FM_API const char* fm_last_error(void);
FM_API const char* fm_version(void);
/* Comma-separated task names. */
FM_API const char* fm_task_names(void);

/* Motions. */
FM_API fm_status fm_motion_load(const char* path, fm_motion** out);
FM_API fm_status fm_motion_save(const fm_motion* m, const char* path);
FM_API fm_status fm_motion_shape(const fm_motion* m, int* frames, int* features);
/* Row-major frames x features values, valid while the handle lives. */
FM_API fm_status fm_motion_data(const fm_motion* m, const float** values);
/* JSON metadata of the motion, valid while the handle lives. */
FM_API fm_status fm_motion_metadata(const fm_motion* m, const char** json);
FM_API void fm_motion_free(fm_motion* m);

/* Models. */
FM_API fm_status fm_model_load(const char* checkpoint, fm_model** out);
FM_API fm_status fm_model_param_count(const fm_model* m, int64_t* count);
/* JSON header of the checkpoint the model was loaded from. */
FM_API fm_status fm_model_header(const fm_model* m, const char** json);
FM_API void fm_model_free(fm_model* m);

/* Commands. Optional string arguments may be NULL or empty. */
FM_API fm_status fm_make_data(const char* config_path, const char* out_dir);
/* stage: all, pretrain or finetune (NULL keeps the config's). */
FM_API fm_status fm_train(const char* config_path, const char* resume_checkpoint, const char* stage, const char* out_dir);

typedef struct fm_sample_options {
  int steps;     /* 50 by default */
  uint64_t seed;
  int frames;    /* 0: from the conditions */
  int midpoint;  /* nonzero: midpoint integrator */
} fm_sample_options;
FM_API fm_sample_options fm_sample_defaults(void);

FM_API fm_status fm_sample(const fm_model* m, const char* task, const char* condition_path, const fm_sample_options* opt, fm_motion** out);
FM_API fm_status fm_edit(const fm_model* m, const char* task, const char* source_path, const char* condition_path, const fm_sample_options* opt,
                         fm_motion** out);

/* tasks: comma-separated (NULL: every guided task); split: heldout, train or both. */
FM_API fm_status fm_eval(const char* checkpoint, const char* dataset_dir, const char* tasks, const char* split, int steps, int max_samples,
                         uint64_t seed, const char* out_dir);
/* variants: comma-separated ablation toggles. */
FM_API fm_status fm_ablate(const char* config_path, const char* variants, int seeds, int eval_steps, int eval_samples, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* FLOWMOTION_FLOWMOTION_H */

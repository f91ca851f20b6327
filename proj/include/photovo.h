/******************************************************************************
 * Copyright 2026 The photovo Authors. All Rights Reserved.
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
 *****************************************************************************/

/* C interface of the photovo shared library.
 *
 * Every function that can fail returns a pvo_status; PVO_OK is zero. On
 * failure a thread-local human-readable message is available through
 * pvo_last_error(). Objects returned through ** out-parameters are owned
 * by the caller and released with the matching *_free function; out-
 * parameters are written only on success.
 */

#ifndef PHOTOVO_H
#define PHOTOVO_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define PVO_API __declspec(dllexport)
#else
#define PVO_API __attribute__((visibility("default")))
#endif

typedef enum pvo_status {
  PVO_OK = 0,
  PVO_ERROR_INVALID_ARGUMENT = 1, /* bad sizes, values, configuration */
  PVO_ERROR_IO = 2,               /* file missing, malformed, unwritable */
  PVO_ERROR_EMPTY_EVALUATION = 3, /* nothing to average */
  PVO_ERROR_RUNTIME = 4           /* any other failure */
} pvo_status;

/* Opaque handles. */
typedef struct pvo_image pvo_image;
typedef struct pvo_depth pvo_depth;
typedef struct pvo_trajectory pvo_trajectory;
typedef struct pvo_scene pvo_scene;

/* Pinhole intrinsics in pixels. */
typedef struct pvo_intrinsics {
  double fx, fy, cx, cy;
} pvo_intrinsics;

/* Six-dof motion: translation (meters) and Euler angles (radians),
 * rotation composed as Rz(rz)*Ry(ry)*Rx(rx). */
typedef struct pvo_pose {
  double t[3];
  double r[3];
} pvo_pose;

typedef struct pvo_loss_options {
  double w_recon, w_ssim, w_smooth; /* total-loss weights */
  double min_depth, max_depth;      /* inverse-depth working range */
} pvo_loss_options;

typedef struct pvo_loss_report {
  double recon, ssim, smooth, total;
  uint64_t included_pixels;
  int photometric_empty; /* nonzero when no pixel survived masking */
} pvo_loss_report;

typedef struct pvo_optimizer_config {
  int max_iters;
  double initial_step;
  double grad_tol;
  double backtrack;
  double armijo_c;
  int max_backtracks;
  double scale_t, scale_r;
} pvo_optimizer_config;

typedef struct pvo_estimation_result {
  pvo_pose to_prev, to_next;
  pvo_loss_report report;
  int iterations;
  int converged;
  double initial_value, final_value;
} pvo_estimation_result;

typedef struct pvo_ate_report {
  double rmse;
  double scale;
  uint64_t frames;
} pvo_ate_report;

typedef struct pvo_snippet_ate_report {
  double mean;
  double stddev;
  uint64_t snippets;
} pvo_snippet_ate_report;

typedef struct pvo_depth_metrics_config {
  double min_depth;
  double cap;
  int median_scaling;
} pvo_depth_metrics_config;

typedef struct pvo_depth_metrics_report {
  double abs_rel, sq_rel, rmse, rmse_log;
  double delta1, delta2, delta3;
  double scale;
  uint64_t pixels;
} pvo_depth_metrics_report;

typedef struct pvo_gradcheck_config {
  uint64_t seed;
  int trials;
  int width, height;
  double fd_step;
  double tolerance;
} pvo_gradcheck_config;

typedef struct pvo_gradcheck_report {
  int trials;
  int failures;
  double max_rel_error;
  double mean_rel_error;
  int passed;
} pvo_gradcheck_report;

/* ------------------------------------------------------------------ */
/* Library information and error reporting                             */

PVO_API const char* pvo_version(void);

/* Message of the most recent failure on this thread ("" if none). */
PVO_API const char* pvo_last_error(void);

/* ------------------------------------------------------------------ */
/* Images (RGB, intensities in [0, 1], PPM P6 on disk)                 */

PVO_API pvo_status pvo_image_create(int width, int height, pvo_image** out);
PVO_API pvo_status pvo_image_read(const char* path, pvo_image** out);
PVO_API pvo_status pvo_image_write(const pvo_image* img, const char* path);
PVO_API void pvo_image_free(pvo_image* img);
PVO_API int pvo_image_width(const pvo_image* img);
PVO_API int pvo_image_height(const pvo_image* img);
PVO_API pvo_status pvo_image_get(const pvo_image* img, int x, int y, int c,
                                 double* out);
PVO_API pvo_status pvo_image_set(pvo_image* img, int x, int y, int c,
                                 double value);

/* ------------------------------------------------------------------ */
/* Depth maps (meters, 0 = no measurement, PFM "Pf" on disk)           */

PVO_API pvo_status pvo_depth_create(int width, int height, pvo_depth** out);
PVO_API pvo_status pvo_depth_read(const char* path, pvo_depth** out);
PVO_API pvo_status pvo_depth_write(const pvo_depth* depth, const char* path);
PVO_API void pvo_depth_free(pvo_depth* depth);
PVO_API int pvo_depth_width(const pvo_depth* depth);
PVO_API int pvo_depth_height(const pvo_depth* depth);
PVO_API pvo_status pvo_depth_get(const pvo_depth* depth, int x, int y,
                                 double* out);
PVO_API pvo_status pvo_depth_set(pvo_depth* depth, int x, int y, double value);

/* ------------------------------------------------------------------ */
/* Intrinsics ("fx fy cx cy" on disk)                                  */

PVO_API pvo_status pvo_intrinsics_read(const char* path, pvo_intrinsics* out);
PVO_API pvo_status pvo_intrinsics_write(const pvo_intrinsics* K,
                                        const char* path);

/* ------------------------------------------------------------------ */
/* View synthesis and losses                                           */

/* Warp src into the camera of `depth` under `pose` (source <- target
 * point map). recon_out receives the reconstruction; mask_out (optional)
 * receives the validity mask as a black/white image. */
PVO_API pvo_status pvo_warp(const pvo_image* src, const pvo_depth* depth,
                            const pvo_pose* pose, const pvo_intrinsics* K,
                            pvo_image** recon_out, pvo_image** mask_out);

/* Mean absolute difference over valid pixels; mask may be NULL (all
 * pixels) or a black/white image as produced by pvo_warp. empty_out
 * (optional) is set nonzero when no pixel was valid (value is then 0). */
PVO_API pvo_status pvo_reconstruction_loss(const pvo_image* recon,
                                           const pvo_image* target,
                                           const pvo_image* mask,
                                           double* value_out, int* empty_out);

PVO_API void pvo_loss_options_default(pvo_loss_options* out);

/* Three-frame objective: warp prev/next into the center view, take the
 * per-pixel best source, auto-mask, add edge-aware smoothness. */
PVO_API pvo_status pvo_snippet_loss(const pvo_image* prev,
                                    const pvo_image* center,
                                    const pvo_image* next,
                                    const pvo_depth* depth,
                                    const pvo_pose* to_prev,
                                    const pvo_pose* to_next,
                                    const pvo_intrinsics* K,
                                    const pvo_loss_options* opts,
                                    pvo_loss_report* out);

/* ------------------------------------------------------------------ */
/* Direct optimization                                                 */

PVO_API void pvo_optimizer_config_default(pvo_optimizer_config* out);

/* Estimate both relative poses of a snippet from zero motion with depth
 * held fixed. cfg/opts may be NULL for defaults. */
PVO_API pvo_status pvo_estimate_pose(const pvo_image* prev,
                                     const pvo_image* center,
                                     const pvo_image* next,
                                     const pvo_depth* depth,
                                     const pvo_intrinsics* K,
                                     const pvo_optimizer_config* cfg,
                                     const pvo_loss_options* opts,
                                     pvo_estimation_result* out);

/* Refine a dense depth initialization on a grid_w x grid_h control grid
 * with known poses; returns the refined dense map. */
PVO_API pvo_status pvo_refine_depth(const pvo_image* prev,
                                    const pvo_image* center,
                                    const pvo_image* next,
                                    const pvo_depth* init,
                                    const pvo_pose* to_prev,
                                    const pvo_pose* to_next,
                                    const pvo_intrinsics* K, int grid_w,
                                    int grid_h,
                                    const pvo_optimizer_config* cfg,
                                    const pvo_loss_options* opts,
                                    pvo_depth** out);

/* ------------------------------------------------------------------ */
/* Trajectories (camera-to-world, 3x4 [R|t] row-major per line)        */

PVO_API pvo_status pvo_trajectory_create(pvo_trajectory** out);
PVO_API pvo_status pvo_trajectory_read(const char* path,
                                       pvo_trajectory** out);
PVO_API pvo_status pvo_trajectory_write(const pvo_trajectory* traj,
                                        const char* path);
PVO_API void pvo_trajectory_free(pvo_trajectory* traj);
PVO_API size_t pvo_trajectory_size(const pvo_trajectory* traj);
/* matrix3x4: 12 row-major entries of [R | t]. */
PVO_API pvo_status pvo_trajectory_append(pvo_trajectory* traj,
                                         const double matrix3x4[12]);
PVO_API pvo_status pvo_trajectory_get(const pvo_trajectory* traj,
                                      size_t index, double matrix3x4[12]);

/* ------------------------------------------------------------------ */
/* Evaluation                                                          */

/* align_scale nonzero applies closed-form least-squares position scale. */
PVO_API pvo_status pvo_ate(const pvo_trajectory* estimate,
                           const pvo_trajectory* reference, int align_scale,
                           pvo_ate_report* out);

PVO_API pvo_status pvo_snippet_ate(const pvo_trajectory* estimate,
                                   const pvo_trajectory* reference,
                                   int length, int stride,
                                   pvo_snippet_ate_report* out);

PVO_API void pvo_depth_metrics_config_default(pvo_depth_metrics_config* out);

PVO_API pvo_status pvo_depth_metrics(const pvo_depth* predicted,
                                     const pvo_depth* ground_truth,
                                     const pvo_depth_metrics_config* cfg,
                                     pvo_depth_metrics_report* out);

/* ------------------------------------------------------------------ */
/* Synthetic scenes                                                    */

PVO_API pvo_status pvo_scene_read(const char* path, pvo_scene** out);
PVO_API pvo_status pvo_scene_write(const pvo_scene* scene, const char* path);
PVO_API pvo_status pvo_scene_random(uint64_t seed, pvo_scene** out);
PVO_API void pvo_scene_free(pvo_scene* scene);

/* Render a three-frame constant-velocity snippet (camera advances by
 * `step` per frame, center frame at the origin). Any of the image/depth/
 * pose outputs may be NULL when not needed. */
PVO_API pvo_status pvo_render_snippet(const pvo_scene* scene,
                                      const pvo_intrinsics* K,
                                      const pvo_pose* step, int width,
                                      int height, pvo_image** prev_out,
                                      pvo_image** center_out,
                                      pvo_image** next_out,
                                      pvo_depth** depth_out,
                                      pvo_pose* to_prev_out,
                                      pvo_pose* to_next_out);

/* fx = fy = 0.9375 * width, principal point at the image center. */
PVO_API pvo_status pvo_default_intrinsics(int width, int height,
                                          pvo_intrinsics* out);

/* Seeded Gaussian pose perturbation (sigma_t meters, sigma_r radians). */
PVO_API pvo_status pvo_perturb_pose(const pvo_pose* pose, double sigma_t,
                                    double sigma_r, uint64_t seed,
                                    pvo_pose* out);

/* ------------------------------------------------------------------ */
/* Gradient checking                                                   */

PVO_API void pvo_gradcheck_config_default(pvo_gradcheck_config* out);

PVO_API pvo_status pvo_run_gradient_check(const pvo_gradcheck_config* cfg,
                                          pvo_gradcheck_report* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* PHOTOVO_H */

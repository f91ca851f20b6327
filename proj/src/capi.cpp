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

#include "photovo.h"

#include <exception>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

#include "photovo/gradcheck.hpp"
#include "photovo/io.hpp"
#include "photovo/metrics.hpp"
#include "photovo/optim.hpp"
#include "photovo/synth.hpp"
#include "photovo/version.hpp"

struct pvo_image {
  photovo::ImageBuffer v;
};
struct pvo_depth {
  photovo::DepthMap v;
};
struct pvo_trajectory {
  photovo::Trajectory v;
};
struct pvo_scene {
  photovo::SyntheticScene v;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
pvo_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return PVO_OK;
  } catch (const photovo::EmptyEvaluationError& e) {
    g_last_error = e.what();
    return PVO_ERROR_EMPTY_EVALUATION;
  } catch (const photovo::IoError& e) {
    g_last_error = e.what();
    return PVO_ERROR_IO;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return PVO_ERROR_INVALID_ARGUMENT;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PVO_ERROR_RUNTIME;
  } catch (...) {
    g_last_error = "unknown error";
    return PVO_ERROR_RUNTIME;
  }
}

pvo_status fail_invalid(const char* msg) {
  g_last_error = msg;
  return PVO_ERROR_INVALID_ARGUMENT;
}

photovo::PoseVector to_pose(const pvo_pose& p) {
  photovo::PoseVector out;
  out.t = Eigen::Vector3d(p.t[0], p.t[1], p.t[2]);
  out.r = Eigen::Vector3d(p.r[0], p.r[1], p.r[2]);
  return out;
}

pvo_pose from_pose(const photovo::PoseVector& p) {
  pvo_pose out;
  for (int i = 0; i < 3; ++i) {
    out.t[i] = p.t[i];
    out.r[i] = p.r[i];
  }
  return out;
}

photovo::CameraIntrinsics to_intrinsics(const pvo_intrinsics& k) {
  return photovo::CameraIntrinsics{k.fx, k.fy, k.cx, k.cy};
}

photovo::LossOptions to_loss_options(const pvo_loss_options* o) {
  photovo::LossOptions opts;
  if (o != nullptr) {
    opts.weights.recon = o->w_recon;
    opts.weights.ssim = o->w_ssim;
    opts.weights.smooth = o->w_smooth;
    opts.depth_range.min_depth = o->min_depth;
    opts.depth_range.max_depth = o->max_depth;
  }
  return opts;
}

photovo::OptimizerConfig to_optimizer_config(const pvo_optimizer_config* c) {
  photovo::OptimizerConfig cfg;
  if (c != nullptr) {
    cfg.max_iters = c->max_iters;
    cfg.initial_step = c->initial_step;
    cfg.grad_tol = c->grad_tol;
    cfg.backtrack = c->backtrack;
    cfg.armijo_c = c->armijo_c;
    cfg.max_backtracks = c->max_backtracks;
    cfg.scale_t = c->scale_t;
    cfg.scale_r = c->scale_r;
  }
  return cfg;
}

pvo_loss_report from_report(const photovo::SnippetLossReport& r) {
  pvo_loss_report out;
  out.recon = r.recon;
  out.ssim = r.ssim;
  out.smooth = r.smooth;
  out.total = r.total;
  out.included_pixels = static_cast<uint64_t>(r.included_pixels);
  out.photometric_empty = r.photometric_empty ? 1 : 0;
  return out;
}

photovo::ImageBuffer mask_to_image(const photovo::ValidityMask& m) {
  photovo::ImageBuffer img(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      const float v = m.at(x, y) ? 1.0f : 0.0f;
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = v;
    }
  }
  return img;
}

photovo::ValidityMask image_to_mask(const photovo::ImageBuffer& img) {
  photovo::ValidityMask m(img.width(), img.height(), false);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      m.set(x, y, img.at(x, y, 0) > 0.5f);
    }
  }
  return m;
}

photovo::Snippet to_snippet(const pvo_image* prev, const pvo_image* center,
                            const pvo_image* next) {
  photovo::Snippet s;
  s.prev = prev->v;
  s.center = center->v;
  s.next = next->v;
  return s;
}

}  // namespace

extern "C" {

const char* pvo_version(void) { return photovo::version_string(); }

const char* pvo_last_error(void) { return g_last_error.c_str(); }

/* ------------------------------ images ------------------------------ */

pvo_status pvo_image_create(int width, int height, pvo_image** out) {
  if (out == nullptr) return fail_invalid("pvo_image_create: null out");
  return guarded([&] {
    if (width < 1 || height < 1) {
      throw std::invalid_argument("pvo_image_create: non-positive size");
    }
    *out = new pvo_image{photovo::ImageBuffer(width, height)};
  });
}

pvo_status pvo_image_read(const char* path, pvo_image** out) {
  if (path == nullptr || out == nullptr) {
    return fail_invalid("pvo_image_read: null argument");
  }
  return guarded([&] { *out = new pvo_image{photovo::read_image(path)}; });
}

pvo_status pvo_image_write(const pvo_image* img, const char* path) {
  if (img == nullptr || path == nullptr) {
    return fail_invalid("pvo_image_write: null argument");
  }
  return guarded([&] { photovo::write_image(img->v, path); });
}

void pvo_image_free(pvo_image* img) { delete img; }

int pvo_image_width(const pvo_image* img) {
  return img == nullptr ? 0 : img->v.width();
}

int pvo_image_height(const pvo_image* img) {
  return img == nullptr ? 0 : img->v.height();
}

pvo_status pvo_image_get(const pvo_image* img, int x, int y, int c,
                         double* out) {
  if (img == nullptr || out == nullptr) {
    return fail_invalid("pvo_image_get: null argument");
  }
  if (x < 0 || y < 0 || c < 0 || x >= img->v.width() ||
      y >= img->v.height() || c >= 3) {
    return fail_invalid("pvo_image_get: index out of range");
  }
  *out = static_cast<double>(img->v.at(x, y, c));
  g_last_error.clear();
  return PVO_OK;
}

pvo_status pvo_image_set(pvo_image* img, int x, int y, int c, double value) {
  if (img == nullptr) return fail_invalid("pvo_image_set: null image");
  if (x < 0 || y < 0 || c < 0 || x >= img->v.width() ||
      y >= img->v.height() || c >= 3) {
    return fail_invalid("pvo_image_set: index out of range");
  }
  img->v.at(x, y, c) = static_cast<float>(value);
  g_last_error.clear();
  return PVO_OK;
}

/* ------------------------------ depth ------------------------------- */

pvo_status pvo_depth_create(int width, int height, pvo_depth** out) {
  if (out == nullptr) return fail_invalid("pvo_depth_create: null out");
  return guarded([&] {
    if (width < 1 || height < 1) {
      throw std::invalid_argument("pvo_depth_create: non-positive size");
    }
    *out = new pvo_depth{photovo::DepthMap(width, height)};
  });
}

pvo_status pvo_depth_read(const char* path, pvo_depth** out) {
  if (path == nullptr || out == nullptr) {
    return fail_invalid("pvo_depth_read: null argument");
  }
  return guarded([&] { *out = new pvo_depth{photovo::read_depth(path)}; });
}

pvo_status pvo_depth_write(const pvo_depth* depth, const char* path) {
  if (depth == nullptr || path == nullptr) {
    return fail_invalid("pvo_depth_write: null argument");
  }
  return guarded([&] { photovo::write_depth(depth->v, path); });
}

void pvo_depth_free(pvo_depth* depth) { delete depth; }

int pvo_depth_width(const pvo_depth* depth) {
  return depth == nullptr ? 0 : depth->v.width();
}

int pvo_depth_height(const pvo_depth* depth) {
  return depth == nullptr ? 0 : depth->v.height();
}

pvo_status pvo_depth_get(const pvo_depth* depth, int x, int y, double* out) {
  if (depth == nullptr || out == nullptr) {
    return fail_invalid("pvo_depth_get: null argument");
  }
  if (x < 0 || y < 0 || x >= depth->v.width() || y >= depth->v.height()) {
    return fail_invalid("pvo_depth_get: index out of range");
  }
  *out = static_cast<double>(depth->v.at(x, y));
  g_last_error.clear();
  return PVO_OK;
}

pvo_status pvo_depth_set(pvo_depth* depth, int x, int y, double value) {
  if (depth == nullptr) return fail_invalid("pvo_depth_set: null map");
  if (x < 0 || y < 0 || x >= depth->v.width() || y >= depth->v.height()) {
    return fail_invalid("pvo_depth_set: index out of range");
  }
  depth->v.at(x, y) = static_cast<float>(value);
  g_last_error.clear();
  return PVO_OK;
}

/* ---------------------------- intrinsics ---------------------------- */

pvo_status pvo_intrinsics_read(const char* path, pvo_intrinsics* out) {
  if (path == nullptr || out == nullptr) {
    return fail_invalid("pvo_intrinsics_read: null argument");
  }
  return guarded([&] {
    const photovo::CameraIntrinsics k = photovo::read_intrinsics(path);
    *out = pvo_intrinsics{k.fx, k.fy, k.cx, k.cy};
  });
}

pvo_status pvo_intrinsics_write(const pvo_intrinsics* K, const char* path) {
  if (K == nullptr || path == nullptr) {
    return fail_invalid("pvo_intrinsics_write: null argument");
  }
  return guarded([&] { photovo::write_intrinsics(to_intrinsics(*K), path); });
}

/* --------------------------- warp & losses -------------------------- */

pvo_status pvo_warp(const pvo_image* src, const pvo_depth* depth,
                    const pvo_pose* pose, const pvo_intrinsics* K,
                    pvo_image** recon_out, pvo_image** mask_out) {
  if (src == nullptr || depth == nullptr || pose == nullptr || K == nullptr ||
      recon_out == nullptr) {
    return fail_invalid("pvo_warp: null argument");
  }
  return guarded([&] {
    photovo::WarpResult r =
        photovo::warp_image(src->v, depth->v,
                            photovo::pose_to_transform(to_pose(*pose)),
                            to_intrinsics(*K));
    auto recon = std::make_unique<pvo_image>();
    recon->v = std::move(r.recon);
    if (mask_out != nullptr) {
      *mask_out = new pvo_image{mask_to_image(r.mask)};
    }
    *recon_out = recon.release();
  });
}

pvo_status pvo_reconstruction_loss(const pvo_image* recon,
                                   const pvo_image* target,
                                   const pvo_image* mask, double* value_out,
                                   int* empty_out) {
  if (recon == nullptr || target == nullptr || value_out == nullptr) {
    return fail_invalid("pvo_reconstruction_loss: null argument");
  }
  return guarded([&] {
    const photovo::ValidityMask m =
        mask != nullptr
            ? image_to_mask(mask->v)
            : photovo::ValidityMask(recon->v.width(), recon->v.height(),
                                    true);
    const photovo::MaskedLoss l =
        photovo::reconstruction_loss(recon->v, target->v, m);
    *value_out = l.value;
    if (empty_out != nullptr) *empty_out = l.empty ? 1 : 0;
  });
}

void pvo_loss_options_default(pvo_loss_options* out) {
  if (out == nullptr) return;
  const photovo::LossOptions o;
  out->w_recon = o.weights.recon;
  out->w_ssim = o.weights.ssim;
  out->w_smooth = o.weights.smooth;
  out->min_depth = o.depth_range.min_depth;
  out->max_depth = o.depth_range.max_depth;
}

pvo_status pvo_snippet_loss(const pvo_image* prev, const pvo_image* center,
                            const pvo_image* next, const pvo_depth* depth,
                            const pvo_pose* to_prev, const pvo_pose* to_next,
                            const pvo_intrinsics* K,
                            const pvo_loss_options* opts,
                            pvo_loss_report* out) {
  if (prev == nullptr || center == nullptr || next == nullptr ||
      depth == nullptr || to_prev == nullptr || to_next == nullptr ||
      K == nullptr || out == nullptr) {
    return fail_invalid("pvo_snippet_loss: null argument");
  }
  return guarded([&] {
    const photovo::SnippetLossReport rep = photovo::snippet_loss(
        to_snippet(prev, center, next), depth->v, to_pose(*to_prev),
        to_pose(*to_next), to_intrinsics(*K), to_loss_options(opts));
    *out = from_report(rep);
  });
}

/* ---------------------------- optimization -------------------------- */

void pvo_optimizer_config_default(pvo_optimizer_config* out) {
  if (out == nullptr) return;
  const photovo::OptimizerConfig c;
  out->max_iters = c.max_iters;
  out->initial_step = c.initial_step;
  out->grad_tol = c.grad_tol;
  out->backtrack = c.backtrack;
  out->armijo_c = c.armijo_c;
  out->max_backtracks = c.max_backtracks;
  out->scale_t = c.scale_t;
  out->scale_r = c.scale_r;
}

pvo_status pvo_estimate_pose(const pvo_image* prev, const pvo_image* center,
                             const pvo_image* next, const pvo_depth* depth,
                             const pvo_intrinsics* K,
                             const pvo_optimizer_config* cfg,
                             const pvo_loss_options* opts,
                             pvo_estimation_result* out) {
  if (prev == nullptr || center == nullptr || next == nullptr ||
      depth == nullptr || K == nullptr || out == nullptr) {
    return fail_invalid("pvo_estimate_pose: null argument");
  }
  return guarded([&] {
    const photovo::EstimationResult r = photovo::estimate_pose(
        to_snippet(prev, center, next), depth->v, to_intrinsics(*K),
        to_optimizer_config(cfg), to_loss_options(opts));
    out->to_prev = from_pose(r.to_prev);
    out->to_next = from_pose(r.to_next);
    out->report = from_report(r.report);
    out->iterations = r.iterations;
    out->converged = r.converged ? 1 : 0;
    out->initial_value = r.trace.front();
    out->final_value = r.trace.back();
  });
}

pvo_status pvo_refine_depth(const pvo_image* prev, const pvo_image* center,
                            const pvo_image* next, const pvo_depth* init,
                            const pvo_pose* to_prev, const pvo_pose* to_next,
                            const pvo_intrinsics* K, int grid_w, int grid_h,
                            const pvo_optimizer_config* cfg,
                            const pvo_loss_options* opts, pvo_depth** out) {
  if (prev == nullptr || center == nullptr || next == nullptr ||
      init == nullptr || to_prev == nullptr || to_next == nullptr ||
      K == nullptr || out == nullptr) {
    return fail_invalid("pvo_refine_depth: null argument");
  }
  return guarded([&] {
    const photovo::LossOptions lo = to_loss_options(opts);
    const photovo::InverseDepthMap init_inv =
        photovo::encode_inverse_depth_map(init->v, lo.depth_range);
    const photovo::InverseDepthMap refined = photovo::refine_depth(
        to_snippet(prev, center, next), init_inv, to_pose(*to_prev),
        to_pose(*to_next), to_intrinsics(*K), grid_w, grid_h,
        to_optimizer_config(cfg), lo);
    *out = new pvo_depth{photovo::decode_inverse_depth_map(refined,
                                                           lo.depth_range)};
  });
}

/* ---------------------------- trajectories -------------------------- */

pvo_status pvo_trajectory_create(pvo_trajectory** out) {
  if (out == nullptr) return fail_invalid("pvo_trajectory_create: null out");
  return guarded([&] { *out = new pvo_trajectory{}; });
}

pvo_status pvo_trajectory_read(const char* path, pvo_trajectory** out) {
  if (path == nullptr || out == nullptr) {
    return fail_invalid("pvo_trajectory_read: null argument");
  }
  return guarded(
      [&] { *out = new pvo_trajectory{photovo::read_trajectory(path)}; });
}

pvo_status pvo_trajectory_write(const pvo_trajectory* traj,
                                const char* path) {
  if (traj == nullptr || path == nullptr) {
    return fail_invalid("pvo_trajectory_write: null argument");
  }
  return guarded([&] { photovo::write_trajectory(traj->v, path); });
}

void pvo_trajectory_free(pvo_trajectory* traj) { delete traj; }

size_t pvo_trajectory_size(const pvo_trajectory* traj) {
  return traj == nullptr ? 0 : traj->v.size();
}

pvo_status pvo_trajectory_append(pvo_trajectory* traj,
                                 const double matrix3x4[12]) {
  if (traj == nullptr || matrix3x4 == nullptr) {
    return fail_invalid("pvo_trajectory_append: null argument");
  }
  return guarded([&] {
    Eigen::Matrix3d R;
    R << matrix3x4[0], matrix3x4[1], matrix3x4[2], matrix3x4[4], matrix3x4[5],
        matrix3x4[6], matrix3x4[8], matrix3x4[9], matrix3x4[10];
    const Eigen::Vector3d t(matrix3x4[3], matrix3x4[7], matrix3x4[11]);
    if (!R.allFinite() || !t.allFinite() || !photovo::is_rotation(R, 1e-6)) {
      throw std::invalid_argument(
          "pvo_trajectory_append: not a finite rigid transform");
    }
    photovo::Se3Transform T;
    T.R = photovo::nearest_rotation(R);
    T.t = t;
    traj->v.push_back(T);
  });
}

pvo_status pvo_trajectory_get(const pvo_trajectory* traj, size_t index,
                              double matrix3x4[12]) {
  if (traj == nullptr || matrix3x4 == nullptr) {
    return fail_invalid("pvo_trajectory_get: null argument");
  }
  if (index >= traj->v.size()) {
    return fail_invalid("pvo_trajectory_get: index out of range");
  }
  const photovo::Se3Transform& T = traj->v[index];
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) {
      matrix3x4[row * 4 + col] = T.R(row, col);
    }
    matrix3x4[row * 4 + 3] = T.t[row];
  }
  g_last_error.clear();
  return PVO_OK;
}

/* ----------------------------- evaluation --------------------------- */

pvo_status pvo_ate(const pvo_trajectory* estimate,
                   const pvo_trajectory* reference, int align_scale,
                   pvo_ate_report* out) {
  if (estimate == nullptr || reference == nullptr || out == nullptr) {
    return fail_invalid("pvo_ate: null argument");
  }
  return guarded([&] {
    const photovo::AteReport r =
        photovo::ate(estimate->v, reference->v,
                     align_scale != 0 ? photovo::AteAlignment::kScaleOnly
                                      : photovo::AteAlignment::kNone);
    out->rmse = r.rmse;
    out->scale = r.scale;
    out->frames = static_cast<uint64_t>(r.frames);
  });
}

pvo_status pvo_snippet_ate(const pvo_trajectory* estimate,
                           const pvo_trajectory* reference, int length,
                           int stride, pvo_snippet_ate_report* out) {
  if (estimate == nullptr || reference == nullptr || out == nullptr) {
    return fail_invalid("pvo_snippet_ate: null argument");
  }
  return guarded([&] {
    const photovo::SnippetAteReport r =
        photovo::snippet_ate(estimate->v, reference->v, length, stride);
    out->mean = r.mean;
    out->stddev = r.stddev;
    out->snippets = static_cast<uint64_t>(r.snippets);
  });
}

void pvo_depth_metrics_config_default(pvo_depth_metrics_config* out) {
  if (out == nullptr) return;
  const photovo::DepthMetricsConfig c;
  out->min_depth = c.min_depth;
  out->cap = c.cap;
  out->median_scaling = c.median_scaling ? 1 : 0;
}

pvo_status pvo_depth_metrics(const pvo_depth* predicted,
                             const pvo_depth* ground_truth,
                             const pvo_depth_metrics_config* cfg,
                             pvo_depth_metrics_report* out) {
  if (predicted == nullptr || ground_truth == nullptr || out == nullptr) {
    return fail_invalid("pvo_depth_metrics: null argument");
  }
  return guarded([&] {
    photovo::DepthMetricsConfig c;
    if (cfg != nullptr) {
      c.min_depth = cfg->min_depth;
      c.cap = cfg->cap;
      c.median_scaling = cfg->median_scaling != 0;
    }
    const photovo::DepthMetricsReport r =
        photovo::depth_metrics(predicted->v, ground_truth->v, c);
    out->abs_rel = r.abs_rel;
    out->sq_rel = r.sq_rel;
    out->rmse = r.rmse;
    out->rmse_log = r.rmse_log;
    out->delta1 = r.delta1;
    out->delta2 = r.delta2;
    out->delta3 = r.delta3;
    out->scale = r.scale;
    out->pixels = static_cast<uint64_t>(r.pixels);
  });
}

/* ------------------------------- scenes ----------------------------- */

pvo_status pvo_scene_read(const char* path, pvo_scene** out) {
  if (path == nullptr || out == nullptr) {
    return fail_invalid("pvo_scene_read: null argument");
  }
  return guarded([&] { *out = new pvo_scene{photovo::read_scene(path)}; });
}

pvo_status pvo_scene_write(const pvo_scene* scene, const char* path) {
  if (scene == nullptr || path == nullptr) {
    return fail_invalid("pvo_scene_write: null argument");
  }
  return guarded([&] { photovo::write_scene(scene->v, path); });
}

pvo_status pvo_scene_random(uint64_t seed, pvo_scene** out) {
  if (out == nullptr) return fail_invalid("pvo_scene_random: null out");
  return guarded(
      [&] { *out = new pvo_scene{photovo::random_desk_scene(seed)}; });
}

void pvo_scene_free(pvo_scene* scene) { delete scene; }

pvo_status pvo_render_snippet(const pvo_scene* scene,
                              const pvo_intrinsics* K, const pvo_pose* step,
                              int width, int height, pvo_image** prev_out,
                              pvo_image** center_out, pvo_image** next_out,
                              pvo_depth** depth_out, pvo_pose* to_prev_out,
                              pvo_pose* to_next_out) {
  if (scene == nullptr || K == nullptr || step == nullptr) {
    return fail_invalid("pvo_render_snippet: null argument");
  }
  return guarded([&] {
    photovo::RenderedSnippet rs = photovo::render_snippet_motion(
        scene->v, to_intrinsics(*K), to_pose(*step), width, height);
    if (prev_out != nullptr) {
      *prev_out = new pvo_image{std::move(rs.frames.prev)};
    }
    if (center_out != nullptr) {
      *center_out = new pvo_image{std::move(rs.frames.center)};
    }
    if (next_out != nullptr) {
      *next_out = new pvo_image{std::move(rs.frames.next)};
    }
    if (depth_out != nullptr) {
      *depth_out = new pvo_depth{std::move(rs.depth)};
    }
    if (to_prev_out != nullptr) *to_prev_out = from_pose(rs.to_prev);
    if (to_next_out != nullptr) *to_next_out = from_pose(rs.to_next);
  });
}

pvo_status pvo_default_intrinsics(int width, int height,
                                  pvo_intrinsics* out) {
  if (out == nullptr) return fail_invalid("pvo_default_intrinsics: null out");
  return guarded([&] {
    const photovo::CameraIntrinsics k =
        photovo::default_intrinsics(width, height);
    *out = pvo_intrinsics{k.fx, k.fy, k.cx, k.cy};
  });
}

pvo_status pvo_perturb_pose(const pvo_pose* pose, double sigma_t,
                            double sigma_r, uint64_t seed, pvo_pose* out) {
  if (pose == nullptr || out == nullptr) {
    return fail_invalid("pvo_perturb_pose: null argument");
  }
  return guarded([&] {
    *out = from_pose(
        photovo::perturb_pose(to_pose(*pose), sigma_t, sigma_r, seed));
  });
}

/* ---------------------------- gradient check ------------------------ */

void pvo_gradcheck_config_default(pvo_gradcheck_config* out) {
  if (out == nullptr) return;
  const photovo::GradCheckConfig c;
  out->seed = c.seed;
  out->trials = c.trials;
  out->width = c.width;
  out->height = c.height;
  out->fd_step = c.fd_step;
  out->tolerance = c.tolerance;
}

pvo_status pvo_run_gradient_check(const pvo_gradcheck_config* cfg,
                                  pvo_gradcheck_report* out) {
  if (out == nullptr) {
    return fail_invalid("pvo_run_gradient_check: null out");
  }
  return guarded([&] {
    photovo::GradCheckConfig c;
    if (cfg != nullptr) {
      c.seed = cfg->seed;
      c.trials = cfg->trials;
      c.width = cfg->width;
      c.height = cfg->height;
      c.fd_step = cfg->fd_step;
      c.tolerance = cfg->tolerance;
    }
    const photovo::GradCheckReport r = photovo::run_gradient_check(c);
    out->trials = r.trials;
    out->failures = r.failures;
    out->max_rel_error = r.max_rel_error;
    out->mean_rel_error = r.mean_rel_error;
    out->passed = r.passed ? 1 : 0;
  });
}

} /* extern "C" */

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

#ifndef PHOTOVO_OPTIM_HPP
#define PHOTOVO_OPTIM_HPP

#include <vector>

#include "photovo/losses.hpp"

namespace photovo {

/// Settings for the preconditioned gradient descent with Armijo
/// backtracking used by estimate_pose and refine_depth.
struct OptimizerConfig {
  int max_iters = 150;
  double initial_step = 1.0;
  double grad_tol = 1e-7;   ///< on the scaled gradient norm
  double backtrack = 0.5;   ///< step shrink factor during line search
  double armijo_c = 1e-4;   ///< sufficient-decrease constant
  int max_backtracks = 45;
  /// Parameter scaling: internally the optimizer works on scale * value so
  /// a meter of translation and a fifth of a radian move comparably.
  double scale_t = 1.0;
  double scale_r = 5.0;
};

struct EstimationResult {
  PoseVector to_prev;
  PoseVector to_next;
  /// Strict snippet_loss report at the final poses.
  SnippetLossReport report;
  /// Accepted descent steps, warm-up phases included.
  int iterations = 0;
  bool converged = false;  ///< scaled gradient norm fell below grad_tol
  /// Joint objective value per outer iteration of the final phase (element
  /// 0 is the value where that phase starts). Non-increasing by
  /// construction: a step is only taken when it decreases the current
  /// frozen-selection surrogate, and a refreshed selection is only adopted
  /// when it does not increase the value at the new iterate.
  std::vector<double> trace;
};

/// Direct pose estimation for a three-frame snippet: minimize the snippet
/// objective over both relative poses (12 parameters) starting from zero
/// motion, holding depth fixed. Each outer iteration freezes the per-pixel
/// winning-source selection (falling back to all usable pixels when the
/// auto-mask empties, as it does at the zero initialization where warped
/// and unwarped errors tie) and descends the resulting smooth surrogate.
/// Because the per-pixel minimum is winner-take-all, each pose is first
/// warmed up against its own source alone (a third of the iteration budget
/// each); the remaining budget polishes both poses under the joint
/// selection, and `converged` / `trace` describe that final phase.
EstimationResult estimate_pose(const Snippet& snippet, const DepthMap& depth,
                               const CameraIntrinsics& K,
                               const OptimizerConfig& cfg = {},
                               const LossOptions& opts = {});

EstimationResult estimate_pose(const Snippet& snippet,
                               const InverseDepthMap& inv_depth,
                               const CameraIntrinsics& K,
                               const OptimizerConfig& cfg = {},
                               const LossOptions& opts = {});

/// Low-dimensional depth refinement with known poses: a grid_w x grid_h
/// grid of normalized inverse-depth control values (grid_w * grid_h <=
/// 1024), bilinearly upsampled to full resolution, is optimized by
/// projected gradient descent on the snippet objective. Returns the
/// upsampled refined map. The same monotonicity rules as estimate_pose
/// apply to the internal trace.
InverseDepthMap refine_depth(const Snippet& snippet,
                             const InverseDepthMap& init,
                             const PoseVector& to_prev,
                             const PoseVector& to_next,
                             const CameraIntrinsics& K, int grid_w, int grid_h,
                             const OptimizerConfig& cfg = {},
                             const LossOptions& opts = {});

}  // namespace photovo

#endif  // PHOTOVO_OPTIM_HPP

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

#ifndef PHOTOVO_LOSSES_HPP
#define PHOTOVO_LOSSES_HPP

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "photovo/imaging.hpp"

namespace photovo {

/// A three-frame training snippet: the temporally previous, center (target)
/// and next view of the same scene.
struct Snippet {
  ImageBuffer prev;
  ImageBuffer center;
  ImageBuffer next;
};

/// Blend weights of the total objective
///   total = recon_weight * L1 + ssim_weight * DSSIM + smooth_weight * EAS.
struct LossWeights {
  double recon = 0.15;
  double ssim = 0.85;
  double smooth = 0.001;
};

/// Structural-similarity stabilizers and shape. c1/c2 are the usual
/// (0.01)^2 and (0.03)^2 for unit dynamic range. When halved is set the
/// per-pixel structural term is (1 - SSIM)/2, the form used inside the
/// min-reprojection error; otherwise it is 1 - SSIM.
struct SsimParams {
  double c1 = 1e-4;
  double c2 = 9e-4;
  bool halved = true;
};

/// Loss reductions are means by default so the blend weights are
/// resolution-independent; kSum replicates plain summed objectives.
enum class Reduction { kMean, kSum };

struct LossOptions {
  LossWeights weights;
  SsimParams ssim;
  Reduction reduction = Reduction::kMean;
  /// Divide depth by its mean before the smoothness term (the snippet
  /// objective only; the standalone smoothness_loss never normalizes).
  bool normalize_smoothness = true;
  /// Used when depth arrives as a normalized inverse-depth map.
  DepthRange depth_range;
};

/// Scalar loss plus a flag raised when no pixel was available to average.
struct MaskedLoss {
  double value = 0.0;
  bool empty = false;
};

/// Masked mean absolute difference over pixels and channels. An empty mask
/// yields value 0 with empty == true.
MaskedLoss reconstruction_loss(const ImageBuffer& recon,
                               const ImageBuffer& target,
                               const ValidityMask& mask);

/// SSIM between two equally sized single-channel patches (population
/// statistics, divisor n). Patch size is typically 9 (3x3 windows).
double ssim_patch(std::span<const double> x, std::span<const double> y,
                  const SsimParams& params = {});

/// Mean structural dissimilarity over interior pixels whose full 3x3
/// neighborhood is mask-valid. Per pixel: channel-mean of (1 - SSIM)/2
/// (or 1 - SSIM when params.halved is false).
MaskedLoss ssim_loss(const ImageBuffer& recon, const ImageBuffer& target,
                     const ValidityMask& mask, const SsimParams& params = {});

/// Edge-aware first-order depth smoothness: |dx D| e^{-|dx I|} + the y
/// analogue, averaged over all pixels (forward differences, so the last
/// column/row contribute zero). The weighting image gradient magnitude is
/// averaged over channels. No depth normalization here.
double smoothness_loss(const DepthMap& depth, const ImageBuffer& image);

/// Pointwise minimum over per-source error maps plus the auto-mask.
struct MinReprojection {
  Field min_error;                     ///< 1ch; +inf where no source is usable
  ValidityMask automask;               ///< min warped < min unwarped (strict)
  std::vector<std::uint8_t> source;    ///< arg-min source index per pixel
};

/// Entries of the error maps may be +inf to mark pixels a source cannot
/// explain; those never win the minimum and fail the auto-mask test.
MinReprojection min_reprojection_automask(const std::vector<Field>& warped,
                                          const std::vector<Field>& unwarped);

/// Full three-frame objective breakdown.
struct SnippetLossReport {
  double recon = 0.0;   ///< mean L1 of the per-pixel winning source
  double ssim = 0.0;    ///< mean structural term of the winning source
  double smooth = 0.0;  ///< edge-aware smoothness (normalized depth)
  double total = 0.0;   ///< weights.recon*recon + weights.ssim*ssim + weights.smooth*smooth
  Field min_error;      ///< per-pixel weighted min photometric error
  ValidityMask automask;
  std::size_t included_pixels = 0;
  bool photometric_empty = false;  ///< no pixel survived masking
};

/// Per-pixel winning-source choice frozen at some evaluation point. The
/// photometric objective with a frozen selection is differentiable; the
/// analytic gradients, the finite-difference checks and the optimizer's
/// line search all evaluate this surrogate.
struct PhotoSelection {
  ValidityMask include;
  std::vector<std::uint8_t> source;
  std::size_t count = 0;
};

/// Three-frame loss: warp prev/next into the center view with the center
/// depth and the two relative poses (center frame -> neighbor frame), take
/// the per-pixel minimum of the weighted L1 + structural error over the two
/// sources, auto-mask against the unwarped errors, and add edge-aware
/// smoothness. Depth must be strictly positive everywhere.
SnippetLossReport snippet_loss(const Snippet& snippet, const DepthMap& depth,
                               const PoseVector& to_prev,
                               const PoseVector& to_next,
                               const CameraIntrinsics& K,
                               const LossOptions& opts = {});

/// Same objective with depth given as normalized inverse depth.
SnippetLossReport snippet_loss(const Snippet& snippet,
                               const InverseDepthMap& inv_depth,
                               const PoseVector& to_prev,
                               const PoseVector& to_next,
                               const CameraIntrinsics& K,
                               const LossOptions& opts = {});

/// Double-precision depth-plane variant (the working form used by the
/// optimizer and the gradient checks).
SnippetLossReport snippet_loss(const Snippet& snippet, const Field& depth,
                               const PoseVector& to_prev,
                               const PoseVector& to_next,
                               const CameraIntrinsics& K,
                               const LossOptions& opts = {});

/// The winning-source selection the loss would use at these poses. With
/// apply_automask false, every pixel whose best warped error is usable is
/// included regardless of the unwarped comparison (the optimizer's fallback
/// at the zero initialization, where warped and unwarped errors tie and the
/// strict auto-mask would empty the objective).
PhotoSelection snippet_selection(const Snippet& snippet, const Field& depth,
                                 const PoseVector& to_prev,
                                 const PoseVector& to_next,
                                 const CameraIntrinsics& K,
                                 const LossOptions& opts = {},
                                 bool apply_automask = true);

/// Value of the frozen-selection surrogate. Sampling extrapolates the
/// border cell for the tiny excursions finite differencing produces, so the
/// surrogate stays smooth around the freeze point.
double snippet_loss_frozen(const Snippet& snippet, const Field& depth,
                           const PoseVector& to_prev,
                           const PoseVector& to_next,
                           const CameraIntrinsics& K, const LossOptions& opts,
                           const PhotoSelection& selection);

/// Analytic pose gradients (d total / d [t; r], one 6-vector per source).
struct SnippetPoseGradient {
  Eigen::Matrix<double, 6, 1> to_prev = Eigen::Matrix<double, 6, 1>::Zero();
  Eigen::Matrix<double, 6, 1> to_next = Eigen::Matrix<double, 6, 1>::Zero();
  SnippetLossReport report;
};

/// Gradient of the surrogate frozen at the evaluation poses themselves.
SnippetPoseGradient grad_snippet_loss_pose(const Snippet& snippet,
                                           const DepthMap& depth,
                                           const PoseVector& to_prev,
                                           const PoseVector& to_next,
                                           const CameraIntrinsics& K,
                                           const LossOptions& opts = {});

/// Gradient of the surrogate under an explicit frozen selection.
SnippetPoseGradient grad_snippet_loss_pose_frozen(
    const Snippet& snippet, const Field& depth, const PoseVector& to_prev,
    const PoseVector& to_next, const CameraIntrinsics& K,
    const LossOptions& opts, const PhotoSelection& selection);

/// Gradient of the frozen surrogate with respect to the metric depth plane
/// (1ch Field of d total / d depth(x, y)), including the smoothness chain
/// through the depth-mean normalization.
Field grad_snippet_loss_depth_frozen(const Snippet& snippet,
                                     const Field& depth,
                                     const PoseVector& to_prev,
                                     const PoseVector& to_next,
                                     const CameraIntrinsics& K,
                                     const LossOptions& opts,
                                     const PhotoSelection& selection);

/// The optimizer's working form of the snippet objective. The strict loss
/// averages only over auto-mask survivors, which makes its value jump as
/// the survivor set changes (and gives zero motion a degenerate empty-set
/// minimum). The working form instead takes, per interior pixel, the
/// minimum over the participating warped errors and the unwarped floor,
/// divides by the fixed interior pixel count, and lets auto-masked pixels
/// contribute their (pose-independent) unwarped error as a constant. The
/// result is continuous in the poses and agrees with the min-reprojection
/// + auto-masking decision pixel by pixel. Re-deriving the branch choice
/// at the current point can only lower the value (a pointwise minimum), so
/// a refresh is always safe to adopt and monotone descent is structural.
struct WorkingSelection {
  PhotoSelection photo;     ///< warped-branch pixels and their sources
  Field floor_err;          ///< weighted unwarped floor, +inf off-interior
  double masked_sum = 0.0;  ///< frozen weighted error of floored pixels
  std::size_t denom = 0;    ///< fixed count of interior pixels
  unsigned sources = 3;     ///< bit s set when warped source s participates
  double loss_at_freeze = 0.0;  ///< working loss at the freeze point
};

/// Branch assignment at the given poses. `sources` selects which warped
/// branches participate (bit 0 = prev, bit 1 = next); the unwarped floor
/// always participates. Exact warped-vs-floor ties prefer the warped
/// branch (so the zero start keeps photometric gradients), and exact
/// warped-vs-warped ties alternate by pixel parity (so neither pose
/// starves the other at the tie-everywhere zero start).
///
/// With trim > 0, the floor(trim * interior) interior pixels with the
/// largest per-pixel branch values drop out entirely and the denominator
/// shrinks to match. Without it, the handful of pixels no pose can explain
/// (occlusions, regions leaving the frame) end up owning whichever pose
/// the per-pixel min has already released everywhere else: once one source
/// wins almost every pixel, the other's 6-vector is determined only by
/// that unexplainable residue, and descent happily overfits it. Trimming
/// removes the residue instead; a refresh re-derives branches and trim
/// together and keeps the same subset size, so it still only lowers the
/// value.
WorkingSelection snippet_working_selection(const Snippet& snippet,
                                           const Field& depth,
                                           const PoseVector& to_prev,
                                           const PoseVector& to_next,
                                           const CameraIntrinsics& K,
                                           const LossOptions& opts,
                                           unsigned sources = 3,
                                           double trim = 0.0);

/// Dense single-source assignment: every interior pixel scores against the
/// one given source (0 = prev, 1 = next), with no unwarped floor in play.
/// Near a minimum the floored form can starve itself -- the misaligned
/// high-texture pixels are exactly the ones the floor absorbs -- so the
/// warm-up phases descend this smooth dense form instead.
///
/// With trim > 0, the floor(trim * interior) pixels with the largest
/// current errors are excluded and the denominator shrinks to match.
/// Pixels that genuinely cannot match -- occlusions, regions leaving the
/// frame -- otherwise drag the dense minimum away from the true pose.
/// Re-deriving the trim at a new point keeps the smallest errors by
/// construction, so a refresh can only lower the value, same as the
/// floored form's re-argmin.
WorkingSelection snippet_dense_selection(const Snippet& snippet,
                                         const Field& depth,
                                         const PoseVector& to_prev,
                                         const PoseVector& to_next,
                                         const CameraIntrinsics& K,
                                         const LossOptions& opts, int source,
                                         double trim = 0.0);

/// Value of the working objective under a frozen branch assignment. The
/// warped branches sample with border clamping, so every pixel's error is
/// continuous in the poses and saturates once its warp leaves the image;
/// a pixel whose branch became unprojectable contributes its stationary
/// floor. Agrees bitwise with loss_at_freeze at the freeze point.
double snippet_working_loss(const Snippet& snippet, const Field& depth,
                            const PoseVector& to_prev,
                            const PoseVector& to_next,
                            const CameraIntrinsics& K, const LossOptions& opts,
                            const WorkingSelection& selection);

/// Pose gradient of the frozen working objective.
SnippetPoseGradient grad_snippet_working_loss_pose(
    const Snippet& snippet, const Field& depth, const PoseVector& to_prev,
    const PoseVector& to_next, const CameraIntrinsics& K,
    const LossOptions& opts, const WorkingSelection& selection);

/// Depth-plane gradient of the frozen working objective.
Field grad_snippet_working_loss_depth(const Snippet& snippet,
                                      const Field& depth,
                                      const PoseVector& to_prev,
                                      const PoseVector& to_next,
                                      const CameraIntrinsics& K,
                                      const LossOptions& opts,
                                      const WorkingSelection& selection);

/// Pose-independent precomputation for repeated working-objective calls
/// over one snippet/depth pair: the target window statistics, the source
/// planes, the stationary unwarped errors, and the smoothness value at the
/// pinned depth. A pose solve evaluates the same pair hundreds of times,
/// and rebuilding those planes dominates each call; the context overloads
/// below return bitwise-identical results to their Snippet counterparts
/// and simply skip the rebuild. Inputs are validated (and copied) once at
/// construction.
class SnippetEvalContext {
 public:
  SnippetEvalContext(const Snippet& snippet, const Field& depth,
                     const CameraIntrinsics& K, const LossOptions& opts = {});
  SnippetEvalContext(SnippetEvalContext&&) noexcept;
  SnippetEvalContext& operator=(SnippetEvalContext&&) noexcept;
  ~SnippetEvalContext();

  /// Implementation detail; opaque outside the library.
  struct Impl;
  const Impl& impl() const { return *impl_; }

 private:
  std::unique_ptr<Impl> impl_;
};

/// Context forms of the working-objective entry points. Poses remain per
/// call; everything else is pinned by the context.
WorkingSelection snippet_working_selection(const SnippetEvalContext& ctx,
                                           const PoseVector& to_prev,
                                           const PoseVector& to_next,
                                           unsigned sources = 3,
                                           double trim = 0.0);

WorkingSelection snippet_dense_selection(const SnippetEvalContext& ctx,
                                         const PoseVector& to_prev,
                                         const PoseVector& to_next, int source,
                                         double trim = 0.0);

double snippet_working_loss(const SnippetEvalContext& ctx,
                            const PoseVector& to_prev,
                            const PoseVector& to_next,
                            const WorkingSelection& selection);

SnippetPoseGradient grad_snippet_working_loss_pose(
    const SnippetEvalContext& ctx, const PoseVector& to_prev,
    const PoseVector& to_next, const WorkingSelection& selection);

}  // namespace photovo

#endif  // PHOTOVO_LOSSES_HPP

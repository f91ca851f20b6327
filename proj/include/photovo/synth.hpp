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

#ifndef PHOTOVO_SYNTH_HPP
#define PHOTOVO_SYNTH_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "photovo/losses.hpp"

namespace photovo {

/// Infinite textured plane { X : normal . X = offset } in world coordinates.
/// Normals are unit length after construction/parsing.
struct ScenePlane {
  Eigen::Vector3d normal = Eigen::Vector3d(0, 0, 1);
  double offset = 5.0;
  std::uint32_t texture_id = 0;
  double texture_scale = 1.0;  ///< multiplies spatial frequency
};

/// A desk-scale synthetic world: a handful of planes plus a background
/// intensity for rays that miss everything.
struct SyntheticScene {
  std::vector<ScenePlane> planes;
  std::array<float, 3> background{0.25f, 0.25f, 0.25f};
};

/// Rendered three-frame snippet with the center ground-truth depth and the
/// true relative poses (center frame -> neighbor frame), i.e. the poses
/// under which warping a neighbor reproduces the center view.
struct RenderedSnippet {
  Snippet frames;
  DepthMap depth;  ///< center view; 0 marks background (no intersection)
  PoseVector to_prev;
  PoseVector to_next;
  CameraIntrinsics K;
};

/// Lambertian procedural texture: a seeded sum of 3-8 cosine products of
/// world position, band-limited to wavelengths no shorter than about eight
/// pixels at the nominal desk-scene viewing geometry so bilinear sampling
/// of rendered views reproduces them faithfully. Deterministic in
/// (texture_id, scale, X); values in [0, 1] per channel.
std::array<double, 3> scene_texture(std::uint32_t texture_id, double scale,
                                    const Eigen::Vector3d& X);

/// Render one view. cam_to_world is the camera pose; rays are cast through
/// pixel centers, the nearest positive plane intersection wins, and pixels
/// that miss every plane get the background color (and depth 0 when
/// depth_out is non-null). Bit-identical outputs for identical inputs.
ImageBuffer render_view(const SyntheticScene& scene,
                        const CameraIntrinsics& K,
                        const Se3Transform& cam_to_world, int width,
                        int height, DepthMap* depth_out);

/// Render a full snippet from explicit camera poses. The center depth must
/// stay inside `range` wherever a plane is hit; violations throw
/// std::invalid_argument.
RenderedSnippet render_snippet(const SyntheticScene& scene,
                               const CameraIntrinsics& K,
                               const Se3Transform& prev_cam,
                               const Se3Transform& center_cam,
                               const Se3Transform& next_cam, int width,
                               int height, const DepthRange& range = {});

/// Constant-velocity convenience: the camera advances by `step` (expressed
/// in its own frame) between consecutive frames, with the center frame at
/// the world origin. The returned to_prev equals `step` exactly.
RenderedSnippet render_snippet_motion(const SyntheticScene& scene,
                                      const CameraIntrinsics& K,
                                      const PoseVector& step, int width,
                                      int height,
                                      const DepthRange& range = {});

/// Seeded Gaussian perturbation (sigma_t per translation component, meters;
/// sigma_r per rotation component, radians; rotations wrapped to (-pi, pi]).
PoseVector perturb_pose(const PoseVector& pose, double sigma_t, double sigma_r,
                        std::uint64_t seed);

/// Deterministic generator for benchmark scenes: a frame-filling back wall
/// plus two nearer slanted planes, each with its own texture. Geometry is
/// chosen so every pixel of a desk-scale snippet hits a plane at a depth of
/// roughly 3-15 m.
SyntheticScene random_desk_scene(std::uint64_t seed);

/// fx = fy = 0.9375 * width, principal point at the image center.
CameraIntrinsics default_intrinsics(int width, int height);

}  // namespace photovo

#endif  // PHOTOVO_SYNTH_HPP

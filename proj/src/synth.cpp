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

#include "photovo/synth.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "photovo/numeric.hpp"

namespace photovo {

namespace {

// Cached cosine-product mixture for one texture id. Wavelengths are drawn
// log-uniformly from [1.2 m, 5.0 m]; at the nominal viewing geometry
// (fx = 120, planes 3-10 m away) even the shortest wavelength projects to
// more than a dozen pixels, comfortably above the sampling limit under
// moderate foreshortening. Amplitudes follow a red spectrum, lambda^1.5.
// The floor matters more than it looks: bilinear resampling error grows
// quadratically with spatial frequency while the alignment signal only
// grows linearly, so the shortest waves set the photometric noise floor
// that pose recovery has to resolve against.
struct TextureParams {
  struct Term {
    Eigen::Vector3d dir_a, dir_b;
    double freq_a, freq_b;       // 2*pi / wavelength
    double amplitude;
    double phase_a[3], phase_b[3];
  };
  std::vector<Term> terms;
};

Eigen::Vector3d random_unit(SplitMix64& rng) {
  // Marsaglia-style rejection on the cube, deterministic.
  for (;;) {
    const Eigen::Vector3d v(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                            rng.uniform(-1.0, 1.0));
    const double n = v.norm();
    if (n > 0.2 && n <= 1.0) return v / n;
  }
}

TextureParams make_texture(std::uint32_t texture_id) {
  SplitMix64 rng(0x9d7ce0a6u ^ (static_cast<std::uint64_t>(texture_id) *
                                0x100000001b3ull));
  TextureParams p;
  const int n_terms = 3 + static_cast<int>(rng.next() % 6);  // 3..8
  double amp_sum = 0.0;
  for (int i = 0; i < n_terms; ++i) {
    TextureParams::Term t;
    t.dir_a = random_unit(rng);
    t.dir_b = random_unit(rng);
    const double la = 2.5 * std::pow(8.0 / 2.5, rng.uniform());
    const double lb = 2.5 * std::pow(8.0 / 2.5, rng.uniform());
    t.freq_a = 2.0 * M_PI / la;
    t.freq_b = 2.0 * M_PI / lb;
    t.amplitude = std::pow(std::min(la, lb) / 5.0, 1.5);
    for (int c = 0; c < 3; ++c) {
      t.phase_a[c] = rng.uniform(0.0, 2.0 * M_PI);
      t.phase_b[c] = rng.uniform(0.0, 2.0 * M_PI);
    }
    amp_sum += t.amplitude;
    p.terms.push_back(t);
  }
  // Normalize so the mixture stays within +-0.45 around the 0.5 bias.
  for (auto& t : p.terms) {
    t.amplitude *= 0.45 / amp_sum;
  }
  return p;
}

}  // namespace

std::array<double, 3> scene_texture(std::uint32_t texture_id, double scale,
                                    const Eigen::Vector3d& X) {
  static thread_local std::unordered_map<std::uint32_t, TextureParams> cache;
  auto it = cache.find(texture_id);
  if (it == cache.end()) {
    it = cache.emplace(texture_id, make_texture(texture_id)).first;
  }
  std::array<double, 3> out{0.5, 0.5, 0.5};
  for (const auto& t : it->second.terms) {
    const double ua = scale * t.freq_a * t.dir_a.dot(X);
    const double ub = scale * t.freq_b * t.dir_b.dot(X);
    for (int c = 0; c < 3; ++c) {
      out[c] += t.amplitude * std::cos(ua + t.phase_a[c]) *
                std::cos(ub + t.phase_b[c]);
    }
  }
  for (double& v : out) {
    v = std::min(1.0, std::max(0.0, v));
  }
  return out;
}

ImageBuffer render_view(const SyntheticScene& scene, const CameraIntrinsics& K,
                        const Se3Transform& cam_to_world, int width,
                        int height, DepthMap* depth_out) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("render_view: dimensions must be positive");
  }
  if (!K.valid()) {
    throw std::invalid_argument("render_view: invalid intrinsics");
  }
  for (const auto& pl : scene.planes) {
    if (pl.normal.norm() < 1e-12 || !std::isfinite(pl.offset)) {
      throw std::invalid_argument("render_view: degenerate plane");
    }
  }

  ImageBuffer img(width, height);
  if (depth_out) *depth_out = DepthMap(width, height, 0.0f);

  const Eigen::Vector3d origin = cam_to_world.t;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      // Direction scaled so the ray parameter equals camera-frame depth.
      const Eigen::Vector3d ray_cam((x - K.cx) / K.fx, (y - K.cy) / K.fy, 1.0);
      const Eigen::Vector3d dir = cam_to_world.R * ray_cam;

      double best_s = 0.0;
      const ScenePlane* hit = nullptr;
      for (const auto& pl : scene.planes) {
        const double denom = pl.normal.dot(dir);
        if (std::abs(denom) < 1e-12) continue;
        const double s = (pl.offset - pl.normal.dot(origin)) / denom;
        if (s > 1e-9 && (hit == nullptr || s < best_s)) {
          best_s = s;
          hit = &pl;
        }
      }

      if (hit == nullptr) {
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = scene.background[c];
        continue;
      }
      const Eigen::Vector3d X = origin + best_s * dir;
      const auto rgb = scene_texture(hit->texture_id, hit->texture_scale, X);
      for (int c = 0; c < 3; ++c) {
        img.at(x, y, c) = static_cast<float>(rgb[c]);
      }
      if (depth_out) depth_out->at(x, y) = static_cast<float>(best_s);
    }
  }
  return img;
}

RenderedSnippet render_snippet(const SyntheticScene& scene,
                               const CameraIntrinsics& K,
                               const Se3Transform& prev_cam,
                               const Se3Transform& center_cam,
                               const Se3Transform& next_cam, int width,
                               int height, const DepthRange& range) {
  RenderedSnippet out;
  out.K = K;
  out.frames.prev = render_view(scene, K, prev_cam, width, height, nullptr);
  out.frames.center =
      render_view(scene, K, center_cam, width, height, &out.depth);
  out.frames.next = render_view(scene, K, next_cam, width, height, nullptr);

  for (float d : out.depth.data()) {
    if (d != 0.0f && !(d >= range.min_depth && d <= range.max_depth)) {
      throw std::invalid_argument(
          "render_snippet: scene depth outside the supported range");
    }
  }

  out.to_prev = transform_to_pose(compose(invert(prev_cam), center_cam));
  out.to_next = transform_to_pose(compose(invert(next_cam), center_cam));
  return out;
}

RenderedSnippet render_snippet_motion(const SyntheticScene& scene,
                                      const CameraIntrinsics& K,
                                      const PoseVector& step, int width,
                                      int height, const DepthRange& range) {
  const Se3Transform M = pose_to_transform(step);
  const Se3Transform center = Se3Transform::identity();
  const Se3Transform prev = compose(center, invert(M));
  const Se3Transform next = compose(center, M);
  RenderedSnippet out =
      render_snippet(scene, K, prev, center, next, width, height, range);
  // By construction T_{center -> prev} is exactly M; keep the given vector
  // instead of the round trip through the matrix form.
  out.to_prev = step;
  return out;
}

PoseVector perturb_pose(const PoseVector& pose, double sigma_t, double sigma_r,
                        std::uint64_t seed) {
  if (!pose.finite() || !std::isfinite(sigma_t) || !std::isfinite(sigma_r) ||
      sigma_t < 0.0 || sigma_r < 0.0) {
    throw std::invalid_argument("perturb_pose: invalid arguments");
  }
  SplitMix64 rng(seed);
  PoseVector out = pose;
  for (int i = 0; i < 3; ++i) out.t[i] += sigma_t * rng.gaussian();
  for (int i = 0; i < 3; ++i) {
    out.r[i] = wrap_angle(out.r[i] + sigma_r * rng.gaussian());
  }
  return out;
}

SyntheticScene random_desk_scene(std::uint64_t seed) {
  SplitMix64 rng(seed ^ 0x5ca1ab1e1234abcdull);
  SyntheticScene scene;

  // Frame-filling back wall, gently tilted. The far texture runs at a
  // reduced spatial frequency so its shortest waves stay comfortably above
  // the sampling limit out at wall distance.
  ScenePlane wall;
  wall.normal = Eigen::Vector3d(rng.uniform(-0.25, 0.25),
                                rng.uniform(-0.25, 0.25), 1.0)
                    .normalized();
  const double wall_z = rng.uniform(6.5, 9.0);
  wall.offset = wall.normal.dot(Eigen::Vector3d(0, 0, wall_z));
  wall.texture_id = static_cast<std::uint32_t>(rng.next() % 4096);
  wall.texture_scale = rng.uniform(0.5, 0.7);
  scene.planes.push_back(wall);

  // A desk surface tilted upward: depth sweeps across the lower field of
  // view and the surface recedes past the wall, leaving a depth
  // discontinuity. Small-baseline pose recovery lives off exactly this
  // kind of in-view depth variation -- on near-constant depth, lateral
  // translation and rotation shift the image identically (to first order)
  // and the photometric objective cannot separate them. The slant stays
  // moderate so foreshortening keeps projected texture wavelengths above
  // the sampling limit.
  ScenePlane desk;
  desk.normal = Eigen::Vector3d(rng.uniform(-0.15, 0.15),
                                rng.uniform(0.45, 0.7), 1.0)
                    .normalized();
  desk.offset = desk.normal.dot(Eigen::Vector3d(
      0.0, rng.uniform(-1.2, -0.8), rng.uniform(3.0, 4.0)));
  desk.texture_id = static_cast<std::uint32_t>(rng.next() % 4096);
  desk.texture_scale = rng.uniform(0.8, 1.0);
  scene.planes.push_back(desk);

  // A side surface slanted the other way (monitor, shelf): lateral depth
  // sweep plus another discontinuity against the wall.
  ScenePlane side;
  const double sgn_x = rng.next() % 2 ? 1.0 : -1.0;
  side.normal = Eigen::Vector3d(sgn_x * rng.uniform(0.4, 0.65),
                                rng.uniform(-0.15, 0.15), 1.0)
                    .normalized();
  side.offset = side.normal.dot(Eigen::Vector3d(
      -sgn_x * rng.uniform(0.9, 1.4), 0.0, rng.uniform(2.8, 3.8)));
  side.texture_id = static_cast<std::uint32_t>(rng.next() % 4096);
  side.texture_scale = rng.uniform(0.8, 1.0);
  scene.planes.push_back(side);

  return scene;
}

CameraIntrinsics default_intrinsics(int width, int height) {
  CameraIntrinsics K;
  K.fx = 0.9375 * width;
  K.fy = K.fx;
  K.cx = 0.5 * (width - 1);
  K.cy = 0.5 * (height - 1);
  return K;
}

}  // namespace photovo

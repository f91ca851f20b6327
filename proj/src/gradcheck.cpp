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

#include "photovo/gradcheck.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "photovo/numeric.hpp"
#include "photovo/synth.hpp"

namespace photovo {
namespace {

std::array<double, 12> pack_poses(const PoseVector& a, const PoseVector& b) {
  return {a.t[0], a.t[1], a.t[2], a.r[0], a.r[1], a.r[2],
          b.t[0], b.t[1], b.t[2], b.r[0], b.r[1], b.r[2]};
}

void unpack_poses(const std::array<double, 12>& u, PoseVector* a,
                  PoseVector* b) {
  a->t = Eigen::Vector3d(u[0], u[1], u[2]);
  a->r = Eigen::Vector3d(u[3], u[4], u[5]);
  b->t = Eigen::Vector3d(u[6], u[7], u[8]);
  b->r = Eigen::Vector3d(u[9], u[10], u[11]);
}

Field depth_map_to_field(const DepthMap& d) {
  Field f(d.width(), d.height(), 1);
  for (std::size_t i = 0; i < d.data().size(); ++i) {
    f.data[i] = static_cast<double>(d.data()[i]);
  }
  return f;
}

}  // namespace

Eigen::Matrix<double, 12, 1> fd_pose_gradient(
    const Snippet& snippet, const Field& depth, const PoseVector& to_prev,
    const PoseVector& to_next, const CameraIntrinsics& K,
    const LossOptions& opts, const PhotoSelection& selection, double step) {
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw std::invalid_argument("fd_pose_gradient: step must be positive");
  }
  const auto eval = [&](const std::array<double, 12>& u) {
    PoseVector a, b;
    unpack_poses(u, &a, &b);
    return snippet_loss_frozen(snippet, depth, a, b, K, opts, selection);
  };

  const std::array<double, 12> base = pack_poses(to_prev, to_next);
  Eigen::Matrix<double, 12, 1> g;
  for (int k = 0; k < 12; ++k) {
    std::array<double, 12> up = base, dn = base;
    up[k] += step;
    dn[k] -= step;
    g[k] = (eval(up) - eval(dn)) / (2.0 * step);
  }
  return g;
}

GradCheckReport run_gradient_check(const GradCheckConfig& cfg) {
  if (cfg.trials < 1 || cfg.width < 16 || cfg.height < 16 ||
      !(cfg.fd_step > 0.0) || !(cfg.tolerance > 0.0)) {
    throw std::invalid_argument("run_gradient_check: bad config");
  }

  const CameraIntrinsics K = default_intrinsics(cfg.width, cfg.height);
  const LossOptions opts;
  SplitMix64 master(cfg.seed);

  GradCheckReport rep;
  rep.trials = cfg.trials;
  std::vector<double> rels;
  rels.reserve(static_cast<std::size_t>(cfg.trials));

  for (int trial = 0; trial < cfg.trials; ++trial) {
    const std::uint64_t scene_seed = master.next();
    SplitMix64 rng(master.next());
    const std::uint64_t perturb_prev = master.next();
    const std::uint64_t perturb_next = master.next();

    const SyntheticScene scene = random_desk_scene(scene_seed);
    PoseVector step;
    step.t = Eigen::Vector3d(rng.uniform(-0.08, 0.08),
                             rng.uniform(-0.08, 0.08),
                             rng.uniform(0.10, 0.30));
    step.r = Eigen::Vector3d(rng.uniform(-0.03, 0.03),
                             rng.uniform(-0.03, 0.03),
                             rng.uniform(-0.03, 0.03));

    const RenderedSnippet rs =
        render_snippet_motion(scene, K, step, cfg.width, cfg.height);
    const Field depth = depth_map_to_field(rs.depth);
    for (double d : depth.data) {
      if (!(d > 0.0)) {
        throw std::runtime_error(
            "run_gradient_check: scene left uncovered pixels");
      }
    }

    const PoseVector a =
        perturb_pose(rs.to_prev, 0.02, 0.005, perturb_prev);
    const PoseVector b =
        perturb_pose(rs.to_next, 0.02, 0.005, perturb_next);

    PhotoSelection sel =
        snippet_selection(rs.frames, depth, a, b, K, opts, true);
    if (sel.count == 0) {
      sel = snippet_selection(rs.frames, depth, a, b, K, opts, false);
    }

    const SnippetPoseGradient analytic =
        grad_snippet_loss_pose_frozen(rs.frames, depth, a, b, K, opts, sel);
    Eigen::Matrix<double, 12, 1> av;
    av.segment<6>(0) = analytic.to_prev;
    av.segment<6>(6) = analytic.to_next;

    const Eigen::Matrix<double, 12, 1> fd = fd_pose_gradient(
        rs.frames, depth, a, b, K, opts, sel, cfg.fd_step);

    const double denom = std::max(fd.lpNorm<Eigen::Infinity>(), 1e-12);
    const double rel = (av - fd).lpNorm<Eigen::Infinity>() / denom;
    rels.push_back(rel);
    rep.max_rel_error = std::max(rep.max_rel_error, rel);
    if (!(rel <= cfg.tolerance)) ++rep.failures;
  }

  rep.mean_rel_error =
      pairwise_sum(rels) / static_cast<double>(rels.size());
  rep.passed = rep.failures == 0;
  return rep;
}

}  // namespace photovo

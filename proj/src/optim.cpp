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

#include "photovo/optim.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace photovo {
namespace {

using Vec12 = Eigen::Matrix<double, 12, 1>;

// Fraction of interior pixels excluded from each frozen selection, largest
// current contributions first. The handful of pixels no rigid pose can
// explain (occlusions, regions leaving the frame) otherwise end up steering
// a 6-vector outright: once one source wins the per-pixel min almost
// everywhere, the other pose is determined only by that residue, and
// descent overfits it several percent away from the true motion.
constexpr double kSelectionTrim = 0.10;

void validate_config(const OptimizerConfig& cfg, const std::string& where) {
  const bool ok = cfg.max_iters >= 1 && std::isfinite(cfg.initial_step) &&
                  cfg.initial_step > 0.0 && std::isfinite(cfg.grad_tol) &&
                  cfg.grad_tol >= 0.0 && cfg.backtrack > 0.0 &&
                  cfg.backtrack < 1.0 && cfg.armijo_c > 0.0 &&
                  cfg.armijo_c < 1.0 && cfg.max_backtracks >= 0 &&
                  std::isfinite(cfg.scale_t) && cfg.scale_t > 0.0 &&
                  std::isfinite(cfg.scale_r) && cfg.scale_r > 0.0;
  if (!ok) throw std::invalid_argument(where + ": bad optimizer config");
}

PoseVector pose_from_segment(const Vec12& u, int base) {
  PoseVector p;
  p.t = u.segment<3>(base);
  p.r = u.segment<3>(base + 3);
  return p;
}

Field depth_map_to_field(const DepthMap& d) {
  Field f(d.width(), d.height(), 1);
  for (std::size_t i = 0; i < d.data().size(); ++i) {
    f.data[i] = static_cast<double>(d.data()[i]);
  }
  return f;
}

Field inverse_map_to_depth_field(const InverseDepthMap& inv,
                                 const DepthRange& range) {
  Field f(inv.width(), inv.height(), 1);
  for (std::size_t i = 0; i < inv.data().size(); ++i) {
    f.data[i] = decode_inverse_depth(static_cast<double>(inv.data()[i]), range);
  }
  return f;
}

EstimationResult estimate_pose_impl(const Snippet& snippet, const Field& depth,
                                    const CameraIntrinsics& K,
                                    const OptimizerConfig& cfg,
                                    const LossOptions& opts) {
  validate_config(cfg, "estimate_pose");

  Vec12 scales;
  for (int s = 0; s < 2; ++s) {
    scales.segment<3>(6 * s).setConstant(cfg.scale_t);
    scales.segment<3>(6 * s + 3).setConstant(cfg.scale_r);
  }

  const auto select = [&](const Vec12& u, unsigned sources) {
    return snippet_working_selection(snippet, depth, pose_from_segment(u, 0),
                                     pose_from_segment(u, 6), K, opts, sources,
                                     kSelectionTrim);
  };
  const auto dense = [&](int source) {
    return [&, source](const Vec12& u) {
      return snippet_dense_selection(snippet, depth, pose_from_segment(u, 0),
                                     pose_from_segment(u, 6), K, opts, source,
                                     kSelectionTrim);
    };
  };
  const auto value = [&](const Vec12& u, const WorkingSelection& sel) {
    return snippet_working_loss(snippet, depth, pose_from_segment(u, 0),
                                pose_from_segment(u, 6), K, opts, sel);
  };

  int accepted_total = 0;

  // Descent engine over a frozen-assignment objective. Each outer iteration
  // takes one Armijo-backtracked step along a preconditioned Polak-Ribiere
  // conjugate direction (with the descent safeguard falling back to plain
  // scaled steepest descent). When the first trial step already passes, the
  // step is greedily doubled while that keeps paying, which lets the
  // conjugate directions travel flat valleys that plain gradient steps
  // crawl through.
  //
  // After every accepted step the assignment -- branch choices and trim --
  // is re-derived at the new iterate. The refresh keeps the subset size
  // and re-minimizes pointwise over the very values the line search just
  // measured, so it cannot come out higher and is adopted unconditionally:
  // the recorded trace is monotone by construction. min() only absorbs
  // the summation-grouping epsilons between the two partitions. Returns
  // {loop iterations spent, converged}.
  const auto descend = [&](Vec12& u,
                           const std::function<WorkingSelection(const Vec12&)>&
                               rebuild,
                           int budget, std::vector<double>* trace) {
    int spent = 0;
    bool converged = false;
    WorkingSelection sel = rebuild(u);
    double f = sel.loss_at_freeze;
    if (trace) trace->push_back(f);
    if (sel.photo.count == 0 || !std::isfinite(f)) {
      // Every kept pixel sits on its stationary floor: the surrogate is
      // locally constant in the poses and there is nothing to descend.
      return std::pair<int, bool>(spent, converged);
    }

    const Eigen::Array<double, 12, 1> precond =
        (scales.array() * scales.array()).inverse();
    double alpha = cfg.initial_step;
    Vec12 g_prev = Vec12::Zero(), d_prev = Vec12::Zero();
    bool have_prev = false;
    int tiny_drops = 0;

    while (spent < budget) {
      ++spent;
      const SnippetPoseGradient g = grad_snippet_working_loss_pose(
          snippet, depth, pose_from_segment(u, 0), pose_from_segment(u, 6), K,
          opts, sel);
      Vec12 grad;
      grad.segment<6>(0) = g.to_prev;
      grad.segment<6>(6) = g.to_next;

      const double scaled_norm =
          (grad.array() / scales.array()).matrix().norm();
      if (scaled_norm <= cfg.grad_tol) {
        converged = true;
        break;
      }

      const Vec12 pg = (precond * grad.array()).matrix();
      Vec12 dir = -pg;
      if (have_prev) {
        const double denom = g_prev.dot((precond * g_prev.array()).matrix());
        if (denom > 0.0) {
          const double beta = std::max(
              0.0, grad.dot((precond * (grad - g_prev).array()).matrix()) /
                       denom);
          dir = -pg + beta * d_prev;
          if (!(grad.dot(dir) < 0.0)) dir = -pg;  // restart on non-descent
        }
      }
      const double gd = grad.dot(dir);
      g_prev = grad;
      d_prev = dir;
      have_prev = true;

      double step = alpha;
      bool accepted = false;
      Vec12 u_try = u;
      double f_try = f;
      int bt = 0;
      for (; bt <= cfg.max_backtracks; ++bt) {
        u_try = u + step * dir;
        f_try = value(u_try, sel);
        if (std::isfinite(f_try) && f_try <= f + cfg.armijo_c * step * gd) {
          accepted = true;
          break;
        }
        step *= cfg.backtrack;
      }
      if (!accepted) break;  // the selection is fresh: a genuine stall

      if (bt == 0) {
        for (int grow = 0; grow < 30; ++grow) {
          const double step2 = step * 2.0;
          const Vec12 u2 = u + step2 * dir;
          const double f2 = value(u2, sel);
          if (!std::isfinite(f2) || f2 >= f_try ||
              f2 > f + cfg.armijo_c * step2 * gd) {
            break;
          }
          step = step2;
          u_try = u2;
          f_try = f2;
        }
      }

      ++accepted_total;
      u = u_try;

      const double drop = f - f_try;
      WorkingSelection sel_new = rebuild(u);
      f = std::min(sel_new.loss_at_freeze, f_try);
      sel = std::move(sel_new);

      if (trace) trace->push_back(f);
      if (sel.photo.count == 0) break;
      alpha = step;

      // Budget guard: once accepted steps stop moving the value in any
      // meaningful way the phase has converged for practical purposes,
      // and the remaining budget is worth more in the next phase.
      if (drop <= 1e-12 * std::max(std::abs(f), 1e-30)) {
        if (++tiny_drops >= 4) {
          converged = true;
          break;
        }
      } else {
        tiny_drops = 0;
      }
    }
    return std::pair<int, bool>(spent, converged);
  };

  Vec12 u = Vec12::Zero();
  {
    // Input sanity is judged at the zero initialization.
    const WorkingSelection sel0 = select(u, 3u);
    if (sel0.denom == 0 || sel0.photo.count == 0) {
      throw std::runtime_error(
          "estimate_pose: no usable pixels in the snippet");
    }
    if (!std::isfinite(sel0.loss_at_freeze)) {
      throw std::runtime_error(
          "estimate_pose: objective not finite at the start point");
    }
  }

  // Warm-up: align each pose against its own source over the dense
  // trimmed objective before handing both to the joint objective. The
  // floored joint form starves near-misses twice over -- the per-pixel min
  // assigns everything to the better-aligned source, and the floor absorbs
  // exactly the misaligned high-texture pixels that carry the alignment
  // signal -- so the warm-ups must deliver each pose on their own. Each
  // warm-up may spend up to two fifths of the iteration budget; unspent
  // budget rolls over into the joint polish.
  int spent_total = 0;
  const int warm_budget = cfg.max_iters * 2 / 5;
  for (int source = 0; source < 2 && warm_budget > 0; ++source) {
    spent_total += descend(u, dense(source), warm_budget, nullptr).first;
  }

  EstimationResult out;
  const auto polish =
      descend(u, [&](const Vec12& v) { return select(v, 3u); },
              cfg.max_iters - spent_total, &out.trace);
  out.converged = polish.second;
  out.iterations = accepted_total;

  out.to_prev = pose_from_segment(u, 0);
  out.to_next = pose_from_segment(u, 6);
  out.report = snippet_loss(snippet, depth, out.to_prev, out.to_next, K, opts);
  return out;
}

// Separable bilinear map between a gw x gh control grid and the full image
// plane. Node (i, j) sits at pixel (i * (W-1) / (gw-1), j * (H-1) / (gh-1));
// a single row or column of nodes covers its axis with constant weight.
struct GridUpsampler {
  int gw = 0, gh = 0, w = 0, h = 0;
  std::vector<int> i0, i1, j0, j1;
  std::vector<double> fx, fy;

  GridUpsampler(int grid_w, int grid_h, int width, int height)
      : gw(grid_w), gh(grid_h), w(width), h(height) {
    i0.resize(w);
    i1.resize(w);
    fx.resize(w);
    for (int x = 0; x < w; ++x) {
      axis_taps(x, w, gw, &i0[x], &i1[x], &fx[x]);
    }
    j0.resize(h);
    j1.resize(h);
    fy.resize(h);
    for (int y = 0; y < h; ++y) {
      axis_taps(y, h, gh, &j0[y], &j1[y], &fy[y]);
    }
  }

  static void axis_taps(int p, int n, int g, int* a0, int* a1, double* t) {
    if (g == 1 || n == 1) {
      *a0 = 0;
      *a1 = 0;
      *t = 0.0;
      return;
    }
    const double gp = static_cast<double>(p) * (g - 1) / (n - 1);
    int base = static_cast<int>(std::floor(gp));
    base = std::clamp(base, 0, g - 2);
    *a0 = base;
    *a1 = base + 1;
    *t = gp - base;
  }

  Field upsample(const std::vector<double>& grid) const {
    Field out(w, h, 1);
    for (int y = 0; y < h; ++y) {
      const double ty = fy[y];
      const std::size_t r0 = static_cast<std::size_t>(j0[y]) * gw;
      const std::size_t r1 = static_cast<std::size_t>(j1[y]) * gw;
      for (int x = 0; x < w; ++x) {
        const double tx = fx[x];
        const double top =
            (1.0 - tx) * grid[r0 + i0[x]] + tx * grid[r0 + i1[x]];
        const double bot =
            (1.0 - tx) * grid[r1 + i0[x]] + tx * grid[r1 + i1[x]];
        out.at(x, y) = (1.0 - ty) * top + ty * bot;
      }
    }
    return out;
  }

  // Adjoint of upsample: scatter a full-resolution gradient plane onto the
  // control nodes.
  std::vector<double> scatter(const Field& grad_full) const {
    std::vector<double> g(static_cast<std::size_t>(gw) * gh, 0.0);
    for (int y = 0; y < h; ++y) {
      const double ty = fy[y];
      const std::size_t r0 = static_cast<std::size_t>(j0[y]) * gw;
      const std::size_t r1 = static_cast<std::size_t>(j1[y]) * gw;
      for (int x = 0; x < w; ++x) {
        const double tx = fx[x];
        const double v = grad_full.at(x, y);
        g[r0 + i0[x]] += (1.0 - tx) * (1.0 - ty) * v;
        g[r0 + i1[x]] += tx * (1.0 - ty) * v;
        g[r1 + i0[x]] += (1.0 - tx) * ty * v;
        g[r1 + i1[x]] += tx * ty * v;
      }
    }
    return g;
  }

  // Sample an existing full-resolution plane at the node positions.
  std::vector<double> sample_nodes(const Field& full) const {
    std::vector<double> g(static_cast<std::size_t>(gw) * gh, 0.0);
    for (int j = 0; j < gh; ++j) {
      const double py =
          gh == 1 ? 0.0 : static_cast<double>(j) * (h - 1) / (gh - 1);
      for (int i = 0; i < gw; ++i) {
        const double px =
            gw == 1 ? 0.0 : static_cast<double>(i) * (w - 1) / (gw - 1);
        const BilinearTaps t = bilinear_taps(PixelCoord{px, py}, w, h);
        g[static_cast<std::size_t>(j) * gw + i] =
            t.w00 * full.at(t.x0, t.y0) + t.w10 * full.at(t.x1, t.y0) +
            t.w01 * full.at(t.x0, t.y1) + t.w11 * full.at(t.x1, t.y1);
      }
    }
    return g;
  }
};

}  // namespace

EstimationResult estimate_pose(const Snippet& snippet, const DepthMap& depth,
                               const CameraIntrinsics& K,
                               const OptimizerConfig& cfg,
                               const LossOptions& opts) {
  return estimate_pose_impl(snippet, depth_map_to_field(depth), K, cfg, opts);
}

EstimationResult estimate_pose(const Snippet& snippet,
                               const InverseDepthMap& inv_depth,
                               const CameraIntrinsics& K,
                               const OptimizerConfig& cfg,
                               const LossOptions& opts) {
  return estimate_pose_impl(
      snippet, inverse_map_to_depth_field(inv_depth, opts.depth_range), K, cfg,
      opts);
}

InverseDepthMap refine_depth(const Snippet& snippet,
                             const InverseDepthMap& init,
                             const PoseVector& to_prev,
                             const PoseVector& to_next,
                             const CameraIntrinsics& K, int grid_w, int grid_h,
                             const OptimizerConfig& cfg,
                             const LossOptions& opts) {
  validate_config(cfg, "refine_depth");
  const int w = snippet.center.width(), h = snippet.center.height();
  if (init.width() != w || init.height() != h || !init.valid()) {
    throw std::invalid_argument(
        "refine_depth: init map must match the snippet and lie in (0, 1)");
  }
  if (grid_w < 1 || grid_h < 1 ||
      static_cast<long long>(grid_w) * grid_h > 1024) {
    throw std::invalid_argument(
        "refine_depth: grid must be at least 1x1 and at most 1024 nodes");
  }
  if (!opts.depth_range.valid()) {
    throw std::invalid_argument("refine_depth: bad depth range");
  }

  constexpr double kLo = 1e-6;
  constexpr double kHi = 1.0 - 1e-6;
  const double min_inv = 1.0 / opts.depth_range.max_depth;
  const double max_inv = 1.0 / opts.depth_range.min_depth;
  const double span = max_inv - min_inv;

  const GridUpsampler up(grid_w, grid_h, w, h);

  Field init_field(w, h, 1);
  for (std::size_t i = 0; i < init.data().size(); ++i) {
    init_field.data[i] = static_cast<double>(init.data()[i]);
  }
  std::vector<double> grid = up.sample_nodes(init_field);
  for (double& v : grid) v = std::clamp(v, kLo, kHi);

  const auto decode_grid = [&](const std::vector<double>& g) {
    Field depth = up.upsample(g);
    for (double& v : depth.data) {
      v = 1.0 / (min_inv + v * span);
    }
    return depth;
  };
  const auto select = [&](const Field& depth) {
    return snippet_working_selection(snippet, depth, to_prev, to_next, K, opts,
                                     3u, kSelectionTrim);
  };
  const auto value = [&](const Field& depth, const WorkingSelection& sel) {
    return snippet_working_loss(snippet, depth, to_prev, to_next, K, opts,
                                sel);
  };

  Field depth = decode_grid(grid);
  WorkingSelection sel = select(depth);
  if (sel.denom == 0 || sel.photo.count == 0) {
    throw std::runtime_error("refine_depth: no usable pixels in the snippet");
  }
  double f = sel.loss_at_freeze;
  if (!std::isfinite(f)) {
    throw std::runtime_error(
        "refine_depth: objective not finite at the start point");
  }

  const std::size_t n = grid.size();
  double alpha = cfg.initial_step;
  std::vector<double> grid_last, g_vec_last;
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    const Field grad_depth = grad_snippet_working_loss_depth(
        snippet, depth, to_prev, to_next, K, opts, sel);
    // Chain through the decode: d depth / d inv = -span * depth^2.
    Field grad_inv(w, h, 1);
    for (std::size_t i = 0; i < grad_inv.data.size(); ++i) {
      const double d = depth.data[i];
      grad_inv.data[i] = grad_depth.data[i] * (-span * d * d);
    }
    const std::vector<double> g = up.scatter(grad_inv);

    // Barzilai-Borwein step seed (same safeguards as estimate_pose).
    if (!grid_last.empty()) {
      double sy = 0.0, ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double du = grid[i] - grid_last[i];
        sy += du * (g[i] - g_vec_last[i]);
        ss += du * du;
      }
      if (sy > 0.0) {
        const double a_bb = ss / sy;
        if (std::isfinite(a_bb) && a_bb > 0.0) {
          alpha = std::clamp(a_bb, 1e-8, 1e6);
        }
      }
    }
    grid_last = grid;
    g_vec_last = g;

    // Projected-gradient criticality: the norm of the clamp-aware step the
    // gradient would take.
    double crit_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double moved = std::clamp(grid[i] - g[i], kLo, kHi) - grid[i];
      crit_sq += moved * moved;
    }
    if (std::sqrt(crit_sq) <= cfg.grad_tol) break;

    double step = alpha;
    bool accepted = false;
    std::vector<double> grid_try(n);
    Field depth_try;
    double f_try = f;
    for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
      double lin = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        grid_try[i] = std::clamp(grid[i] - step * g[i], kLo, kHi);
        lin += g[i] * (grid_try[i] - grid[i]);
      }
      depth_try = decode_grid(grid_try);
      f_try = value(depth_try, sel);
      if (std::isfinite(f_try) && f_try <= f + cfg.armijo_c * lin) {
        accepted = true;
        break;
      }
      step *= cfg.backtrack;
    }
    if (!accepted) break;

    grid.swap(grid_try);
    depth = std::move(depth_try);

    // Re-derive the branch assignment at the new iterate: a pointwise
    // minimum over the values the line search just measured, so adopting
    // it cannot raise the value (min() absorbs summation-grouping
    // epsilons only). The BB memory survives the refresh.
    WorkingSelection sel_new = select(depth);
    f = std::min(sel_new.loss_at_freeze, f_try);
    sel = std::move(sel_new);
    alpha = std::min(step * 2.0, 1e6);
  }

  const Field inv_full = up.upsample(grid);
  InverseDepthMap out(w, h);
  for (std::size_t i = 0; i < inv_full.data.size(); ++i) {
    out.data()[i] =
        static_cast<float>(std::clamp(inv_full.data[i], kLo, kHi));
  }
  return out;
}

}  // namespace photovo

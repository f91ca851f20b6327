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

#include "photovo/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "photovo/numeric.hpp"

namespace photovo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

Field image_to_field(const ImageBuffer& img) {
  Field f(img.width(), img.height(), 3);
  for (std::size_t i = 0; i < f.data.size(); ++i) {
    f.data[i] = img.data()[i];
  }
  return f;
}

Field depth_to_field(const std::vector<float>& v, int w, int h) {
  Field f(w, h, 1);
  for (std::size_t i = 0; i < f.data.size(); ++i) f.data[i] = v[i];
  return f;
}

// 3x3 window sums per channel, defined on interior pixels. Two separable
// passes with a fixed addition order keep the result deterministic.
Field box3_sums(const Field& src) {
  const int w = src.width, h = src.height, ch = src.channels;
  Field rows(w, h, ch), out(w, h, ch);
  for (int y = 0; y < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        rows.at(x, y, c) =
            src.at(x - 1, y, c) + src.at(x, y, c) + src.at(x + 1, y, c);
      }
    }
  }
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        out.at(x, y, c) =
            rows.at(x, y - 1, c) + rows.at(x, y, c) + rows.at(x, y + 1, c);
      }
    }
  }
  return out;
}

// Pixels whose full 3x3 neighborhood is valid (necessarily interior).
ValidityMask erode3(const ValidityMask& m) {
  const int w = m.width(), h = m.height();
  ValidityMask out(w, h, false);
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      bool all = true;
      for (int dy = -1; dy <= 1 && all; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (!m.at(x + dx, y + dy)) {
            all = false;
            break;
          }
        }
      }
      out.set(x, y, all);
    }
  }
  return out;
}

Field elementwise_product(const Field& a, const Field& b) {
  Field out(a.width, a.height, a.channels);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = a.data[i] * b.data[i];
  }
  return out;
}

struct SsimStats {
  double mu_x, mu_y, a, b, c, d;  // window means and the four SSIM factors
};

SsimStats ssim_stats(double sum_x, double sum_xx, double sum_xy, double sum_y,
                     double sum_yy, const SsimParams& p) {
  SsimStats s;
  s.mu_x = sum_x / 9.0;
  s.mu_y = sum_y / 9.0;
  const double var_x = sum_xx / 9.0 - s.mu_x * s.mu_x;
  const double var_y = sum_yy / 9.0 - s.mu_y * s.mu_y;
  const double cov = sum_xy / 9.0 - s.mu_x * s.mu_y;
  s.a = 2.0 * s.mu_x * s.mu_y + p.c1;
  s.b = 2.0 * cov + p.c2;
  s.c = s.mu_x * s.mu_x + s.mu_y * s.mu_y + p.c1;
  s.d = var_x + var_y + p.c2;
  return s;
}

// Everything the objective needs about one warped source view.
// How a reprojected coordinate outside the source image is treated.
// kStrict invalidates the pixel (the published loss), kExtrapolate keeps
// the bilinear cell's linear form going (smooth finite-difference probes
// of the frozen surrogate), and kClamp saturates at the border sample (the
// optimizer's working objective: continuous in pose, never rewarded nor
// punished for drifting further out).
enum class SampleMode { kStrict, kExtrapolate, kClamp };

struct SourceEval {
  ValidityMask warp_valid;   // pixel has a usable reconstruction value
  ValidityMask genuine;      // value really was sampled (not a probe sentinel)
  ValidityMask patch_valid;  // 3x3 erosion of warp_valid
  Field recon;               // 3ch sampled values
  Field sx, sy;              // raw sample coordinates (gradient chain)
  Field xs;                  // 3ch point in the source camera frame
  Field sum_x, sum_xx, sum_xy;  // 3ch window sums against the target
  Field l1;                  // 1ch channel-mean absolute difference
  Field ssim_term;           // 1ch channel-mean structural term
  Field err;                 // 1ch weighted photometric error, +inf unusable
  SampleMode mode = SampleMode::kStrict;
};

struct TargetCache {
  Field img;            // 3ch center view
  Field sum_y, sum_yy;  // window sums
};

void require_finite_pose(const PoseVector& u, const char* who) {
  if (!u.finite()) {
    throw std::invalid_argument(std::string(who) + ": non-finite pose");
  }
}

void validate_options(const LossOptions& o) {
  const double vals[] = {o.weights.recon, o.weights.ssim, o.weights.smooth,
                         o.ssim.c1, o.ssim.c2};
  for (double v : vals) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("loss options must be finite and >= 0");
    }
  }
}

// Reconstruct one source into the target view under the given sampling
// mode. In kExtrapolate, unprojectable or wildly out-of-range pixels
// receive a deterministic worst-case value, so finite-difference probes of
// the frozen surrogate see a total that is always defined.
SourceEval warp_source(const Field& src, const Field& depth,
                       const PoseVector& pose, const CameraIntrinsics& K,
                       SampleMode mode, bool keep_grad_caches) {
  const int w = src.width, h = src.height;
  SourceEval e;
  e.mode = mode;
  e.warp_valid = ValidityMask(w, h, false);
  e.genuine = ValidityMask(w, h, false);
  e.recon = Field(w, h, 3);
  if (keep_grad_caches) {
    e.sx = Field(w, h, 1);
    e.sy = Field(w, h, 1);
    e.xs = Field(w, h, 3);
  }

  const Se3Transform T = pose_to_transform(pose);
  const double inv_fx = 1.0 / K.fx, inv_fy = 1.0 / K.fy;
  const bool identity =
      T.R == Eigen::Matrix3d::Identity() && T.t == Eigen::Vector3d::Zero();

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double d = depth.at(x, y);
      if (!(d > 0.0)) continue;

      double px, py, Z;
      Eigen::Vector3d X;
      bool broken = false;
      if (identity) {
        px = x;
        py = y;
        Z = d;
        X = Eigen::Vector3d(d * (x - K.cx) * inv_fx, d * (y - K.cy) * inv_fy,
                            d);
      } else {
        const Eigen::Vector3d ray((x - K.cx) * inv_fx, (y - K.cy) * inv_fy,
                                  1.0);
        X = T.R * (d * ray) + T.t;
        Z = X.z();
        if (Z > kMinProjectedDepth) {
          px = K.fx * (X.x() / Z) + K.cx;
          py = K.fy * (X.y() / Z) + K.cy;
        } else {
          px = py = 0.0;
          broken = true;
        }
      }

      if (!broken) {
        switch (mode) {
          case SampleMode::kStrict:
            broken = !(px >= 0.0 && px <= w - 1.0 && py >= 0.0 &&
                       py <= h - 1.0);
            break;
          case SampleMode::kExtrapolate:
            broken = !(std::abs(px) <= 8.0 * w && std::abs(py) <= 8.0 * h);
            break;
          case SampleMode::kClamp:
            break;  // any finite coordinate saturates at the border
        }
      }

      if (broken) {
        if (mode != SampleMode::kExtrapolate) continue;
        e.warp_valid.set(x, y, true);
        for (int c = 0; c < 3; ++c) e.recon.at(x, y, c) = 2.0;
        if (keep_grad_caches) {
          e.sx.at(x, y) = x;
          e.sy.at(x, y) = y;
          for (int c = 0; c < 3; ++c) e.xs.at(x, y, c) = X[c];
        }
        continue;
      }

      const double sx = mode == SampleMode::kClamp
                            ? std::clamp(px, 0.0, static_cast<double>(w - 1))
                            : px;
      const double sy = mode == SampleMode::kClamp
                            ? std::clamp(py, 0.0, static_cast<double>(h - 1))
                            : py;
      const BilinearTaps t = bilinear_taps(PixelCoord{sx, sy}, w, h);
      e.warp_valid.set(x, y, true);
      e.genuine.set(x, y, true);
      for (int c = 0; c < 3; ++c) {
        e.recon.at(x, y, c) =
            t.w00 * src.at(t.x0, t.y0, c) + t.w10 * src.at(t.x1, t.y0, c) +
            t.w01 * src.at(t.x0, t.y1, c) + t.w11 * src.at(t.x1, t.y1, c);
      }
      if (keep_grad_caches) {
        e.sx.at(x, y) = px;
        e.sy.at(x, y) = py;
        for (int c = 0; c < 3; ++c) e.xs.at(x, y, c) = X[c];
      }
    }
  }
  return e;
}

// Fill the per-pixel photometric components of a (possibly un-warped)
// source evaluation against the cached target statistics.
void score_source(SourceEval& e, const TargetCache& tgt, const LossOptions& o) {
  const int w = tgt.img.width, h = tgt.img.height;
  e.patch_valid = erode3(e.warp_valid);
  e.sum_x = box3_sums(e.recon);
  e.sum_xx = box3_sums(elementwise_product(e.recon, e.recon));
  e.sum_xy = box3_sums(elementwise_product(e.recon, tgt.img));
  e.l1 = Field(w, h, 1);
  e.ssim_term = Field(w, h, 1);
  e.err = Field(w, h, 1, kInf);

  const double k = o.ssim.halved ? 0.5 : 1.0;
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      if (!e.patch_valid.at(x, y)) continue;
      double l1 = 0.0, st = 0.0;
      for (int c = 0; c < 3; ++c) {
        l1 += std::abs(e.recon.at(x, y, c) - tgt.img.at(x, y, c));
        const SsimStats s =
            ssim_stats(e.sum_x.at(x, y, c), e.sum_xx.at(x, y, c),
                       e.sum_xy.at(x, y, c), tgt.sum_y.at(x, y, c),
                       tgt.sum_yy.at(x, y, c), o.ssim);
        const double ssim = (s.a * s.b) / (s.c * s.d);
        st += (1.0 - ssim) * k;
      }
      e.l1.at(x, y) = l1 / 3.0;
      e.ssim_term.at(x, y) = st / 3.0;
      e.err.at(x, y) = o.weights.recon * e.l1.at(x, y) +
                       o.weights.ssim * e.ssim_term.at(x, y);
    }
  }
}

void validate_snippet_inputs(const Snippet& s, const Field& depth,
                             const CameraIntrinsics& K,
                             const LossOptions& opts) {
  const int w = s.center.width(), h = s.center.height();
  if (w <= 0 || h <= 0) {
    throw std::invalid_argument("snippet_loss: empty images");
  }
  if (s.prev.width() != w || s.prev.height() != h || s.next.width() != w ||
      s.next.height() != h || depth.width != w || depth.height != h) {
    throw std::invalid_argument("snippet_loss: frame/depth size mismatch");
  }
  if (!K.valid()) {
    throw std::invalid_argument("snippet_loss: invalid intrinsics");
  }
  validate_options(opts);
  for (double d : depth.data) {
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw std::invalid_argument(
          "snippet_loss: depth must be strictly positive and finite");
    }
  }
}

// Edge-aware smoothness on an optionally mean-normalized depth plane.
// Returns the reduced value; `adjoint` (when non-null) receives
// d smooth / d normalized-depth for the gradient chain.
double smoothness_term(const Field& depth, const Field& image, bool normalize,
                       Reduction reduction, Field* adjoint) {
  const int w = depth.width, h = depth.height;
  const std::size_t n = depth.data.size();

  double mean = 1.0;
  if (normalize) {
    mean = pairwise_sum(depth.data) / static_cast<double>(n);
  }
  const double scale =
      reduction == Reduction::kMean ? 1.0 / static_cast<double>(n) : 1.0;

  std::vector<double> terms;
  terms.reserve(n);
  if (adjoint) *adjoint = Field(w, h, 1);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double term = 0.0;
      if (x + 1 < w) {
        const double dd = (depth.at(x + 1, y) - depth.at(x, y)) / mean;
        double g = 0.0;
        for (int c = 0; c < 3; ++c) {
          g += std::abs(image.at(x + 1, y, c) - image.at(x, y, c));
        }
        const double wgt = std::exp(-g / 3.0);
        term += std::abs(dd) * wgt;
        if (adjoint) {
          const double a = sgn(dd) * wgt * scale;
          adjoint->at(x + 1, y) += a;
          adjoint->at(x, y) -= a;
        }
      }
      if (y + 1 < h) {
        const double dd = (depth.at(x, y + 1) - depth.at(x, y)) / mean;
        double g = 0.0;
        for (int c = 0; c < 3; ++c) {
          g += std::abs(image.at(x, y + 1, c) - image.at(x, y, c));
        }
        const double wgt = std::exp(-g / 3.0);
        term += std::abs(dd) * wgt;
        if (adjoint) {
          const double a = sgn(dd) * wgt * scale;
          adjoint->at(x, y + 1) += a;
          adjoint->at(x, y) -= a;
        }
      }
      terms.push_back(term);
    }
  }
  const double sum = pairwise_sum(terms);
  return reduction == Reduction::kMean ? sum / static_cast<double>(n) : sum;
}

struct SnippetEval {
  TargetCache target;
  std::array<SourceEval, 2> warped;  // prev, next
  PhotoSelection selection;
  SnippetLossReport report;
};

// Winning source per pixel. Exact ties are broken by pixel parity instead
// of always favoring one source: the min value (and thus the loss) is the
// same either way, but at the zero-motion start both warped errors tie
// bitwise everywhere, and a one-sided tie-break would starve the other
// pose of photometric gradient for good.
int argmin_source(const std::array<SourceEval, 2>& warped, int x, int y) {
  const double e0 = warped[0].err.at(x, y);
  const double e1 = warped[1].err.at(x, y);
  if (e1 < e0) return 1;
  if (e1 == e0 && std::isfinite(e0) && ((x + y) & 1) != 0) return 1;
  return 0;
}

// Full strict evaluation: warp both sources, build the min-reprojection
// error, auto-mask against the unwarped errors and reduce.
SnippetEval evaluate_snippet(const Snippet& snippet, const Field& depth,
                             const PoseVector& to_prev,
                             const PoseVector& to_next,
                             const CameraIntrinsics& K, const LossOptions& opts,
                             bool keep_grad_caches) {
  validate_snippet_inputs(snippet, depth, K, opts);
  require_finite_pose(to_prev, "snippet_loss");
  require_finite_pose(to_next, "snippet_loss");

  const int w = snippet.center.width(), h = snippet.center.height();
  SnippetEval ev;
  ev.target.img = image_to_field(snippet.center);
  ev.target.sum_y = box3_sums(ev.target.img);
  ev.target.sum_yy =
      box3_sums(elementwise_product(ev.target.img, ev.target.img));

  const Field prev_f = image_to_field(snippet.prev);
  const Field next_f = image_to_field(snippet.next);

  ev.warped[0] = warp_source(prev_f, depth, to_prev, K, SampleMode::kStrict,
                             keep_grad_caches);
  ev.warped[1] = warp_source(next_f, depth, to_next, K, SampleMode::kStrict,
                             keep_grad_caches);
  score_source(ev.warped[0], ev.target, opts);
  score_source(ev.warped[1], ev.target, opts);

  // Identity "warp" of the raw sources for the auto-mask comparison.
  std::array<Field, 2> unwarped_err;
  for (int s = 0; s < 2; ++s) {
    SourceEval plain;
    plain.warp_valid = ValidityMask(w, h, true);
    plain.recon = s == 0 ? prev_f : next_f;
    score_source(plain, ev.target, opts);
    unwarped_err[s] = std::move(plain.err);
  }

  Field min_error(w, h, 1, kInf);
  ev.selection.include = ValidityMask(w, h, false);
  ev.selection.source.assign(static_cast<std::size_t>(w) * h, 0);

  std::vector<double> sel_l1, sel_ssim;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int best_s = argmin_source(ev.warped, x, y);
      const double best = ev.warped[best_s].err.at(x, y);
      min_error.at(x, y) = best;
      const double best_u =
          std::min(unwarped_err[0].at(x, y), unwarped_err[1].at(x, y));
      if (best < best_u) {
        ev.selection.include.set(x, y, true);
        ev.selection.source[static_cast<std::size_t>(y) * w + x] =
            static_cast<std::uint8_t>(best_s);
        sel_l1.push_back(ev.warped[best_s].l1.at(x, y));
        sel_ssim.push_back(ev.warped[best_s].ssim_term.at(x, y));
      }
    }
  }
  ev.selection.count = sel_l1.size();

  SnippetLossReport& rep = ev.report;
  rep.photometric_empty = sel_l1.empty();
  if (!sel_l1.empty()) {
    const double denom = opts.reduction == Reduction::kMean
                             ? static_cast<double>(sel_l1.size())
                             : 1.0;
    rep.recon = pairwise_sum(sel_l1) / denom;
    rep.ssim = pairwise_sum(sel_ssim) / denom;
  }
  rep.smooth = smoothness_term(depth, ev.target.img, opts.normalize_smoothness,
                               opts.reduction, nullptr);
  rep.total = opts.weights.recon * rep.recon + opts.weights.ssim * rep.ssim +
              opts.weights.smooth * rep.smooth;
  rep.min_error = std::move(min_error);
  rep.automask = ev.selection.include;
  rep.included_pixels = ev.selection.count;
  return ev;
}

// Evaluation of the surrogate under a frozen selection: recompute the two
// warped views (leniently) and reduce over exactly the frozen pixels. The
// pose-independent planes are borrowed: from an evaluation context when one
// drives the call, otherwise from the *_store fields filled per call. The
// struct is filled in place (never returned by value) so the borrowed
// pointers cannot outlive or trail their storage.
struct FrozenEval {
  TargetCache target_store;
  std::array<Field, 2> src_store;
  const TargetCache* target = nullptr;
  std::array<const Field*, 2> src_img = {nullptr, nullptr};
  std::array<SourceEval, 2> warped;
  double recon = 0.0, ssim = 0.0, smooth = 0.0, total = 0.0;
  double photo_sum = 0.0;  // weighted photometric sum before any reduction
};

// Context-free path: build the planes fresh from the snippet.
void fill_planes(FrozenEval& fe, const Snippet& snippet) {
  fe.target_store.img = image_to_field(snippet.center);
  fe.target_store.sum_y = box3_sums(fe.target_store.img);
  fe.target_store.sum_yy =
      box3_sums(elementwise_product(fe.target_store.img, fe.target_store.img));
  fe.src_store[0] = image_to_field(snippet.prev);
  fe.src_store[1] = image_to_field(snippet.next);
  fe.target = &fe.target_store;
  fe.src_img[0] = &fe.src_store[0];
  fe.src_img[1] = &fe.src_store[1];
}

void evaluate_frozen(FrozenEval& fe, const Snippet& snippet, const Field& depth,
                     const PoseVector& to_prev, const PoseVector& to_next,
                     const CameraIntrinsics& K, const LossOptions& opts,
                     const PhotoSelection& sel, bool keep_grad_caches,
                     Field* smooth_adjoint) {
  validate_snippet_inputs(snippet, depth, K, opts);
  require_finite_pose(to_prev, "snippet_loss_frozen");
  require_finite_pose(to_next, "snippet_loss_frozen");

  const int w = snippet.center.width(), h = snippet.center.height();
  if (sel.include.width() != w || sel.include.height() != h ||
      sel.source.size() != static_cast<std::size_t>(w) * h) {
    throw std::invalid_argument("snippet_loss_frozen: selection size mismatch");
  }

  fill_planes(fe, snippet);

  // Only reconstruct sources the selection references; an unused plane
  // cannot contribute to the value or to any adjoint (the gradient chain
  // walks per-pixel winners only), and single-source selections are the
  // common case during the optimizer's warm-up phases.
  bool used[2] = {false, false};
  for (int y = 0; y < h && !(used[0] && used[1]); ++y) {
    for (int x = 0; x < w; ++x) {
      if (sel.include.at(x, y)) {
        used[sel.source[static_cast<std::size_t>(y) * w + x] != 0] = true;
      }
    }
  }
  for (int s = 0; s < 2; ++s) {
    if (!used[s]) continue;
    fe.warped[s] =
        warp_source(*fe.src_img[s], depth, s == 0 ? to_prev : to_next, K,
                    SampleMode::kExtrapolate, keep_grad_caches);
    score_source(fe.warped[s], *fe.target, opts);
  }

  std::vector<double> sel_l1, sel_ssim;
  sel_l1.reserve(sel.count);
  sel_ssim.reserve(sel.count);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!sel.include.at(x, y)) continue;
      const int s = sel.source[static_cast<std::size_t>(y) * w + x];
      if (std::isfinite(fe.warped[s].err.at(x, y))) {
        sel_l1.push_back(fe.warped[s].l1.at(x, y));
        sel_ssim.push_back(fe.warped[s].ssim_term.at(x, y));
      } else {
        // The frozen pixel's window became unavailable under a large probe:
        // keep a deterministic worst-case score.
        sel_l1.push_back(1.0);
        sel_ssim.push_back(opts.ssim.halved ? 0.5 : 1.0);
      }
    }
  }
  if (!sel_l1.empty()) {
    const double sum_l1 = pairwise_sum(sel_l1);
    const double sum_ssim = pairwise_sum(sel_ssim);
    fe.photo_sum = opts.weights.recon * sum_l1 + opts.weights.ssim * sum_ssim;
    const double denom = opts.reduction == Reduction::kMean
                             ? static_cast<double>(sel_l1.size())
                             : 1.0;
    fe.recon = sum_l1 / denom;
    fe.ssim = sum_ssim / denom;
  }
  fe.smooth = smoothness_term(depth, fe.target->img, opts.normalize_smoothness,
                              opts.reduction, smooth_adjoint);
  fe.total = opts.weights.recon * fe.recon + opts.weights.ssim * fe.ssim +
             opts.weights.smooth * fe.smooth;
}

// d total / d recon_s(q, c) for the frozen surrogate: the L1 sign at each
// selected center plus the SSIM window derivative scattered over the
// center's 3x3 neighborhood.
struct AdjointPlanes {
  std::array<Field, 2> a;  // 3ch each
  std::array<ValidityMask, 2> touched;
};

AdjointPlanes photometric_adjoint(const FrozenEval& fe,
                                  const PhotoSelection& sel,
                                  const LossOptions& opts, double denom) {
  const int w = fe.target->img.width, h = fe.target->img.height;
  AdjointPlanes ap;
  for (int s = 0; s < 2; ++s) {
    ap.a[s] = Field(w, h, 3);
    ap.touched[s] = ValidityMask(w, h, false);
  }

  const double l1_scale = opts.weights.recon / (3.0 * denom);
  const double k = opts.ssim.halved ? 0.5 : 1.0;
  const double ssim_scale = -k * opts.weights.ssim / (3.0 * denom);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!sel.include.at(x, y)) continue;
      const int s = sel.source[static_cast<std::size_t>(y) * w + x];
      const SourceEval& e = fe.warped[s];
      if (!std::isfinite(e.err.at(x, y))) continue;  // sentinel pixel

      ap.touched[s].set(x, y, true);
      for (int c = 0; c < 3; ++c) {
        if (opts.weights.recon != 0.0) {
          ap.a[s].at(x, y, c) +=
              l1_scale * sgn(e.recon.at(x, y, c) - fe.target->img.at(x, y, c));
        }
        if (opts.weights.ssim == 0.0) continue;

        const SsimStats st =
            ssim_stats(e.sum_x.at(x, y, c), e.sum_xx.at(x, y, c),
                       e.sum_xy.at(x, y, c), fe.target->sum_y.at(x, y, c),
                       fe.target->sum_yy.at(x, y, c), opts.ssim);
        const double cd = st.c * st.d;
        const double f0 = (2.0 / 9.0) / (cd * cd);
        const double c_base =
            f0 * (st.mu_y * st.b * cd - st.mu_x * st.a * st.b * st.d);
        const double c_x = -f0 * st.a * st.b * st.c;  // times (x_i - mu_x)
        const double c_y = f0 * st.a * cd;            // times (y_i - mu_y)
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int qx = x + dx, qy = y + dy;
            const double xi = e.recon.at(qx, qy, c);
            const double yi = fe.target->img.at(qx, qy, c);
            const double ds =
                c_base + c_x * (xi - st.mu_x) + c_y * (yi - st.mu_y);
            ap.a[s].at(qx, qy, c) += ssim_scale * ds;
            ap.touched[s].set(qx, qy, true);
          }
        }
      }
    }
  }
  return ap;
}

// Chain an adjoint plane through the sampler and projection. `mode` picks
// the downstream variable: pose (12 entries via out_pose) or depth (full
// plane via out_depth).
void chain_adjoint(const FrozenEval& fe, const AdjointPlanes& ap,
                   const Field& depth, const PoseVector& to_prev,
                   const PoseVector& to_next, const CameraIntrinsics& K,
                   SnippetPoseGradient* out_pose, Field* out_depth) {
  const int w = fe.target->img.width, h = fe.target->img.height;
  const PoseVector* poses[2] = {&to_prev, &to_next};
  const double inv_fx = 1.0 / K.fx, inv_fy = 1.0 / K.fy;

  for (int s = 0; s < 2; ++s) {
    const SourceEval& e = fe.warped[s];
    const Field& src = *fe.src_img[s];
    const auto dR = euler_rotation_derivatives(poses[s]->r);
    const Eigen::Matrix3d R = euler_to_rotation(poses[s]->r);
    Eigen::Matrix<double, 6, 1>* g =
        out_pose ? (s == 0 ? &out_pose->to_prev : &out_pose->to_next)
                 : nullptr;

    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!ap.touched[s].at(x, y) || !e.genuine.at(x, y)) continue;

        double px = e.sx.at(x, y), py = e.sy.at(x, y);
        // A clamped axis samples a constant: no gradient flows through it.
        bool du_on = true, dv_on = true;
        if (e.mode == SampleMode::kClamp) {
          if (px < 0.0 || px > w - 1.0) {
            px = std::clamp(px, 0.0, static_cast<double>(w - 1));
            du_on = false;
          }
          if (py < 0.0 || py > h - 1.0) {
            py = std::clamp(py, 0.0, static_cast<double>(h - 1));
            dv_on = false;
          }
        }
        const BilinearTaps t = bilinear_taps(PixelCoord{px, py}, w, h);
        const double fx_frac = px - t.x0, fy_frac = py - t.y0;

        double u = 0.0, v = 0.0;  // sum_c adjoint * d sample / d (px, py)
        for (int c = 0; c < 3; ++c) {
          const double a = ap.a[s].at(x, y, c);
          if (a == 0.0) continue;
          const double i00 = src.at(t.x0, t.y0, c);
          const double i10 = src.at(t.x1, t.y0, c);
          const double i01 = src.at(t.x0, t.y1, c);
          const double i11 = src.at(t.x1, t.y1, c);
          const double gx =
              (1.0 - fy_frac) * (i10 - i00) + fy_frac * (i11 - i01);
          const double gy =
              (1.0 - fx_frac) * (i01 - i00) + fx_frac * (i11 - i10);
          u += a * gx;
          v += a * gy;
        }
        if (!du_on) u = 0.0;
        if (!dv_on) v = 0.0;
        if (u == 0.0 && v == 0.0) continue;

        const double X = e.xs.at(x, y, 0), Y = e.xs.at(x, y, 1),
                     Z = e.xs.at(x, y, 2);
        if (!(Z > kMinProjectedDepth)) continue;
        const double iz = 1.0 / Z;
        const Eigen::Vector3d hvec(
            u * K.fx * iz, v * K.fy * iz,
            -(u * K.fx * X + v * K.fy * Y) * iz * iz);

        const Eigen::Vector3d ray((x - K.cx) * inv_fx, (y - K.cy) * inv_fy,
                                  1.0);
        if (g) {
          const double d = depth.at(x, y);
          (*g)[0] += hvec.x();
          (*g)[1] += hvec.y();
          (*g)[2] += hvec.z();
          const Eigen::Vector3d Xt = d * ray;
          for (int k = 0; k < 3; ++k) {
            (*g)[3 + k] += hvec.dot(dR[k] * Xt);
          }
        }
        if (out_depth) {
          out_depth->at(x, y) += hvec.dot(R * ray);
        }
      }
    }
  }
}

void fill_report_from_frozen(const FrozenEval& fe, const PhotoSelection& sel,
                             SnippetLossReport* rep) {
  rep->recon = fe.recon;
  rep->ssim = fe.ssim;
  rep->smooth = fe.smooth;
  rep->total = fe.total;
  rep->automask = sel.include;
  rep->included_pixels = sel.count;
  rep->photometric_empty = sel.count == 0;
}

double mean_denominator(const LossOptions& opts, std::size_t n) {
  return opts.reduction == Reduction::kMean && n > 0 ? static_cast<double>(n)
                                                     : 1.0;
}

// Evaluation of the working objective under a frozen branch assignment:
// border-clamped warps, so each pixel's error is continuous in the poses
// and saturates instead of growing once the warp leaves the image. A
// selected pixel whose branch became unprojectable altogether contributes
// its stationary floor, keeping the value defined for arbitrary probes.
// The caller has already pointed fe at its planes (fill_planes or an
// evaluation context); `smooth_hint`, when given, is the precomputed
// smoothness value at this depth and is only usable without an adjoint.
void evaluate_working_core(FrozenEval& fe, const Field& depth,
                           const PoseVector& to_prev,
                           const PoseVector& to_next,
                           const CameraIntrinsics& K, const LossOptions& opts,
                           const WorkingSelection& ws, bool keep_grad_caches,
                           Field* smooth_adjoint, const double* smooth_hint) {
  require_finite_pose(to_prev, "snippet_working_loss");
  require_finite_pose(to_next, "snippet_working_loss");

  const int w = fe.target->img.width, h = fe.target->img.height;
  const PhotoSelection& sel = ws.photo;
  if (sel.include.width() != w || sel.include.height() != h ||
      sel.source.size() != static_cast<std::size_t>(w) * h ||
      ws.floor_err.width != w || ws.floor_err.height != h) {
    throw std::invalid_argument(
        "snippet_working_loss: selection size mismatch");
  }

  bool used[2] = {false, false};
  for (int y = 0; y < h && !(used[0] && used[1]); ++y) {
    for (int x = 0; x < w; ++x) {
      if (sel.include.at(x, y)) {
        used[sel.source[static_cast<std::size_t>(y) * w + x] != 0] = true;
      }
    }
  }
  for (int s = 0; s < 2; ++s) {
    if (!used[s]) continue;
    fe.warped[s] =
        warp_source(*fe.src_img[s], depth, s == 0 ? to_prev : to_next, K,
                    SampleMode::kClamp, keep_grad_caches);
    score_source(fe.warped[s], *fe.target, opts);
  }

  std::vector<double> terms;
  terms.reserve(sel.count);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!sel.include.at(x, y)) continue;
      const int s = sel.source[static_cast<std::size_t>(y) * w + x];
      const double e = fe.warped[s].err.at(x, y);
      terms.push_back(std::isfinite(e) ? e : ws.floor_err.at(x, y));
    }
  }
  fe.photo_sum = pairwise_sum(terms);
  fe.smooth = (smooth_hint != nullptr && smooth_adjoint == nullptr)
                  ? *smooth_hint
                  : smoothness_term(depth, fe.target->img,
                                    opts.normalize_smoothness, opts.reduction,
                                    smooth_adjoint);
  fe.total = (fe.photo_sum + ws.masked_sum) / mean_denominator(opts, ws.denom) +
             opts.weights.smooth * fe.smooth;
}

// Context-free working evaluation: validate, build planes, evaluate.
void evaluate_working(FrozenEval& fe, const Snippet& snippet,
                      const Field& depth, const PoseVector& to_prev,
                      const PoseVector& to_next, const CameraIntrinsics& K,
                      const LossOptions& opts, const WorkingSelection& ws,
                      bool keep_grad_caches, Field* smooth_adjoint) {
  validate_snippet_inputs(snippet, depth, K, opts);
  fill_planes(fe, snippet);
  evaluate_working_core(fe, depth, to_prev, to_next, K, opts, ws,
                        keep_grad_caches, smooth_adjoint, nullptr);
}

// Shared depth-gradient chain: photometric adjoint through the sampler plus
// the smoothness term, with the photometric reduction denominator supplied
// by the caller (selected-pixel count for the strict surrogate, the fixed
// interior count for the working objective).
Field depth_gradient_from(const FrozenEval& fe, const Field& smooth_adj,
                          const PhotoSelection& selection, double denom,
                          const Field& depth, const PoseVector& to_prev,
                          const PoseVector& to_next,
                          const CameraIntrinsics& K, const LossOptions& opts) {
  const AdjointPlanes ap = photometric_adjoint(fe, selection, opts, denom);

  Field grad(depth.width, depth.height, 1);
  chain_adjoint(fe, ap, depth, to_prev, to_next, K, nullptr, &grad);

  // Smoothness chain, including the mean normalization when enabled.
  const double wsm = opts.weights.smooth;
  if (wsm != 0.0) {
    if (opts.normalize_smoothness) {
      const double n = static_cast<double>(depth.data.size());
      const double mean = pairwise_sum(depth.data) / n;
      std::vector<double> gd(depth.data.size());
      for (std::size_t i = 0; i < gd.size(); ++i) {
        gd[i] = smooth_adj.data[i] * depth.data[i];
      }
      const double dot = pairwise_sum(gd);
      for (std::size_t i = 0; i < grad.data.size(); ++i) {
        grad.data[i] +=
            wsm * (smooth_adj.data[i] / mean - dot / (mean * mean * n));
      }
    } else {
      for (std::size_t i = 0; i < grad.data.size(); ++i) {
        grad.data[i] += wsm * smooth_adj.data[i];
      }
    }
  }
  return grad;
}

}  // namespace

// Everything a working-objective call needs besides the poses, computed
// once. The depth plane is copied in so the context cannot dangle.
struct SnippetEvalContext::Impl {
  int w = 0, h = 0;
  CameraIntrinsics K;
  LossOptions opts;
  Field depth;                        // pinned metric depth plane
  TargetCache target;                 // center view and its window sums
  std::array<Field, 2> src_img;       // prev, next source planes
  std::array<Field, 2> unwarped_err;  // stationary identity errors
  Field floor;                        // per-pixel min of the two
  double smooth = 0.0;                // smoothness value at the pinned depth
};

SnippetEvalContext::SnippetEvalContext(const Snippet& snippet,
                                       const Field& depth,
                                       const CameraIntrinsics& K,
                                       const LossOptions& opts)
    : impl_(std::make_unique<Impl>()) {
  validate_snippet_inputs(snippet, depth, K, opts);
  Impl& im = *impl_;
  im.w = snippet.center.width();
  im.h = snippet.center.height();
  im.K = K;
  im.opts = opts;
  im.depth = depth;
  im.target.img = image_to_field(snippet.center);
  im.target.sum_y = box3_sums(im.target.img);
  im.target.sum_yy =
      box3_sums(elementwise_product(im.target.img, im.target.img));
  im.src_img[0] = image_to_field(snippet.prev);
  im.src_img[1] = image_to_field(snippet.next);

  // Identity "warp" of the raw sources: the stationary floor branch. Its
  // error is finite exactly on the window-valid interior, which fixes the
  // pixel set the objective averages over.
  for (int s = 0; s < 2; ++s) {
    SourceEval plain;
    plain.warp_valid = ValidityMask(im.w, im.h, true);
    plain.recon = im.src_img[s];
    score_source(plain, im.target, opts);
    im.unwarped_err[s] = std::move(plain.err);
  }
  im.floor = Field(im.w, im.h, 1, kInf);
  for (int y = 0; y < im.h; ++y) {
    for (int x = 0; x < im.w; ++x) {
      im.floor.at(x, y) =
          std::min(im.unwarped_err[0].at(x, y), im.unwarped_err[1].at(x, y));
    }
  }
  im.smooth = smoothness_term(depth, im.target.img, opts.normalize_smoothness,
                              opts.reduction, nullptr);
}

SnippetEvalContext::SnippetEvalContext(SnippetEvalContext&&) noexcept = default;
SnippetEvalContext& SnippetEvalContext::operator=(SnippetEvalContext&&) noexcept =
    default;
SnippetEvalContext::~SnippetEvalContext() = default;

MaskedLoss reconstruction_loss(const ImageBuffer& recon,
                               const ImageBuffer& target,
                               const ValidityMask& mask) {
  if (recon.width() != target.width() || recon.height() != target.height() ||
      recon.width() != mask.width() || recon.height() != mask.height()) {
    throw std::invalid_argument("reconstruction_loss: size mismatch");
  }
  std::vector<double> diffs;
  diffs.reserve(mask.count() * 3);
  for (int y = 0; y < recon.height(); ++y) {
    for (int x = 0; x < recon.width(); ++x) {
      if (!mask.at(x, y)) continue;
      for (int c = 0; c < 3; ++c) {
        diffs.push_back(std::abs(static_cast<double>(recon.at(x, y, c)) -
                                 static_cast<double>(target.at(x, y, c))));
      }
    }
  }
  if (diffs.empty()) {
    return MaskedLoss{0.0, true};
  }
  return MaskedLoss{pairwise_sum(diffs) / static_cast<double>(diffs.size()),
                    false};
}

double ssim_patch(std::span<const double> x, std::span<const double> y,
                  const SsimParams& params) {
  if (x.size() != y.size() || x.empty()) {
    throw std::invalid_argument(
        "ssim_patch: patches must match and be non-empty");
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  const double mx = sx / n, my = sy / n;
  const double vx = sxx / n - mx * mx;
  const double vy = syy / n - my * my;
  const double cov = sxy / n - mx * my;
  const double a = 2.0 * mx * my + params.c1;
  const double b = 2.0 * cov + params.c2;
  const double c = mx * mx + my * my + params.c1;
  const double d = vx + vy + params.c2;
  return (a * b) / (c * d);
}

MaskedLoss ssim_loss(const ImageBuffer& recon, const ImageBuffer& target,
                     const ValidityMask& mask, const SsimParams& params) {
  if (recon.width() != target.width() || recon.height() != target.height() ||
      recon.width() != mask.width() || recon.height() != mask.height()) {
    throw std::invalid_argument("ssim_loss: size mismatch");
  }
  const int w = recon.width(), h = recon.height();
  const double k = params.halved ? 0.5 : 1.0;
  std::vector<double> terms;
  std::array<double, 9> px{}, py{};
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      bool ok = true;
      for (int dy = -1; dy <= 1 && ok; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (!mask.at(x + dx, y + dy)) {
            ok = false;
            break;
          }
        }
      }
      if (!ok) continue;
      double term = 0.0;
      for (int c = 0; c < 3; ++c) {
        int i = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx, ++i) {
            px[i] = recon.at(x + dx, y + dy, c);
            py[i] = target.at(x + dx, y + dy, c);
          }
        }
        term += (1.0 - ssim_patch(px, py, params)) * k;
      }
      terms.push_back(term / 3.0);
    }
  }
  if (terms.empty()) {
    return MaskedLoss{0.0, true};
  }
  return MaskedLoss{pairwise_sum(terms) / static_cast<double>(terms.size()),
                    false};
}

double smoothness_loss(const DepthMap& depth, const ImageBuffer& image) {
  if (depth.width() != image.width() || depth.height() != image.height()) {
    throw std::invalid_argument("smoothness_loss: size mismatch");
  }
  if (depth.width() < 2 || depth.height() < 2) {
    throw std::invalid_argument("smoothness_loss: map smaller than 2x2");
  }
  const Field d = depth_to_field(depth.data(), depth.width(), depth.height());
  return smoothness_term(d, image_to_field(image), false, Reduction::kMean,
                         nullptr);
}

MinReprojection min_reprojection_automask(const std::vector<Field>& warped,
                                          const std::vector<Field>& unwarped) {
  if (warped.empty()) {
    throw std::invalid_argument("min_reprojection_automask: no warped maps");
  }
  const int w = warped.front().width, h = warped.front().height;
  auto check = [&](const Field& f) {
    if (f.width != w || f.height != h || f.channels != 1) {
      throw std::invalid_argument("min_reprojection_automask: size mismatch");
    }
  };
  for (const auto& f : warped) check(f);
  for (const auto& f : unwarped) check(f);

  MinReprojection out;
  out.min_error = Field(w, h, 1, kInf);
  out.automask = ValidityMask(w, h, false);
  out.source.assign(static_cast<std::size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double best = kInf;
      std::uint8_t best_s = 0;
      for (std::size_t s = 0; s < warped.size(); ++s) {
        const double e = warped[s].at(x, y);
        if (e < best) {
          best = e;
          best_s = static_cast<std::uint8_t>(s);
        }
      }
      double best_u = kInf;
      for (const auto& f : unwarped) {
        best_u = std::min(best_u, f.at(x, y));
      }
      out.min_error.at(x, y) = best;
      out.source[static_cast<std::size_t>(y) * w + x] = best_s;
      out.automask.set(x, y, best < best_u);
    }
  }
  return out;
}

SnippetLossReport snippet_loss(const Snippet& snippet, const Field& depth,
                               const PoseVector& to_prev,
                               const PoseVector& to_next,
                               const CameraIntrinsics& K,
                               const LossOptions& opts) {
  return evaluate_snippet(snippet, depth, to_prev, to_next, K, opts, false)
      .report;
}

SnippetLossReport snippet_loss(const Snippet& snippet, const DepthMap& depth,
                               const PoseVector& to_prev,
                               const PoseVector& to_next,
                               const CameraIntrinsics& K,
                               const LossOptions& opts) {
  return snippet_loss(
      snippet, depth_to_field(depth.data(), depth.width(), depth.height()),
      to_prev, to_next, K, opts);
}

SnippetLossReport snippet_loss(const Snippet& snippet,
                               const InverseDepthMap& inv_depth,
                               const PoseVector& to_prev,
                               const PoseVector& to_next,
                               const CameraIntrinsics& K,
                               const LossOptions& opts) {
  Field d(inv_depth.width(), inv_depth.height(), 1);
  for (std::size_t i = 0; i < d.data.size(); ++i) {
    d.data[i] = decode_inverse_depth(inv_depth.data()[i], opts.depth_range);
  }
  return snippet_loss(snippet, d, to_prev, to_next, K, opts);
}

PhotoSelection snippet_selection(const Snippet& snippet, const Field& depth,
                                 const PoseVector& to_prev,
                                 const PoseVector& to_next,
                                 const CameraIntrinsics& K,
                                 const LossOptions& opts, bool apply_automask) {
  SnippetEval ev =
      evaluate_snippet(snippet, depth, to_prev, to_next, K, opts, false);
  if (apply_automask) return std::move(ev.selection);

  // Fallback form: keep every pixel whose best warped error is usable.
  const int w = snippet.center.width(), h = snippet.center.height();
  PhotoSelection sel;
  sel.include = ValidityMask(w, h, false);
  sel.source.assign(static_cast<std::size_t>(w) * h, 0);
  sel.count = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int best_s = argmin_source(ev.warped, x, y);
      if (std::isfinite(ev.warped[best_s].err.at(x, y))) {
        sel.include.set(x, y, true);
        sel.source[static_cast<std::size_t>(y) * w + x] =
            static_cast<std::uint8_t>(best_s);
        ++sel.count;
      }
    }
  }
  return sel;
}

double snippet_loss_frozen(const Snippet& snippet, const Field& depth,
                           const PoseVector& to_prev,
                           const PoseVector& to_next,
                           const CameraIntrinsics& K, const LossOptions& opts,
                           const PhotoSelection& selection) {
  return evaluate_frozen(snippet, depth, to_prev, to_next, K, opts, selection,
                         false, nullptr)
      .total;
}

SnippetPoseGradient grad_snippet_loss_pose_frozen(
    const Snippet& snippet, const Field& depth, const PoseVector& to_prev,
    const PoseVector& to_next, const CameraIntrinsics& K,
    const LossOptions& opts, const PhotoSelection& selection) {
  const FrozenEval fe = evaluate_frozen(snippet, depth, to_prev, to_next, K,
                                        opts, selection, true, nullptr);
  const AdjointPlanes ap = photometric_adjoint(
      fe, selection, opts, mean_denominator(opts, selection.count));
  SnippetPoseGradient out;
  chain_adjoint(fe, ap, depth, to_prev, to_next, K, &out, nullptr);
  fill_report_from_frozen(fe, selection, &out.report);
  return out;
}

SnippetPoseGradient grad_snippet_loss_pose(const Snippet& snippet,
                                           const DepthMap& depth,
                                           const PoseVector& to_prev,
                                           const PoseVector& to_next,
                                           const CameraIntrinsics& K,
                                           const LossOptions& opts) {
  const Field d =
      depth_to_field(depth.data(), depth.width(), depth.height());
  const PhotoSelection sel =
      snippet_selection(snippet, d, to_prev, to_next, K, opts);
  return grad_snippet_loss_pose_frozen(snippet, d, to_prev, to_next, K, opts,
                                       sel);
}

Field grad_snippet_loss_depth_frozen(const Snippet& snippet, const Field& depth,
                                     const PoseVector& to_prev,
                                     const PoseVector& to_next,
                                     const CameraIntrinsics& K,
                                     const LossOptions& opts,
                                     const PhotoSelection& selection) {
  Field smooth_adj;
  const FrozenEval fe = evaluate_frozen(snippet, depth, to_prev, to_next, K,
                                        opts, selection, true, &smooth_adj);
  return depth_gradient_from(fe, smooth_adj, selection,
                             mean_denominator(opts, selection.count), depth,
                             to_prev, to_next, K, opts);
}

WorkingSelection snippet_working_selection(const Snippet& snippet,
                                           const Field& depth,
                                           const PoseVector& to_prev,
                                           const PoseVector& to_next,
                                           const CameraIntrinsics& K,
                                           const LossOptions& opts,
                                           unsigned sources, double trim) {
  if (sources == 0 || sources > 3) {
    throw std::invalid_argument(
        "snippet_working_selection: source mask must be 1, 2 or 3");
  }
  if (!(trim >= 0.0 && trim < 1.0)) {
    throw std::invalid_argument(
        "snippet_working_selection: trim must lie in [0, 1)");
  }
  const SnippetEvalContext ctx(snippet, depth, K, opts);
  return snippet_working_selection(ctx, to_prev, to_next, sources, trim);
}

WorkingSelection snippet_working_selection(const SnippetEvalContext& ctx,
                                           const PoseVector& to_prev,
                                           const PoseVector& to_next,
                                           unsigned sources, double trim) {
  if (sources == 0 || sources > 3) {
    throw std::invalid_argument(
        "snippet_working_selection: source mask must be 1, 2 or 3");
  }
  if (!(trim >= 0.0 && trim < 1.0)) {
    throw std::invalid_argument(
        "snippet_working_selection: trim must lie in [0, 1)");
  }
  require_finite_pose(to_prev, "snippet_working_selection");
  require_finite_pose(to_next, "snippet_working_selection");

  const SnippetEvalContext::Impl& im = ctx.impl();
  const int w = im.w, h = im.h;
  const LossOptions& opts = im.opts;

  std::array<SourceEval, 2> warped;
  for (int s = 0; s < 2; ++s) {
    if (((sources >> s) & 1u) == 0) continue;
    warped[s] = warp_source(im.src_img[s], im.depth,
                            s == 0 ? to_prev : to_next, im.K,
                            SampleMode::kClamp, false);
    score_source(warped[s], im.target, opts);
  }

  WorkingSelection ws;
  ws.sources = sources;
  ws.photo.include = ValidityMask(w, h, false);
  ws.photo.source.assign(static_cast<std::size_t>(w) * h, 0);
  ws.photo.count = 0;
  ws.floor_err = im.floor;

  // Per interior pixel: its branch choice and the value it would
  // contribute, gathered before the trim decides which pixels stay.
  struct PixelPick {
    std::size_t idx;
    double value;
    std::int8_t source;  // 0/1 warped, -1 floored
  };
  std::vector<PixelPick> picks;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double floor_err = im.floor.at(x, y);
      if (!std::isfinite(floor_err)) continue;

      // Best participating warped branch; exact ties between the two
      // sources break by pixel parity (same reasoning as argmin_source).
      int best_s = -1;
      double best = kInf;
      for (int s = 0; s < 2; ++s) {
        if (((sources >> s) & 1u) == 0) continue;
        const double e = warped[s].err.at(x, y);
        if (!std::isfinite(e)) continue;
        if (best_s < 0 || e < best || (e == best && ((x + y) & 1) != 0)) {
          best = e;
          best_s = s;
        }
      }

      // Ties against the floor keep the warped branch: at the zero-motion
      // start every warped error equals its floor bitwise, and a pixel on
      // the floor contributes no pose gradient at all.
      PixelPick p;
      p.idx = static_cast<std::size_t>(y) * w + x;
      if (best_s >= 0 && best <= floor_err) {
        p.value = best;
        p.source = static_cast<std::int8_t>(best_s);
      } else {
        p.value = floor_err;
        p.source = -1;
      }
      picks.push_back(p);
    }
  }

  const std::size_t cut =
      static_cast<std::size_t>(trim * static_cast<double>(picks.size()));
  if (cut > 0) {
    // Keep the smallest contributions; ties resolve by pixel index so the
    // result does not depend on the partition's internals.
    std::nth_element(picks.begin(),
                     picks.end() - static_cast<std::ptrdiff_t>(cut),
                     picks.end(), [](const PixelPick& a, const PixelPick& b) {
                       if (a.value != b.value) return a.value < b.value;
                       return a.idx < b.idx;
                     });
    picks.resize(picks.size() - cut);
    std::sort(picks.begin(), picks.end(),
              [](const PixelPick& a, const PixelPick& b) {
                return a.idx < b.idx;
              });
  }
  ws.denom = picks.size();

  std::vector<double> kept, floored;
  for (const PixelPick& p : picks) {
    if (p.source >= 0) {
      ws.photo.include.set(static_cast<int>(p.idx % w),
                           static_cast<int>(p.idx / w), true);
      ws.photo.source[p.idx] = static_cast<std::uint8_t>(p.source);
      ++ws.photo.count;
      kept.push_back(p.value);
    } else {
      floored.push_back(p.value);
    }
  }
  ws.masked_sum = pairwise_sum(floored);

  ws.loss_at_freeze =
      (pairwise_sum(kept) + ws.masked_sum) / mean_denominator(opts, ws.denom) +
      opts.weights.smooth * im.smooth;
  return ws;
}

WorkingSelection snippet_dense_selection(const Snippet& snippet,
                                         const Field& depth,
                                         const PoseVector& to_prev,
                                         const PoseVector& to_next,
                                         const CameraIntrinsics& K,
                                         const LossOptions& opts, int source,
                                         double trim) {
  if (source != 0 && source != 1) {
    throw std::invalid_argument(
        "snippet_dense_selection: source must be 0 (prev) or 1 (next)");
  }
  if (!(trim >= 0.0 && trim < 1.0)) {
    throw std::invalid_argument(
        "snippet_dense_selection: trim must lie in [0, 1)");
  }
  validate_snippet_inputs(snippet, depth, K, opts);
  require_finite_pose(to_prev, "snippet_dense_selection");
  require_finite_pose(to_next, "snippet_dense_selection");

  const int w = snippet.center.width(), h = snippet.center.height();
  TargetCache target;
  target.img = image_to_field(snippet.center);
  target.sum_y = box3_sums(target.img);
  target.sum_yy = box3_sums(elementwise_product(target.img, target.img));

  const Field src_f =
      image_to_field(source == 0 ? snippet.prev : snippet.next);

  // The identity eval only marks which pixels have a full comparison
  // window; its values are irrelevant here. The interior it yields matches
  // the floored builder's, so phases share one pixel population.
  SourceEval plain;
  plain.warp_valid = ValidityMask(w, h, true);
  plain.recon = src_f;
  score_source(plain, target, opts);

  WorkingSelection ws;
  ws.sources = 1u << source;
  ws.photo.include = ValidityMask(w, h, false);
  ws.photo.source.assign(static_cast<std::size_t>(w) * h,
                         static_cast<std::uint8_t>(source));
  ws.floor_err = Field(w, h, 1, kInf);

  std::vector<std::size_t> interior;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!std::isfinite(plain.err.at(x, y))) continue;
      interior.push_back(static_cast<std::size_t>(y) * w + x);
    }
  }

  const std::size_t cut =
      static_cast<std::size_t>(trim * static_cast<double>(interior.size()));
  if (cut > 0 && !interior.empty()) {
    const PoseVector& pose = source == 0 ? to_prev : to_next;
    SourceEval cur =
        warp_source(src_f, depth, pose, K, SampleMode::kClamp, false);
    score_source(cur, target, opts);
    // Keep the smallest errors; non-finite ones (unprojectable pixels)
    // sort last and are cut first. Ties resolve by pixel index so the
    // result does not depend on the partition's internals.
    const auto better = [&](std::size_t a, std::size_t b) {
      const double ea = cur.err.data[a], eb = cur.err.data[b];
      const bool fa = std::isfinite(ea), fb = std::isfinite(eb);
      if (fa != fb) return fa;
      if (fa && ea != eb) return ea < eb;
      return a < b;
    };
    std::nth_element(interior.begin(),
                     interior.end() - static_cast<std::ptrdiff_t>(cut),
                     interior.end(), better);
    interior.resize(interior.size() - cut);
  }

  for (const std::size_t idx : interior) {
    ws.photo.include.set(static_cast<int>(idx % w), static_cast<int>(idx / w),
                         true);
    ++ws.photo.count;
  }
  ws.denom = ws.photo.count;
  ws.masked_sum = 0.0;

  // The +inf floors double as a barrier: a pose that drives a selected
  // pixel behind the camera prices the step out of any line search.
  ws.loss_at_freeze =
      evaluate_working(snippet, depth, to_prev, to_next, K, opts, ws, false,
                       nullptr)
          .total;
  return ws;
}

double snippet_working_loss(const Snippet& snippet, const Field& depth,
                            const PoseVector& to_prev,
                            const PoseVector& to_next,
                            const CameraIntrinsics& K, const LossOptions& opts,
                            const WorkingSelection& sel) {
  return evaluate_working(snippet, depth, to_prev, to_next, K, opts, sel,
                          false, nullptr)
      .total;
}

SnippetPoseGradient grad_snippet_working_loss_pose(
    const Snippet& snippet, const Field& depth, const PoseVector& to_prev,
    const PoseVector& to_next, const CameraIntrinsics& K,
    const LossOptions& opts, const WorkingSelection& sel) {
  const FrozenEval fe = evaluate_working(snippet, depth, to_prev, to_next, K,
                                         opts, sel, true, nullptr);
  const AdjointPlanes ap = photometric_adjoint(
      fe, sel.photo, opts, mean_denominator(opts, sel.denom));
  SnippetPoseGradient out;
  chain_adjoint(fe, ap, depth, to_prev, to_next, K, &out, nullptr);
  fill_report_from_frozen(fe, sel.photo, &out.report);
  return out;
}

Field grad_snippet_working_loss_depth(const Snippet& snippet,
                                      const Field& depth,
                                      const PoseVector& to_prev,
                                      const PoseVector& to_next,
                                      const CameraIntrinsics& K,
                                      const LossOptions& opts,
                                      const WorkingSelection& sel) {
  Field smooth_adj;
  const FrozenEval fe = evaluate_working(snippet, depth, to_prev, to_next, K,
                                         opts, sel, true, &smooth_adj);
  return depth_gradient_from(fe, smooth_adj, sel.photo,
                             mean_denominator(opts, sel.denom), depth, to_prev,
                             to_next, K, opts);
}

}  // namespace photovo

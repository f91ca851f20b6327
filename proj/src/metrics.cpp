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

#include "photovo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "photovo/numeric.hpp"

namespace photovo {
namespace {

double mean_of(std::vector<double>& terms) {
  return pairwise_sum(terms) / static_cast<double>(terms.size());
}

// Median with the average-of-the-two-middle-values convention for even
// counts. Operates on a scratch copy.
double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double hi = v[mid];
  if (n % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

}  // namespace

AteReport ate(const Trajectory& estimate, const Trajectory& reference,
              AteAlignment alignment) {
  if (estimate.size() != reference.size()) {
    throw std::invalid_argument("ate: trajectory lengths differ");
  }
  if (estimate.empty()) {
    throw EmptyEvaluationError("ate: empty trajectories");
  }

  AteReport rep;
  rep.frames = estimate.size();

  if (alignment == AteAlignment::kScaleOnly) {
    std::vector<double> num, den;
    num.reserve(estimate.size());
    den.reserve(estimate.size());
    for (std::size_t i = 0; i < estimate.size(); ++i) {
      num.push_back(estimate[i].t.dot(reference[i].t));
      den.push_back(estimate[i].t.squaredNorm());
    }
    const double d = pairwise_sum(den);
    rep.scale = d > 0.0 ? pairwise_sum(num) / d : 1.0;
  }

  std::vector<double> sq;
  sq.reserve(estimate.size());
  rep.per_frame.reserve(estimate.size());
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double e2 =
        (rep.scale * estimate[i].t - reference[i].t).squaredNorm();
    sq.push_back(e2);
    rep.per_frame.push_back(std::sqrt(e2));
  }
  rep.rmse = std::sqrt(mean_of(sq));
  return rep;
}

SnippetAteReport snippet_ate(const Trajectory& estimate,
                             const Trajectory& reference, int length,
                             int stride) {
  if (length < 2) {
    throw std::invalid_argument("snippet_ate: window length must be >= 2");
  }
  if (stride < 1) {
    throw std::invalid_argument("snippet_ate: stride must be >= 1");
  }
  if (estimate.size() != reference.size()) {
    throw std::invalid_argument("snippet_ate: trajectory lengths differ");
  }
  if (estimate.size() < static_cast<std::size_t>(length)) {
    throw EmptyEvaluationError(
        "snippet_ate: trajectory shorter than one window");
  }

  std::vector<double> scores;
  for (std::size_t start = 0; start + length <= estimate.size();
       start += static_cast<std::size_t>(stride)) {
    Trajectory rel_est(length), rel_ref(length);
    const Se3Transform inv_e = invert(estimate[start]);
    const Se3Transform inv_r = invert(reference[start]);
    for (int k = 0; k < length; ++k) {
      rel_est[k] = compose(inv_e, estimate[start + k]);
      rel_ref[k] = compose(inv_r, reference[start + k]);
    }
    scores.push_back(ate(rel_est, rel_ref, AteAlignment::kScaleOnly).rmse);
  }

  SnippetAteReport rep;
  rep.snippets = scores.size();
  rep.mean = mean_of(scores);
  std::vector<double> dev;
  dev.reserve(scores.size());
  for (double s : scores) dev.push_back((s - rep.mean) * (s - rep.mean));
  rep.stddev = std::sqrt(mean_of(dev));
  return rep;
}

DepthMetricsReport depth_metrics(const DepthMap& predicted,
                                 const DepthMap& ground_truth,
                                 const DepthMetricsConfig& cfg) {
  if (predicted.width() != ground_truth.width() ||
      predicted.height() != ground_truth.height()) {
    throw std::invalid_argument("depth_metrics: size mismatch");
  }
  if (predicted.width() <= 0 || predicted.height() <= 0) {
    throw std::invalid_argument("depth_metrics: empty maps");
  }
  if (!(cfg.min_depth > 0.0) || !(cfg.cap > cfg.min_depth)) {
    throw std::invalid_argument("depth_metrics: bad depth interval");
  }

  std::vector<double> gt, pred;
  for (std::size_t i = 0; i < ground_truth.data().size(); ++i) {
    const double g = static_cast<double>(ground_truth.data()[i]);
    if (g < cfg.min_depth || g > cfg.cap || !std::isfinite(g)) continue;
    gt.push_back(g);
    pred.push_back(static_cast<double>(predicted.data()[i]));
  }
  if (gt.empty()) {
    throw EmptyEvaluationError(
        "depth_metrics: no ground-truth pixel inside the evaluation range");
  }

  DepthMetricsReport rep;
  rep.pixels = gt.size();

  if (cfg.median_scaling) {
    const double med_pred = median_of(pred);
    if (!(med_pred > 0.0)) {
      throw std::invalid_argument(
          "depth_metrics: prediction median is not positive");
    }
    rep.scale = median_of(gt) / med_pred;
  }

  const std::size_t n = gt.size();
  std::vector<double> ard(n), srd(n), se(n), sel(n), d1(n), d2(n), d3(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = gt[i];
    const double p = std::clamp(rep.scale * pred[i], cfg.min_depth, cfg.cap);
    const double diff = g - p;
    ard[i] = std::abs(diff) / g;
    srd[i] = diff * diff / g;
    se[i] = diff * diff;
    const double dl = std::log(g) - std::log(p);
    sel[i] = dl * dl;
    const double ratio = std::max(g / p, p / g);
    d1[i] = ratio < 1.25 ? 1.0 : 0.0;
    d2[i] = ratio < 1.25 * 1.25 ? 1.0 : 0.0;
    d3[i] = ratio < 1.25 * 1.25 * 1.25 ? 1.0 : 0.0;
  }
  rep.abs_rel = mean_of(ard);
  rep.sq_rel = mean_of(srd);
  rep.rmse = std::sqrt(mean_of(se));
  rep.rmse_log = std::sqrt(mean_of(sel));
  rep.delta1 = mean_of(d1);
  rep.delta2 = mean_of(d2);
  rep.delta3 = mean_of(d3);
  return rep;
}

}  // namespace photovo

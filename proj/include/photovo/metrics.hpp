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

#ifndef PHOTOVO_METRICS_HPP
#define PHOTOVO_METRICS_HPP

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "photovo/geometry.hpp"
#include "photovo/imaging.hpp"

namespace photovo {

/// Ordered camera-to-world poses.
using Trajectory = std::vector<Se3Transform>;

/// Raised when an evaluation has nothing to average (no frames, no valid
/// pixels, no overlapping files); the CLI maps it to its own exit code.
class EmptyEvaluationError : public std::runtime_error {
 public:
  explicit EmptyEvaluationError(const std::string& what)
      : std::runtime_error(what) {}
};

enum class AteAlignment {
  kNone,
  kScaleOnly,  ///< closed-form least-squares scale on positions
};

struct AteReport {
  double rmse = 0.0;   ///< sqrt(mean squared position error)
  double scale = 1.0;  ///< applied alignment scale
  std::size_t frames = 0;
  std::vector<double> per_frame;  ///< position error norm per frame
};

/// Absolute trajectory error between equally long trajectories. With
/// kScaleOnly the estimate's positions are multiplied by
/// s* = sum <p_est, p_ref> / sum <p_est, p_est> first (s* = 1 for an
/// all-zero estimate).
AteReport ate(const Trajectory& estimate, const Trajectory& reference,
              AteAlignment alignment);

struct SnippetAteReport {
  double mean = 0.0;
  double stddev = 0.0;  ///< population standard deviation
  std::size_t snippets = 0;
};

/// Sliding-window ATE: every `stride`-th window of `length` consecutive
/// frames is re-expressed relative to its first frame in both trajectories,
/// scale-aligned per window, and scored with the RMSE above; the mean and
/// spread over windows are returned. Too-short trajectories raise
/// EmptyEvaluationError.
SnippetAteReport snippet_ate(const Trajectory& estimate,
                             const Trajectory& reference, int length = 5,
                             int stride = 1);

struct DepthMetricsConfig {
  double min_depth = 1e-3;      ///< ground-truth entries below are ignored
  double cap = 80.0;            ///< ground-truth entries above are ignored
  bool median_scaling = true;   ///< scale pred by median(gt)/median(pred)
};

struct DepthMetricsReport {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;  ///< natural logarithm
  double delta1 = 0.0;    ///< fraction with max(gt/p, p/gt) < 1.25
  double delta2 = 0.0;    ///< ... < 1.25^2
  double delta3 = 0.0;    ///< ... < 1.25^3
  double scale = 1.0;     ///< applied median scale
  std::size_t pixels = 0;
};

/// Standard monocular depth metrics over pixels whose ground truth lies in
/// [min_depth, cap]. Predictions are clamped into the same interval after
/// the optional median scaling. No valid pixel raises EmptyEvaluationError.
DepthMetricsReport depth_metrics(const DepthMap& predicted,
                                 const DepthMap& ground_truth,
                                 const DepthMetricsConfig& cfg = {});

}  // namespace photovo

#endif  // PHOTOVO_METRICS_HPP

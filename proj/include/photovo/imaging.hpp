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

#ifndef PHOTOVO_IMAGING_HPP
#define PHOTOVO_IMAGING_HPP

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "photovo/geometry.hpp"

namespace photovo {

/// Three-channel (RGB) image, row-major interleaved, intensities in [0, 1].
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int width, int height, float fill = 0.0f);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * height_;
  }

  float& at(int x, int y, int c) { return data_[index(x, y, c)]; }
  float at(int x, int y, int c) const { return data_[index(x, y, c)]; }

  std::vector<float>& data() { return data_; }
  const std::vector<float>& data() const { return data_; }

  /// True when dimensions are positive and all values lie in [0, 1].
  bool valid() const;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3 + c;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

/// Metric depth per pixel. Zero marks "no measurement" and is skipped by
/// every consumer; negative or non-finite values are invalid.
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int width, int height, float fill = 0.0f);

  int width() const { return width_; }
  int height() const { return height_; }

  float& at(int x, int y) {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  float at(int x, int y) const {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  std::vector<float>& data() { return data_; }
  const std::vector<float>& data() const { return data_; }

  bool valid() const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

/// Working range for the bounded inverse-depth parameterization.
struct DepthRange {
  double min_depth = 0.1;
  double max_depth = 100.0;

  bool valid() const {
    return min_depth > 0.0 && max_depth > min_depth;
  }
};

/// Normalized inverse depth in (0, 1); decode() maps it back to metric
/// depth within a DepthRange. Keeping the parameter bounded lets the depth
/// refiner run unconstrained-style updates with a simple clamp.
class InverseDepthMap {
 public:
  InverseDepthMap() = default;
  InverseDepthMap(int width, int height, float fill = 0.5f);

  int width() const { return width_; }
  int height() const { return height_; }

  float& at(int x, int y) {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  float at(int x, int y) const {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  std::vector<float>& data() { return data_; }
  const std::vector<float>& data() const { return data_; }

  bool valid() const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

/// Decode one normalized inverse-depth value to metric depth.
double decode_inverse_depth(double d, const DepthRange& range);

/// Encode metric depth to the normalized inverse-depth parameter, clamped
/// into the open interval (0, 1).
double encode_inverse_depth(double depth, const DepthRange& range);

/// Decode a whole map.
DepthMap decode_inverse_depth_map(const InverseDepthMap& inv,
                                  const DepthRange& range);

/// Encode a whole map (entries <= 0 are clamped to the far plane).
InverseDepthMap encode_inverse_depth_map(const DepthMap& depth,
                                         const DepthRange& range);

/// Per-pixel boolean mask.
class ValidityMask {
 public:
  ValidityMask() = default;
  ValidityMask(int width, int height, bool fill = false);

  int width() const { return width_; }
  int height() const { return height_; }

  void set(int x, int y, bool v) {
    data_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0;
  }
  bool at(int x, int y) const {
    return data_[static_cast<std::size_t>(y) * width_ + x] != 0;
  }

  std::size_t count() const;

  std::vector<std::uint8_t>& data() { return data_; }
  const std::vector<std::uint8_t>& data() const { return data_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Double-precision scratch plane (1 or 3 channels) used for gradients,
/// per-pixel error maps and adjoint buffers.
struct Field {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<double> data;

  Field() = default;
  Field(int w, int h, int c, double fill = 0.0)
      : width(w),
        height(h),
        channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  double& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

/// The four taps and weights of a bilinear lookup at p. Weights are
/// non-negative and sum to one; coordinates are clamped so that a query on
/// the closing border (u == W-1 or v == H-1) stays inside the image.
struct BilinearTaps {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double w00 = 0.0, w10 = 0.0, w01 = 0.0, w11 = 0.0;
};

/// Compute taps for a point inside [0, W-1] x [0, H-1].
BilinearTaps bilinear_taps(const PixelCoord& p, int width, int height);

/// Sampled RGB value plus in-bounds flag.
struct SampleResult {
  std::array<double, 3> value{0.0, 0.0, 0.0};
  bool valid = false;
};

/// Differentiable bilinear lookup. Out-of-bounds queries (outside
/// [0, W-1] x [0, H-1]) return valid == false and a zero value.
SampleResult bilinear_sample(const ImageBuffer& img, const PixelCoord& p);

/// Forward-difference spatial gradients. dx/dy are 3-channel Fields with
/// the final column (respectively row) zero. Throws std::invalid_argument
/// when the image is smaller than 2x2.
std::pair<Field, Field> image_gradients(const ImageBuffer& img);

/// Forward-difference gradients of a single-channel plane.
std::pair<Field, Field> depth_gradients(const DepthMap& depth);

/// View synthesis by inverse warping.
struct WarpResult {
  ImageBuffer recon;
  ValidityMask mask;
};

/// Reconstruct the target view from a source image: each target pixel is
/// back-projected with its depth, moved through T (target frame -> source
/// frame) and bilinearly sampled in src. Pixels whose depth is not positive,
/// that land behind the camera, or that fall outside the source bounds are
/// reported invalid and left black. An exact identity transform reproduces
/// src bit-for-bit wherever depth is positive.
WarpResult warp_image(const ImageBuffer& src, const DepthMap& target_depth,
                      const Se3Transform& T, const CameraIntrinsics& K);

}  // namespace photovo

#endif  // PHOTOVO_IMAGING_HPP

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

#include "photovo/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace photovo {

namespace {

void require_positive_dims(int width, int height, const char* who) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument(std::string(who) +
                                ": dimensions must be positive");
  }
}

}  // namespace

ImageBuffer::ImageBuffer(int width, int height, float fill)
    : width_(width), height_(height) {
  require_positive_dims(width, height, "ImageBuffer");
  data_.assign(static_cast<std::size_t>(width) * height * 3, fill);
}

bool ImageBuffer::valid() const {
  if (width_ <= 0 || height_ <= 0) return false;
  for (float v : data_) {
    if (!(v >= 0.0f && v <= 1.0f)) return false;
  }
  return true;
}

DepthMap::DepthMap(int width, int height, float fill)
    : width_(width), height_(height) {
  require_positive_dims(width, height, "DepthMap");
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

bool DepthMap::valid() const {
  if (width_ <= 0 || height_ <= 0) return false;
  for (float v : data_) {
    if (!std::isfinite(v) || v < 0.0f) return false;
  }
  return true;
}

InverseDepthMap::InverseDepthMap(int width, int height, float fill)
    : width_(width), height_(height) {
  require_positive_dims(width, height, "InverseDepthMap");
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

bool InverseDepthMap::valid() const {
  if (width_ <= 0 || height_ <= 0) return false;
  for (float v : data_) {
    if (!(v > 0.0f && v < 1.0f)) return false;
  }
  return true;
}

double decode_inverse_depth(double d, const DepthRange& range) {
  if (!range.valid()) {
    throw std::invalid_argument("decode_inverse_depth: bad range");
  }
  const double min_inv = 1.0 / range.max_depth;
  const double max_inv = 1.0 / range.min_depth;
  return 1.0 / (min_inv + d * (max_inv - min_inv));
}

double encode_inverse_depth(double depth, const DepthRange& range) {
  if (!range.valid()) {
    throw std::invalid_argument("encode_inverse_depth: bad range");
  }
  const double min_inv = 1.0 / range.max_depth;
  const double max_inv = 1.0 / range.min_depth;
  double d = depth > 0.0 ? (1.0 / depth - min_inv) / (max_inv - min_inv) : 0.0;
  // Keep the parameter strictly inside (0, 1).
  constexpr double eps = 1e-6;
  return std::clamp(d, eps, 1.0 - eps);
}

DepthMap decode_inverse_depth_map(const InverseDepthMap& inv,
                                  const DepthRange& range) {
  DepthMap out(inv.width(), inv.height());
  for (std::size_t i = 0; i < inv.data().size(); ++i) {
    out.data()[i] =
        static_cast<float>(decode_inverse_depth(inv.data()[i], range));
  }
  return out;
}

InverseDepthMap encode_inverse_depth_map(const DepthMap& depth,
                                         const DepthRange& range) {
  InverseDepthMap out(depth.width(), depth.height());
  for (std::size_t i = 0; i < depth.data().size(); ++i) {
    out.data()[i] =
        static_cast<float>(encode_inverse_depth(depth.data()[i], range));
  }
  return out;
}

ValidityMask::ValidityMask(int width, int height, bool fill)
    : width_(width), height_(height) {
  require_positive_dims(width, height, "ValidityMask");
  data_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

std::size_t ValidityMask::count() const {
  std::size_t n = 0;
  for (auto v : data_) n += v != 0;
  return n;
}

BilinearTaps bilinear_taps(const PixelCoord& p, int width, int height) {
  BilinearTaps t;
  // Clamp the base cell so a query exactly on the closing border uses the
  // last interior cell with a unit weight on its far edge.
  t.x0 = std::min(static_cast<int>(std::floor(p.u)), width - 2);
  t.y0 = std::min(static_cast<int>(std::floor(p.v)), height - 2);
  t.x0 = std::max(t.x0, 0);
  t.y0 = std::max(t.y0, 0);
  t.x1 = std::min(t.x0 + 1, width - 1);
  t.y1 = std::min(t.y0 + 1, height - 1);
  const double fx = p.u - t.x0;
  const double fy = p.v - t.y0;
  t.w00 = (1.0 - fx) * (1.0 - fy);
  t.w10 = fx * (1.0 - fy);
  t.w01 = (1.0 - fx) * fy;
  t.w11 = fx * fy;
  return t;
}

SampleResult bilinear_sample(const ImageBuffer& img, const PixelCoord& p) {
  SampleResult out;
  const int w = img.width(), h = img.height();
  if (w <= 0 || h <= 0) {
    throw std::invalid_argument("bilinear_sample: empty image");
  }
  if (!(p.u >= 0.0 && p.u <= w - 1.0 && p.v >= 0.0 && p.v <= h - 1.0)) {
    return out;
  }
  const BilinearTaps t =
      bilinear_taps(p, std::max(w, 2), std::max(h, 2));
  const int x0 = std::min(t.x0, w - 1), x1 = std::min(t.x1, w - 1);
  const int y0 = std::min(t.y0, h - 1), y1 = std::min(t.y1, h - 1);
  for (int c = 0; c < 3; ++c) {
    out.value[c] = t.w00 * img.at(x0, y0, c) + t.w10 * img.at(x1, y0, c) +
                   t.w01 * img.at(x0, y1, c) + t.w11 * img.at(x1, y1, c);
  }
  out.valid = true;
  return out;
}

std::pair<Field, Field> image_gradients(const ImageBuffer& img) {
  if (img.width() < 2 || img.height() < 2) {
    throw std::invalid_argument("image_gradients: image smaller than 2x2");
  }
  const int w = img.width(), h = img.height();
  Field dx(w, h, 3), dy(w, h, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = img.at(x, y, c);
        if (x + 1 < w) dx.at(x, y, c) = img.at(x + 1, y, c) - v;
        if (y + 1 < h) dy.at(x, y, c) = img.at(x, y + 1, c) - v;
      }
    }
  }
  return {std::move(dx), std::move(dy)};
}

std::pair<Field, Field> depth_gradients(const DepthMap& depth) {
  if (depth.width() < 2 || depth.height() < 2) {
    throw std::invalid_argument("depth_gradients: map smaller than 2x2");
  }
  const int w = depth.width(), h = depth.height();
  Field dx(w, h, 1), dy(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = depth.at(x, y);
      if (x + 1 < w) dx.at(x, y) = depth.at(x + 1, y) - v;
      if (y + 1 < h) dy.at(x, y) = depth.at(x, y + 1) - v;
    }
  }
  return {std::move(dx), std::move(dy)};
}

WarpResult warp_image(const ImageBuffer& src, const DepthMap& target_depth,
                      const Se3Transform& T, const CameraIntrinsics& K) {
  if (src.width() != target_depth.width() ||
      src.height() != target_depth.height()) {
    throw std::invalid_argument("warp_image: image/depth size mismatch");
  }
  if (!K.valid()) {
    throw std::invalid_argument("warp_image: invalid intrinsics");
  }
  const int w = src.width(), h = src.height();
  WarpResult out{ImageBuffer(w, h), ValidityMask(w, h)};

  const bool identity =
      T.R == Eigen::Matrix3d::Identity() && T.t == Eigen::Vector3d::Zero();
  if (identity) {
    // Identity motion maps every pixel onto itself; copying keeps the
    // reconstruction bit-identical to the source.
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!(target_depth.at(x, y) > 0.0f)) continue;
        out.mask.set(x, y, true);
        for (int c = 0; c < 3; ++c) out.recon.at(x, y, c) = src.at(x, y, c);
      }
    }
    return out;
  }

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double d = target_depth.at(x, y);
      if (!(d > 0.0)) continue;
      const Projection proj =
          project_pixel(PixelCoord{static_cast<double>(x),
                                   static_cast<double>(y)},
                        d, T, K);
      if (!proj.valid) continue;
      const SampleResult s = bilinear_sample(src, proj.uv);
      if (!s.valid) continue;
      out.mask.set(x, y, true);
      for (int c = 0; c < 3; ++c) {
        out.recon.at(x, y, c) = static_cast<float>(s.value[c]);
      }
    }
  }
  return out;
}

}  // namespace photovo

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

#include "photovo/geometry.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace photovo {

bool CameraIntrinsics::valid() const {
  return std::isfinite(fx) && std::isfinite(fy) && std::isfinite(cx) &&
         std::isfinite(cy) && fx > 0.0 && fy > 0.0;
}

bool PoseVector::finite() const {
  return t.allFinite() && r.allFinite();
}

Eigen::Matrix4d Se3Transform::matrix() const {
  Eigen::Matrix4d M = Eigen::Matrix4d::Identity();
  M.topLeftCorner<3, 3>() = R;
  M.topRightCorner<3, 1>() = t;
  return M;
}

namespace {

Eigen::Matrix3d rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d R;
  R << 1, 0, 0,
       0, c, -s,
       0, s, c;
  return R;
}

Eigen::Matrix3d rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d R;
  R << c, 0, s,
       0, 1, 0,
       -s, 0, c;
  return R;
}

Eigen::Matrix3d rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d R;
  R << c, -s, 0,
       s, c, 0,
       0, 0, 1;
  return R;
}

// d/da of the single-axis rotations above.
Eigen::Matrix3d drot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d D;
  D << 0, 0, 0,
       0, -s, -c,
       0, c, -s;
  return D;
}

Eigen::Matrix3d drot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d D;
  D << -s, 0, c,
       0, 0, 0,
       -c, 0, -s;
  return D;
}

Eigen::Matrix3d drot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d D;
  D << -s, -c, 0,
       c, -s, 0,
       0, 0, 0;
  return D;
}

}  // namespace

Eigen::Matrix3d euler_to_rotation(const Eigen::Vector3d& r) {
  if (!r.allFinite()) {
    throw std::invalid_argument("euler_to_rotation: non-finite angle");
  }
  return rot_z(r.z()) * rot_y(r.y()) * rot_x(r.x());
}

std::array<Eigen::Matrix3d, 3> euler_rotation_derivatives(
    const Eigen::Vector3d& r) {
  if (!r.allFinite()) {
    throw std::invalid_argument("euler_rotation_derivatives: non-finite angle");
  }
  const Eigen::Matrix3d Rx = rot_x(r.x());
  const Eigen::Matrix3d Ry = rot_y(r.y());
  const Eigen::Matrix3d Rz = rot_z(r.z());
  return {Rz * Ry * drot_x(r.x()), Rz * drot_y(r.y()) * Rx,
          drot_z(r.z()) * Ry * Rx};
}

Eigen::Vector3d euler_from_rotation(const Eigen::Matrix3d& R) {
  // R = Rz*Ry*Rx gives R(2,0) = -sin(ry). The gimbal branch keeps the
  // conversion total; callers in this library stay far from |ry| = pi/2.
  const double sy = -R(2, 0);
  Eigen::Vector3d r;
  if (std::abs(sy) >= 1.0 - 1e-12) {
    const double sign = sy > 0.0 ? 1.0 : -1.0;
    r.y() = sign * M_PI / 2.0;
    r.x() = 0.0;
    r.z() = std::atan2(-sign * R(0, 1), R(1, 1));
  } else {
    r.y() = std::asin(sy);
    r.x() = std::atan2(R(2, 1), R(2, 2));
    r.z() = std::atan2(R(1, 0), R(0, 0));
  }
  return r;
}

Se3Transform pose_to_transform(const PoseVector& u) {
  if (!u.finite()) {
    throw std::invalid_argument("pose_to_transform: non-finite pose");
  }
  return Se3Transform{euler_to_rotation(u.r), u.t};
}

PoseVector transform_to_pose(const Se3Transform& T) {
  PoseVector u;
  u.r = euler_from_rotation(T.R);
  u.t = T.t;
  return u;
}

Se3Transform compose(const Se3Transform& a, const Se3Transform& b) {
  return Se3Transform{a.R * b.R, a.R * b.t + a.t};
}

Se3Transform invert(const Se3Transform& T) {
  Se3Transform inv;
  inv.R = T.R.transpose();
  inv.t = -(inv.R * T.t);
  return inv;
}

bool is_rotation(const Eigen::Matrix3d& R, double tol) {
  const double ortho = (R.transpose() * R - Eigen::Matrix3d::Identity()).norm();
  return ortho <= tol && std::abs(R.determinant() - 1.0) <= tol;
}

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& M) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d R = svd.matrixU() * svd.matrixV().transpose();
  if (R.determinant() < 0.0) {
    Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
    flip(2, 2) = -1.0;
    R = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return R;
}

Projection project_pixel(const PixelCoord& p, double depth,
                         const Se3Transform& T, const CameraIntrinsics& K) {
  if (!K.valid()) {
    throw std::invalid_argument("project_pixel: invalid intrinsics");
  }
  if (!(depth > 0.0) || !std::isfinite(depth)) {
    throw std::invalid_argument("project_pixel: depth must be positive");
  }

  // An exact identity transform is the identity map on (pixel, depth);
  // short-circuit so the round trip through camera coordinates cannot
  // perturb the result by a rounding ulp.
  if (T.R == Eigen::Matrix3d::Identity() && T.t == Eigen::Vector3d::Zero()) {
    return Projection{p, depth, true};
  }

  const Eigen::Vector3d ray((p.u - K.cx) / K.fx, (p.v - K.cy) / K.fy, 1.0);
  const Eigen::Vector3d X = T.R * (depth * ray) + T.t;
  if (!(X.z() > kMinProjectedDepth)) {
    return Projection{PixelCoord{}, X.z(), false};
  }
  Projection out;
  out.uv.u = K.fx * (X.x() / X.z()) + K.cx;
  out.uv.v = K.fy * (X.y() / X.z()) + K.cy;
  out.depth = X.z();
  out.valid = true;
  return out;
}

double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * M_PI);
  if (w <= -M_PI) w += 2.0 * M_PI;
  return w;
}

}  // namespace photovo

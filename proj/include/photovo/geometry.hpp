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

#ifndef PHOTOVO_GEOMETRY_HPP
#define PHOTOVO_GEOMETRY_HPP

#include <array>

#include <Eigen/Core>

namespace photovo {

/// Pinhole camera intrinsics. No distortion model: all imagery handled by
/// this library is assumed rectified.
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;

  bool valid() const;
};

/// Six-dof camera motion as a translation plus Euler angles, the
/// parameterization the pose estimator optimizes directly.
///
/// Rotation components are (rx, ry, rz) in radians and are composed as
/// R = Rz(rz) * Ry(ry) * Rx(rx) acting on column vectors.
struct PoseVector {
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  Eigen::Vector3d r = Eigen::Vector3d::Zero();

  static PoseVector zero() { return PoseVector{}; }
  bool finite() const;
};

/// Rigid transform as an explicit rotation matrix plus translation.
struct Se3Transform {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  static Se3Transform identity() { return Se3Transform{}; }

  /// 4x4 homogeneous form.
  Eigen::Matrix4d matrix() const;

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return R * p + t; }
};

/// Continuous pixel location, origin at the center of the top-left pixel.
struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
};

/// Result of projecting a target pixel into a source view.
struct Projection {
  PixelCoord uv;
  double depth = 0.0;  ///< z in the source camera frame
  bool valid = false;  ///< false when the point lands behind the camera
};

/// Points with projected z at or below this threshold (meters) are treated
/// as behind the camera and flagged invalid instead of being projected.
inline constexpr double kMinProjectedDepth = 1e-6;

/// Rotation matrix from Euler angles, composed as Rz(rz)*Ry(ry)*Rx(rx).
/// Throws std::invalid_argument when any component is not finite.
Eigen::Matrix3d euler_to_rotation(const Eigen::Vector3d& r);

/// Partial derivatives of euler_to_rotation with respect to (rx, ry, rz).
std::array<Eigen::Matrix3d, 3> euler_rotation_derivatives(
    const Eigen::Vector3d& r);

/// Euler angles (rx, ry, rz) recovering R = Rz*Ry*Rx. Angles come back in
/// (-pi, pi]; at the gimbal singularity (|R(2,0)| == 1) rx is fixed to zero.
Eigen::Vector3d euler_from_rotation(const Eigen::Matrix3d& R);

/// Expand a pose vector into its rigid transform.
Se3Transform pose_to_transform(const PoseVector& u);

/// Inverse of pose_to_transform (via euler_from_rotation).
PoseVector transform_to_pose(const Se3Transform& T);

/// Composition: the transform applying b first, then a.
Se3Transform compose(const Se3Transform& a, const Se3Transform& b);

/// Group inverse. R stays orthonormal by construction (transpose).
Se3Transform invert(const Se3Transform& T);

/// True when R is orthonormal with det +1 to within tol (Frobenius).
bool is_rotation(const Eigen::Matrix3d& R, double tol = 1e-9);

/// Nearest rotation matrix in the Frobenius sense (sign-corrected SVD).
/// Used to re-orthonormalize rotations parsed from text files.
Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& M);

/// Project pixel p with the given target-view depth into the source view:
/// back-project with K, move through T (target frame -> source frame),
/// project with K again. Requires depth > 0 and valid intrinsics; a
/// transformed point with z <= kMinProjectedDepth yields valid == false.
Projection project_pixel(const PixelCoord& p, double depth,
                         const Se3Transform& T, const CameraIntrinsics& K);

/// Wrap an angle into (-pi, pi].
double wrap_angle(double a);

}  // namespace photovo

#endif  // PHOTOVO_GEOMETRY_HPP

// Copyright 2026 The whirl-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef WHIRL_GEOMETRY_H_
#define WHIRL_GEOMETRY_H_

#include <Eigen/Dense>

namespace whirl {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Rotation from yaw-pitch-roll angles (intrinsic Z-Y-X).
Mat3 YprToRotation(const Vec3& ypr);
Vec3 RotationToYpr(const Mat3& rotation);

// Wraps an angle into (-pi, pi].
double WrapAngle(double angle);

struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform Identity() { return {}; }
  static RigidTransform FromYprTranslation(const Vec3& ypr, const Vec3& t);
  // Camera pose looking from `eye` toward `target`; camera z is the optical
  // axis, x points right in the image and y points down.
  static RigidTransform LookAt(const Vec3& eye, const Vec3& target,
                               const Vec3& up = Vec3::UnitZ());

  Vec3 Apply(const Vec3& p) const { return rotation * p + translation; }
  RigidTransform Inverse() const;
  RigidTransform Compose(const RigidTransform& inner) const;

  // Rotation determinant within `tol` of one and orthonormal columns.
  bool IsProper(double tol = 1e-9) const;
};

struct PinholeIntrinsics {
  double fx = 600.0;
  double fy = 600.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;

  // Pixel of a camera-frame point; requires p.z() > 0.
  Vec2 Project(const Vec3& p) const;
  Vec3 Deproject(const Vec2& pixel, double depth) const;
  bool InImage(const Vec2& pixel) const;
};

// Axis-aligned box in the robot frame.
struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  bool Contains(const Vec3& p) const;
  Vec3 Center() const { return 0.5 * (lo + hi); }
  // Slab test for the closed segment [a, b].
  bool IntersectsSegment(const Vec3& a, const Vec3& b) const;
};

}  // namespace whirl

#endif  // WHIRL_GEOMETRY_H_

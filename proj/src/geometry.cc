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

#include "whirl/geometry.h"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace whirl {

Mat3 YprToRotation(const Vec3& ypr) {
  return (Eigen::AngleAxisd(ypr.x(), Vec3::UnitZ()) *
          Eigen::AngleAxisd(ypr.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(ypr.z(), Vec3::UnitX()))
      .toRotationMatrix();
}

Vec3 RotationToYpr(const Mat3& r) {
  const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  return {yaw, pitch, roll};
}

double WrapAngle(double angle) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double wrapped = std::fmod(angle + std::numbers::pi, kTwoPi);
  if (wrapped < 0.0) wrapped += kTwoPi;
  return wrapped - std::numbers::pi;
}

RigidTransform RigidTransform::FromYprTranslation(const Vec3& ypr,
                                                  const Vec3& t) {
  return {YprToRotation(ypr), t};
}

RigidTransform RigidTransform::LookAt(const Vec3& eye, const Vec3& target,
                                      const Vec3& up) {
  const Vec3 z = (target - eye).normalized();
  Vec3 x = z.cross(up);
  if (x.norm() < 1e-12) x = z.cross(Vec3::UnitX());
  x.normalize();
  const Vec3 y = z.cross(x);
  RigidTransform t;
  t.rotation.col(0) = x;
  t.rotation.col(1) = y;
  t.rotation.col(2) = z;
  t.translation = eye;
  return t;
}

RigidTransform RigidTransform::Inverse() const {
  RigidTransform inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

RigidTransform RigidTransform::Compose(const RigidTransform& inner) const {
  return {rotation * inner.rotation, rotation * inner.translation + translation};
}

bool RigidTransform::IsProper(double tol) const {
  if (std::abs(rotation.determinant() - 1.0) > tol) return false;
  return (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff() <=
         tol;
}

Vec2 PinholeIntrinsics::Project(const Vec3& p) const {
  return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy};
}

Vec3 PinholeIntrinsics::Deproject(const Vec2& pixel, double depth) const {
  return {(pixel.x() - cx) * depth / fx, (pixel.y() - cy) * depth / fy, depth};
}

bool PinholeIntrinsics::InImage(const Vec2& pixel) const {
  return pixel.x() >= 0.0 && pixel.y() >= 0.0 && pixel.x() < width &&
         pixel.y() < height;
}

bool Box::Contains(const Vec3& p) const {
  return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
}

bool Box::IntersectsSegment(const Vec3& a, const Vec3& b) const {
  double t0 = 0.0;
  double t1 = 1.0;
  const Vec3 d = b - a;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d[i]) < 1e-15) {
      if (a[i] < lo[i] || a[i] > hi[i]) return false;
      continue;
    }
    double ta = (lo[i] - a[i]) / d[i];
    double tb = (hi[i] - a[i]) / d[i];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

}  // namespace whirl

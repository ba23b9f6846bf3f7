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

#include "whirl/sim_env.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "whirl/errors.h"

namespace whirl::sim {
namespace {

Vec3 ClampNorm(const Vec3& v, double max_norm) {
  const double n = v.norm();
  if (n <= max_norm || n == 0.0) return v;
  return v * (max_norm / n);
}

double MoveToward(double from, double to, double max_step) {
  return from + std::clamp(to - from, -max_step, max_step);
}

// Point at arc-length fraction s in [0, 1] along a polyline.
Vec3 AlongPolyline(const std::vector<Vec3>& pts, double s) {
  double total = 0.0;
  for (size_t i = 1; i < pts.size(); ++i) total += (pts[i] - pts[i - 1]).norm();
  if (total <= 0.0) return pts.back();
  double remaining = std::clamp(s, 0.0, 1.0) * total;
  for (size_t i = 1; i < pts.size(); ++i) {
    const double len = (pts[i] - pts[i - 1]).norm();
    if (remaining <= len && len > 0.0) {
      return pts[i - 1] + (pts[i] - pts[i - 1]) * (remaining / len);
    }
    remaining -= len;
  }
  return pts.back();
}

bool SegmentBlocked(const Scene& scene, const Vec3& a, const Vec3& b) {
  return std::any_of(scene.obstacles.begin(), scene.obstacles.end(),
                     [&](const Box& box) { return box.IntersectsSegment(a, b); });
}

// Moves the handle of an attached joint by the component of `delta` along
// the joint's motion direction.
double ProjectOntoJoint(const JointSpec& joint, double value, const Vec3& delta) {
  if (joint.kind == JointKind::kPrismatic) {
    return joint.Clamp(value + delta.dot(joint.axis));
  }
  const Vec3 r = joint.HandlePosition(value) - joint.origin;
  const Vec3 r_perp = r - r.dot(joint.axis) * joint.axis;
  const double radius = r_perp.norm();
  if (radius < 1e-9) return value;
  const Vec3 tangent = joint.axis.cross(r_perp) / radius;
  return joint.Clamp(value + delta.dot(tangent) / radius);
}

struct Schedule {
  int n_close;
  int n_grip;
  int n_open;
};

Schedule MakeSchedule(const WaypointAction& action, const StepConfig& cfg) {
  const int h = cfg.horizon;
  Schedule s;
  s.n_close = std::clamp(static_cast<int>(std::lround(action.t_close_frac * h)), 1,
                         std::max(1, h - cfg.close_dwell_steps - 1));
  s.n_grip = s.n_close + cfg.close_dwell_steps;
  s.n_open = std::clamp(static_cast<int>(std::lround(action.t_open_frac * h)),
                        s.n_grip + 1, std::max(s.n_grip + 1, h));
  return s;
}

}  // namespace

Vec3 JointSpec::HandlePosition(double value) const {
  if (kind == JointKind::kPrismatic) return origin + handle_offset + axis * value;
  return origin + Eigen::AngleAxisd(value, axis) * handle_offset;
}

double JointSpec::Clamp(double value) const { return std::clamp(value, lower, upper); }

void ValidateScene(const Scene& scene) {
  for (const JointSpec& j : scene.joints) {
    if (std::abs(j.axis.norm() - 1.0) > 1e-9) {
      throw ConfigError("joint '" + j.name + "' axis is not unit length");
    }
    if (!(j.lower <= j.upper)) {
      throw ConfigError("joint '" + j.name + "' has inverted limits");
    }
    if (j.initial_value < j.lower || j.initial_value > j.upper) {
      throw ConfigError("joint '" + j.name + "' initial value outside limits");
    }
  }
  for (const FreeObject& o : scene.objects) {
    if (!(o.grasp_radius > 0.0)) {
      throw ConfigError("object '" + o.name + "' needs a positive grasp radius");
    }
  }
  if (!scene.camera.camera_to_robot.IsProper()) {
    throw ConfigError("camera extrinsic is not a proper rigid transform");
  }
  if (!scene.camera.calibration_error.IsProper()) {
    throw ConfigError("calibration error is not a proper rigid transform");
  }
  const GoalSpec& g = scene.goal;
  if (!(g.success_tolerance > 0.0)) {
    throw ConfigError("goal success tolerance must be positive");
  }
  const size_t n = g.kind == GoalKind::kJointTarget ? scene.joints.size()
                                                   : scene.objects.size();
  if (g.index < 0 || static_cast<size_t>(g.index) >= n) {
    throw ConfigError("goal references a missing joint or object");
  }
}

EnvState Reset(const Scene& scene, uint64_t /*seed*/) {
  // The simulation is kinematic and consumes no randomness; the seed is part
  // of the signature so stochastic scene variants can be added without
  // changing callers.
  ValidateScene(scene);
  EnvState state;
  state.joint_values.reserve(scene.joints.size());
  for (const JointSpec& j : scene.joints) state.joint_values.push_back(j.initial_value);
  for (const FreeObject& o : scene.objects) state.object_poses.push_back(o.initial_pose);
  state.ee = scene.home;
  state.ee.aperture = std::clamp(state.ee.aperture, 0.0, 1.0);
  return state;
}

EnvState Step(const Scene& scene, const EnvState& state,
              const EndEffectorState& ee_target, const StepConfig& cfg) {
  EnvState next = state;
  next.time_index = state.time_index + 1;

  const double prev_aperture = state.ee.aperture;
  next.ee.aperture = std::clamp(
      MoveToward(prev_aperture, std::clamp(ee_target.aperture, 0.0, 1.0),
                 cfg.max_aperture_step),
      0.0, 1.0);
  if (next.attachment && next.ee.aperture > cfg.open_threshold) {
    next.attachment.reset();
  }

  Vec3 ypr_step;
  for (int i = 0; i < 3; ++i) {
    const double err = WrapAngle(ee_target.ypr[i] - state.ee.ypr[i]);
    ypr_step[i] = std::clamp(err, -cfg.max_rotation_step, cfg.max_rotation_step);
  }
  next.ee.ypr = state.ee.ypr + ypr_step;

  Vec3 delta = ClampNorm(ee_target.position - state.ee.position,
                         cfg.max_translation_step);
  if (next.blocked) delta.setZero();

  if (next.attachment && next.attachment->kind == Attachment::Kind::kJointHandle) {
    const int j = next.attachment->index;
    const JointSpec& joint = scene.joints[j];
    next.joint_values[j] = ProjectOntoJoint(joint, state.joint_values[j], delta);
    next.ee.position = joint.HandlePosition(next.joint_values[j]);
  } else {
    const Vec3 proposed = state.ee.position + delta;
    if (!delta.isZero() && SegmentBlocked(scene, state.ee.position, proposed)) {
      next.blocked = true;
    } else {
      next.ee.position = proposed;
    }
    if (next.attachment) {
      Pose& obj = next.object_poses[next.attachment->index];
      obj.position = next.ee.position + next.attachment->offset;
      obj.ypr = next.ee.ypr + next.attachment->ypr_offset;
    }
  }

  // The gripper grasps whatever is within reach at the moment it closes.
  const bool closing_now = prev_aperture >= cfg.close_threshold &&
                           next.ee.aperture < cfg.close_threshold;
  if (!next.attachment && closing_now) {
    double best = std::numeric_limits<double>::infinity();
    std::optional<Attachment> grab;
    for (size_t j = 0; j < scene.joints.size(); ++j) {
      const double d =
          (scene.joints[j].HandlePosition(next.joint_values[j]) - next.ee.position).norm();
      if (d < cfg.grasp_radius && d < best) {
        best = d;
        grab = Attachment{Attachment::Kind::kJointHandle, static_cast<int>(j)};
      }
    }
    for (size_t o = 0; o < scene.objects.size(); ++o) {
      const Pose& pose = next.object_poses[o];
      const double d = (pose.position - next.ee.position).norm();
      if (d < scene.objects[o].grasp_radius && d < best) {
        best = d;
        grab = Attachment{Attachment::Kind::kObject, static_cast<int>(o),
                          pose.position - next.ee.position, pose.ypr - next.ee.ypr};
      }
    }
    if (grab) {
      next.attachment = grab;
      if (grab->kind == Attachment::Kind::kJointHandle) {
        next.ee.position =
            scene.joints[grab->index].HandlePosition(next.joint_values[grab->index]);
      }
    }
  }
  return next;
}

int PhaseAt(const WaypointAction& action, int k, const StepConfig& cfg) {
  const Schedule s = MakeSchedule(action, cfg);
  if (k <= s.n_close) return 0;
  if (k <= s.n_grip) return 1;
  if (k <= s.n_open) return 2;
  return 3;
}

Rollout ExecuteAction(const Scene& scene, const WaypointAction& action,
                      uint64_t seed, const StepConfig& cfg) {
  const Schedule s = MakeSchedule(action, cfg);
  std::vector<Vec3> carry{action.w_interaction};
  carry.insert(carry.end(), action.w_mid.begin(), action.w_mid.end());
  carry.push_back(action.w_end);

  Rollout rollout;
  rollout.frames.reserve(cfg.horizon);
  EnvState state = Reset(scene, seed);
  const Vec3 start = state.ee.position;
  int phase = 0;
  for (int k = 1; k <= cfg.horizon; ++k) {
    const int p = PhaseAt(action, k, cfg);
    if (p != phase) {
      state.blocked = false;
      phase = p;
    }
    EndEffectorState target;
    target.ypr = action.theta_ypr;
    switch (p) {
      case 0:
        target.position = start + (action.w_interaction - start) *
                                      (static_cast<double>(k) / s.n_close);
        target.aperture = 1.0;
        break;
      case 1:
        target.position = action.w_interaction;
        target.aperture = action.gripper;
        break;
      case 2:
        target.position = AlongPolyline(
            carry, static_cast<double>(k - s.n_grip) / (s.n_open - s.n_grip));
        target.aperture = action.gripper;
        break;
      default:
        target.position = action.w_end;
        target.aperture = 1.0;
        break;
    }
    state = Step(scene, state, target, cfg);
    rollout.frames.push_back(state);
  }
  return rollout;
}

bool GoalSatisfied(const Scene& scene, const EnvState& state) {
  const GoalSpec& g = scene.goal;
  if (g.kind == GoalKind::kJointTarget) {
    if (g.index < 0 || static_cast<size_t>(g.index) >= state.joint_values.size()) {
      throw ConfigError("goal joint index out of range");
    }
    return std::abs(state.joint_values[g.index] - g.target_value) <=
           g.success_tolerance;
  }
  if (g.index < 0 || static_cast<size_t>(g.index) >= state.object_poses.size()) {
    throw ConfigError("goal object index out of range");
  }
  return g.region.Contains(state.object_poses[g.index].position);
}

bool Success(const Scene& scene, const Rollout& rollout) {
  if (rollout.frames.empty()) return false;
  return GoalSatisfied(scene, rollout.frames.back());
}

}  // namespace whirl::sim

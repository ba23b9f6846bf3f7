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

#ifndef WHIRL_SIM_ENV_H_
#define WHIRL_SIM_ENV_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "whirl/action.h"
#include "whirl/geometry.h"

// Deterministic kinematic simulation of tabletop manipulation scenes: drawers,
// doors and dishwashers as articulated joints, plus free objects that can be
// picked and placed. The gripper snaps onto a handle or object when it closes
// within the grasp radius.
namespace whirl::sim {

enum class JointKind { kPrismatic, kRevolute };

struct JointSpec {
  std::string name;
  JointKind kind = JointKind::kPrismatic;
  Vec3 origin = Vec3::Zero();  // joint frame position, robot frame
  Vec3 axis = Vec3::UnitX();   // unit; translation or rotation axis
  double lower = 0.0;
  double upper = 0.0;
  Vec3 handle_offset = Vec3::Zero();  // joint frame to handle at value 0
  double initial_value = 0.0;

  Vec3 HandlePosition(double value) const;
  double Clamp(double value) const;
};

struct Pose {
  Vec3 position = Vec3::Zero();
  Vec3 ypr = Vec3::Zero();

  bool operator==(const Pose&) const = default;
};

struct FreeObject {
  std::string name;
  Pose initial_pose;
  double grasp_radius = 0.05;
};

enum class GoalKind { kJointTarget, kObjectInRegion };

struct GoalSpec {
  GoalKind kind = GoalKind::kJointTarget;
  int index = 0;  // joint index or object index depending on kind
  double target_value = 0.0;
  Box region;
  double success_tolerance = 0.05;
};

struct CameraSpec {
  RigidTransform camera_to_robot;  // true extrinsic
  PinholeIntrinsics intrinsics;
  // Error in the robot's calibration: the robot believes the extrinsic is
  // calibration_error * camera_to_robot.
  RigidTransform calibration_error;

  RigidTransform BelievedCameraToRobot() const {
    return calibration_error.Compose(camera_to_robot);
  }
};

struct EndEffectorState {
  Vec3 position = Vec3::Zero();
  Vec3 ypr = Vec3::Zero();     // yaw, pitch, roll
  double aperture = 1.0;       // 1 = fully open

  bool operator==(const EndEffectorState&) const = default;
};

// How the scripted human demonstrator moves in this scene. Only demo
// generation reads it.
struct DemonstratorSpec {
  Vec3 hand_offset = Vec3::Zero();        // hand centre minus grasp point
  Vec3 hand_start_offset{-0.3, -0.25, -0.1};  // start relative to grasp point
  Vec3 wrist_ypr = Vec3::Zero();          // wrist rotation, camera frame
  std::vector<Vec3> carry_via;            // pick-and-place carry path
  double start_jitter = 0.03;             // per-seed start position spread
};

struct Scene {
  std::string id;
  std::vector<JointSpec> joints;
  std::vector<FreeObject> objects;
  std::vector<Box> obstacles;  // static slabs (shelves)
  CameraSpec camera;
  GoalSpec goal;
  EndEffectorState home{Vec3(0.2, 0.0, 0.9), Vec3::Zero(), 1.0};
  DemonstratorSpec demonstrator;
};

// Throws ConfigError when a type invariant is violated.
void ValidateScene(const Scene& scene);

struct StepConfig {
  double max_translation_step = 0.02;  // metres per step
  double max_rotation_step = 0.05;     // radians per step, per angle
  double max_aperture_step = 0.2;
  double close_threshold = 0.3;
  double open_threshold = 0.7;
  double grasp_radius = 0.06;  // for joint handles; objects carry their own
  int horizon = 300;
  int close_dwell_steps = 8;   // steps holding at w_interaction while closing
};

struct Attachment {
  enum class Kind { kJointHandle, kObject };
  Kind kind = Kind::kJointHandle;
  int index = 0;
  Vec3 offset = Vec3::Zero();  // object position minus ee position
  Vec3 ypr_offset = Vec3::Zero();

  bool operator==(const Attachment&) const = default;
};

struct EnvState {
  std::vector<double> joint_values;
  std::vector<Pose> object_poses;
  std::optional<Attachment> attachment;
  EndEffectorState ee;
  int time_index = 0;
  bool blocked = false;  // ee hit an obstacle; frozen for the current phase

  bool operator==(const EnvState&) const = default;
};

// One frame per simulation step.
struct Rollout {
  std::vector<EnvState> frames;
};

EnvState Reset(const Scene& scene, uint64_t seed);

// Advances one step toward `ee_target`. Never throws; all inputs are clamped.
EnvState Step(const Scene& scene, const EnvState& state,
              const EndEffectorState& ee_target, const StepConfig& cfg = {});

// Executes the three-phase waypoint trajectory: approach w_interaction with
// the gripper open, close per schedule, carry through w_mid to w_end, open.
Rollout ExecuteAction(const Scene& scene, const WaypointAction& action,
                      uint64_t seed, const StepConfig& cfg = {});

bool GoalSatisfied(const Scene& scene, const EnvState& state);
// Judges the final frame. Throws ConfigError for an out-of-range goal index.
bool Success(const Scene& scene, const Rollout& rollout);

// Index of the trajectory phase (approach, close, carry, release) active at
// step k in 1..horizon.
int PhaseAt(const WaypointAction& action, int k, const StepConfig& cfg);

}  // namespace whirl::sim

#endif  // WHIRL_SIM_ENV_H_

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

#ifndef WHIRL_PRIOR_H_
#define WHIRL_PRIOR_H_

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "whirl/action.h"
#include "whirl/demo.h"
#include "whirl/sim_env.h"

// Turns a demonstration's hand detections into a robot-frame waypoint prior.
namespace whirl::prior {

// The prior has the same layout as an executable action.
using Prior = WaypointAction;

// Least-squares polynomial smoothing weights for a centred window. Throws
// ParameterError unless window is odd, >= 3 and polyorder < window.
Eigen::VectorXd SavgolCoefficients(int window, int polyorder);

// Filters `signal` with mirrored padding at both edges.
Eigen::VectorXd SavgolFilter(const Eigen::VectorXd& signal, int window, int polyorder);

// One-hot encodes the classes, smooths each channel and takes the per-frame
// argmax; ties resolve to the unfiltered class.
std::vector<demo::ContactClass> SmoothContacts(const std::vector<demo::ContactClass>& contacts,
                                               int window, int polyorder);

struct InteractionWindow {
  int t_interaction = 0;
  int t_end = 0;
  demo::ContactClass segment_contact = demo::ContactClass::kNone;

  bool operator==(const InteractionWindow&) const = default;
};

// Longest run of one non-none class, at least `min_len` frames; ties go to
// the earliest run. Throws ExtractionError when nothing qualifies.
InteractionWindow DetectWindow(const std::vector<demo::ContactClass>& smoothed,
                               int min_len = 5);

struct ExtractionConfig {
  int savgol_window = 7;
  int savgol_polyorder = 2;
  int min_run = 5;
  double waypoint_sigma = 0.01;          // metres
  std::vector<double> mid_fractions{0.5};
};

struct HandPrior {
  Vec3 h_interaction = Vec3::Zero();
  std::vector<Vec3> h_mid;
  Vec3 h_end = Vec3::Zero();
  Vec3 theta_hand = Vec3::Zero();
  std::vector<int> open_close;  // o_t = 1 while the hand is closed
};

// Camera-frame hand position recovered from a detection box and its depth.
Vec3 DeprojectHand(const demo::HandFrame& frame, const PinholeIntrinsics& intrinsics);

// Samples the waypoints around the detected start and end of the interaction.
HandPrior ExtractHandPrior(const demo::DemoVideo& demo, const InteractionWindow& window,
                           const PinholeIntrinsics& intrinsics,
                           const ExtractionConfig& cfg, uint64_t rng_seed);

// Maps camera-frame hand quantities into the robot frame using the robot's
// believed camera extrinsic. Throws MappingError for points behind the camera.
Prior MapToRobot(const HandPrior& hand, const RigidTransform& camera_to_robot);

// Inverse of the positional part of MapToRobot.
Vec3 RobotToCamera(const Vec3& w, const RigidTransform& camera_to_robot);

// Robot-specific wrist heuristic. The simulated robot uses the identity.
Vec3 RemapWrist(const Vec3& theta_hand);

struct ExtractedPrior {
  InteractionWindow window;
  Prior prior;
};

// Full pipeline: smooth contacts, detect the window, sample, map.
ExtractedPrior ExtractPrior(const demo::DemoVideo& demo, const sim::Scene& scene,
                            const ExtractionConfig& cfg, uint64_t rng_seed);

}  // namespace whirl::prior

#endif  // WHIRL_PRIOR_H_

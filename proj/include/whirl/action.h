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

#ifndef WHIRL_ACTION_H_
#define WHIRL_ACTION_H_

#include <vector>

#include <Eigen/Dense>

#include "whirl/geometry.h"

namespace whirl {

// Waypoint-parameterized robot action. With a single mid waypoint the
// continuous part flattens to 13 values (3 + 3 + 3 + 3 + 1), followed by the
// two gripper schedule fractions.
struct WaypointAction {
  Vec3 w_interaction = Vec3::Zero();
  std::vector<Vec3> w_mid{Vec3::Zero()};
  Vec3 w_end = Vec3::Zero();
  Vec3 theta_ypr = Vec3::Zero();
  double gripper = 0.0;  // commanded aperture while closed; 0 = fully closed
  double t_close_frac = 0.3;
  double t_open_frac = 0.7;

  int ContinuousDim() const { return 3 * static_cast<int>(w_mid.size()) + 10; }
  int Dim() const { return ContinuousDim() + 2; }

  Eigen::VectorXd Flatten() const;
  static WaypointAction Unflatten(const Eigen::VectorXd& flat, int num_mid = 1);
};

// Smallest gap kept between the close and open fractions after clamping.
inline constexpr double kMinScheduleGap = 0.05;

// Applies a residual to an action and re-clamps it: gripper into [0, 1],
// schedule fractions into [0, 1] with t_close < t_open.
WaypointAction ApplyResidual(const WaypointAction& base,
                             const Eigen::VectorXd& residual);

}  // namespace whirl

#endif  // WHIRL_ACTION_H_
